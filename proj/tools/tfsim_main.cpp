#include "tfsim/interference.hpp"
#include "tfsim/pipeline.hpp"
#include "tfsim/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

namespace {

namespace fs = std::filesystem;
using namespace tfsim;

/// --out beats TFSIM_OUT_DIR beats ./tfsim-out; the leaf name is appended
/// only when the directory was not given explicitly.
fs::path resolve_out_dir(const std::string& cli_out, const std::string& leaf) {
    if (!cli_out.empty())
        return cli_out;
    if (const char* env = std::getenv("TFSIM_OUT_DIR"))
        return fs::path(env) / leaf;
    return fs::path("tfsim-out") / leaf;
}

void print_qber(const char* label, const analysis::QberEstimate& q) {
    std::printf("  %-12s e = %.6f +- %.6f", label, q.e, q.uncertainty);
    if (q.sigma_phi_rad > 0.0)
        std::printf("  (from sigma = %.4f rad)", q.sigma_phi_rad);
    if (q.out_of_domain)
        std::printf("  [outside small-phase validity]");
    std::printf("\n");
}

void print_crossings(const analysis::SigmaCurve& curve) {
    for (const auto& c : curve.crossings) {
        std::printf("  sigma = %.4f rad (QBER %.1f%%): ", c.sigma_rad, 100.0 * c.qber);
        if (c.found)
            std::printf("reached at t_a = %.4g s\n", c.t_a_s);
        else
            std::printf("not reached on the grid\n");
    }
}

int cmd_simulate(const std::string& scenario_path, bool seed_set,
                 std::uint64_t seed, const std::string& out_opt) {
    scenario::Scenario sc = scenario::load_scenario(scenario_path);
    if (seed_set)
        sc.seed = seed;

    fs::path out_dir = resolve_out_dir(out_opt, sc.name);
    pipeline::RunReport rep = pipeline::run_scenario(sc, out_dir);

    std::printf("scenario      %s\n", rep.name.c_str());
    std::printf("hash          %s\n", rep.hash.c_str());
    std::printf("seed          %llu\n", static_cast<unsigned long long>(rep.seed));
    std::printf("output        %s\n", out_dir.string().c_str());
    std::printf("link          %.0f km, %.1f dB total (Alice %.0f km / %.1f dB, "
                "Bob %.0f km / %.1f dB)\n",
                rep.loss.total_km, rep.loss.total_db, rep.loss.alice_qkd_km,
                rep.loss.alice_qkd_db, rep.loss.bob_qkd_km, rep.loss.bob_qkd_db);
    std::printf("timing        skew %.4g s, arm unbalance delay %.4g s\n",
                rep.timing.skew_s, rep.timing.unbalance_delay_s);
    if (sc.run.stabilization) {
        std::printf("loop          closed: rms %.4g -> %.4g rad, suppression "
                    "%.1f dB below %.3g kHz\n",
                    rep.loop.open_loop_rms_rad, rep.loop.closed_loop_rms_rad,
                    rep.loop.suppression_db, rep.loop.in_band_hz / 1e3);
    } else {
        std::printf("loop          open (stabilization disabled), rms %.4g rad\n",
                    rep.loop.open_loop_rms_rad);
    }
    std::printf("stability     sigma(%.4g s) = %.4f rad\n", rep.sigma_short_t_a_s,
                rep.sigma_short_rad);
    print_crossings(rep.sigma);
    std::printf("qber\n");
    print_qber("small-phase", rep.qber_small);
    print_qber("integral", rep.qber_integral);
    if (rep.qber_counts_valid)
        print_qber("counts", rep.qber_counts);
    else
        std::printf("  %-12s unavailable: %s\n", "counts",
                    rep.qber_counts_error.c_str());
    std::printf("counts        correct %zu (%.4g /s), error %zu (%.4g /s), "
                "window %.4g s\n",
                rep.counting.counts_correct, rep.counting.measured_rate_correct_hz,
                rep.counting.counts_error, rep.counting.measured_rate_error_hz,
                rep.counting.duration_s);
    std::printf("files         report.json");
    for (const auto& f : rep.files)
        std::printf(", %s", f.name.c_str());
    std::printf("\n");

    if (rep.loop.oscillation_detected) {
        std::fprintf(stderr,
                     "instability detected: the loop error exceeds the open-loop "
                     "level (oscillation); outputs were still written\n");
        return 3;
    }
    return 0;
}

int cmd_analyze(const std::string& trace_path, const std::string& ta_grid,
                const std::string& out_opt) {
    scenario::AnalysisConfig cfg;
    if (!ta_grid.empty()) {
        double lo = 0.0, hi = 0.0;
        int ppd = 0;
        if (std::sscanf(ta_grid.c_str(), "%lf:%lf:%d", &lo, &hi, &ppd) != 3 ||
            !(lo > 0.0) || !(hi > lo) || ppd < 1)
            throw scenario::ConfigError(
                "--ta-grid expects MIN:MAX:POINTS_PER_DECADE with 0 < MIN < MAX "
                "and at least 1 point per decade");
        cfg.t_a_min_s = lo;
        cfg.t_a_max_s = hi;
        cfg.points_per_decade = ppd;
    }

    fs::path trace(trace_path);
    fs::path out_dir =
        resolve_out_dir(out_opt, "analyze-" + trace.stem().string());
    pipeline::AnalyzeReport rep = pipeline::analyze_trace(trace, cfg, out_dir);

    std::printf("trace         %s\n", trace_path.c_str());
    std::printf("samples       %zu at %.6g Hz (%.6g s)\n", rep.samples,
                rep.sample_rate_hz, rep.duration_s);
    std::printf("output        %s\n", out_dir.string().c_str());
    std::printf("stability     sigma(%.4g s) = %.4f rad\n", rep.sigma_short_t_a_s,
                rep.sigma_short_rad);
    print_crossings(rep.sigma);
    std::printf("qber\n");
    print_qber("small-phase", rep.qber_small);
    print_qber("integral", rep.qber_integral);
    std::printf("files         analysis.json");
    for (const auto& f : rep.files)
        std::printf(", %s", f.name.c_str());
    std::printf("\n");
    return 0;
}

int cmd_compare(const std::string& dir_a, const std::string& dir_b) {
    pipeline::CompareResult res = pipeline::compare_runs(dir_a, dir_b);

    std::printf("baseline (A)  %s\n", dir_a.c_str());
    std::printf("candidate (B) %s\n", dir_b.c_str());
    std::printf("band power    A %.6g rad^2, B %.6g rad^2 below %.3g kHz\n",
                res.band_power_a, res.band_power_b, res.band_hz / 1e3);
    std::printf("suppression   %.1f dB (positive = B quieter)\n",
                res.suppression_db);
    std::printf("%14s %14s %14s %10s\n", "t_a_s", "sigma_A_rad", "sigma_B_rad",
                "B/A");
    for (const auto& p : res.sigma)
        std::printf("%14.6g %14.6g %14.6g %10.4g\n", p.t_a_s, p.sigma_a_rad,
                    p.sigma_b_rad, p.ratio);
    return 0;
}

int cmd_budget(const std::string& scenario_path) {
    scenario::Scenario sc = scenario::load_scenario(scenario_path);
    link::LossBudget loss = link::loss_budget(sc.topology);
    link::TimingSkew timing = link::timing_skew(sc.topology);

    std::printf("scenario      %s\n", sc.name.c_str());
    std::printf("hash          %s\n", scenario::scenario_hash(sc).c_str());
    std::printf("spans\n");
    auto span_row = [](const link::FiberSpan& s) {
        std::printf("  %-14s %7.1f km %7.2f dB\n", s.label.c_str(), s.length_km,
                    s.loss_db);
    };
    span_row(sc.topology.service_alice);
    span_row(sc.topology.qkd_alice);
    span_row(sc.topology.service_bob);
    span_row(sc.topology.qkd_bob);
    std::printf("  %-14s %7.1f km %7.2f dB (%.3f dB/km)\n", "qkd total",
                loss.total_km, loss.total_db, loss.total_db_per_km);
    std::printf("timing        Alice %.4g s, Bob %.4g s, skew %.4g s, "
                "unbalance delay %.4g s\n",
                timing.alice_delay_s, timing.bob_delay_s, timing.skew_s,
                timing.unbalance_delay_s);
    std::printf("wavelengths   reference %.6g THz, sensing %.6g THz "
                "(mismatch %.9f)\n",
                sc.topology.plan.reference_hz / 1e12,
                sc.topology.plan.sensing_hz / 1e12, sc.topology.plan.mismatch());

    double incident = interference::attenuate(sc.detection.source_rate_hz,
                                              sc.detection.attenuation_db);
    double window = sc.detection.counting_duration_s > 0.0
                        ? sc.detection.counting_duration_s
                        : sc.run.duration_s;
    detect::BackgroundBudget bg =
        detect::background_budget(sc.detection.background, sc.detection.spd, window);
    detect::ClickBudget all_flux = detect::click_budget(
        incident, sc.detection.spd, sc.detection.background, window);
    detect::ClickBudget floor = detect::click_budget(
        0.0, sc.detection.spd, sc.detection.background, window);

    std::printf("counting      incident %.6g /s after %.1f dB attenuation, "
                "window %.4g s\n",
                incident, sc.detection.attenuation_db, window);
    std::printf("  upper bound (all flux on one port): %.4g clicks/s measured, "
                "%.4g +- %.3g counts\n",
                all_flux.measured_hz, all_flux.expected_counts,
                all_flux.count_sigma);
    std::printf("  background-only floor: %.4g clicks/s, %.4g +- %.3g counts\n",
                floor.measured_hz, floor.expected_counts, floor.count_sigma);
    auto bg_row = [](const char* name, const detect::RateEstimate& r) {
        std::printf("  %-10s %10.4g /s +- %.3g\n", name, r.rate_hz, r.sigma_hz);
    };
    bg_row("dark", bg.dark);
    bg_row("raman", bg.raman);
    bg_row("rayleigh", bg.rayleigh);
    bg_row("external", bg.external);
    bg_row("total", bg.total);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dual-wavelength stabilized fiber link simulator"};
    app.require_subcommand(1);

    std::string scenario_path, trace_path, ta_grid, out_opt, dir_a, dir_b;
    std::uint64_t seed = 0;

    CLI::App* sim = app.add_subcommand("simulate", "Run a scenario end to end");
    sim->add_option("scenario", scenario_path, "Scenario JSON file")->required();
    CLI::Option* seed_opt =
        sim->add_option("--seed", seed, "Override the scenario seed");
    sim->add_option("--out", out_opt,
                    "Output directory (default $TFSIM_OUT_DIR/<name> or "
                    "tfsim-out/<name>)");

    CLI::App* ana =
        app.add_subcommand("analyze", "Analyze an exported phase-trace CSV");
    ana->add_option("trace", trace_path, "time_s,phase_rad CSV file")->required();
    ana->add_option("--ta-grid", ta_grid,
                    "Averaging-time grid as MIN:MAX:POINTS_PER_DECADE");
    ana->add_option("--out", out_opt, "Output directory");

    CLI::App* cmp = app.add_subcommand(
        "compare", "Compare two run directories (A = baseline, B = candidate)");
    cmp->add_option("a", dir_a, "Baseline run directory")->required();
    cmp->add_option("b", dir_b, "Candidate run directory")->required();

    CLI::App* bud = app.add_subcommand(
        "budget", "Print link loss, timing, and counting budgets for a scenario");
    bud->add_option("scenario", scenario_path, "Scenario JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed())
            return cmd_simulate(scenario_path, seed_opt->count() > 0, seed, out_opt);
        if (ana->parsed())
            return cmd_analyze(trace_path, ta_grid, out_opt);
        if (cmp->parsed())
            return cmd_compare(dir_a, dir_b);
        if (bud->parsed())
            return cmd_budget(scenario_path);
    } catch (const scenario::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
