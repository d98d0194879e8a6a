#include "tfsim/pipeline.hpp"

#include "tfsim/control.hpp"
#include "tfsim/csvio.hpp"
#include "tfsim/interference.hpp"
#include "tfsim/noise.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <utility>

namespace tfsim::pipeline {

namespace {

using nlohmann::json;

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

const char* method_name(analysis::QberMethod m) {
    switch (m) {
    case analysis::QberMethod::small_phase: return "small_phase";
    case analysis::QberMethod::integral: return "integral";
    case analysis::QberMethod::counts: return "counts";
    }
    return "unknown";
}

json qber_json(const analysis::QberEstimate& q) {
    return {{"e", q.e},
            {"method", method_name(q.method)},
            {"sigma_phi_rad", q.sigma_phi_rad},
            {"uncertainty", q.uncertainty},
            {"out_of_domain", q.out_of_domain}};
}

json rate_json(const detect::RateEstimate& r) {
    return {{"rate_hz", r.rate_hz}, {"sigma_hz", r.sigma_hz}};
}

json click_budget_json(const detect::ClickBudget& b) {
    return {{"signal_hz", b.signal_hz},
            {"background_hz", b.background_hz},
            {"total_hz", b.total_hz},
            {"measured_hz", b.measured_hz},
            {"expected_counts", b.expected_counts},
            {"count_sigma", b.count_sigma},
            {"rate_sigma_hz", b.rate_sigma_hz}};
}

json crossings_json(const analysis::SigmaCurve& curve) {
    json arr = json::array();
    for (const auto& c : curve.crossings) {
        arr.push_back({{"qber", c.qber},
                       {"sigma_rad", c.sigma_rad},
                       {"t_a_s", c.t_a_s},
                       {"found", c.found}});
    }
    return arr;
}

/// Grid point whose averaging time is nearest `target_s` in log distance.
const analysis::SigmaPoint* point_near(const analysis::SigmaCurve& curve,
                                       double target_s) {
    const analysis::SigmaPoint* best = nullptr;
    double best_d = 0.0;
    for (const auto& p : curve.points) {
        if (!(p.t_a_s > 0.0))
            continue;
        double d = std::fabs(std::log(p.t_a_s / target_s));
        if (!best || d < best_d) {
            best = &p;
            best_d = d;
        }
    }
    return best;
}

csvio::Metadata with(csvio::Metadata meta, std::initializer_list<std::string> extra) {
    for (const auto& line : extra)
        meta.push_back(line);
    return meta;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty())
        return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace

RunReport run_scenario(const scenario::Scenario& sc,
                       const std::filesystem::path& out_dir) {
    sc.validate();
    std::filesystem::create_directories(out_dir);

    RunReport rep;
    rep.name = sc.name;
    rep.seed = sc.seed;
    rep.hash = scenario::scenario_hash(sc);
    rep.loss = link::loss_budget(sc.topology);
    rep.timing = link::timing_skew(sc.topology);

    // Noise inputs: the calibrated link-total fiber spec is split across the
    // four spans in proportion to length (power goes as amplitude squared,
    // so per-span amplitudes scale by sqrt(weight) and the span PSDs sum
    // back to the link total).
    noise::NoiseSpec fiber_total = sc.fiber_base;
    if (sc.calibrate_drift_rad_per_ms > 0.0)
        fiber_total =
            noise::calibrate_fiber_spec(sc.calibrate_drift_rad_per_ms, sc.fiber_base);

    const double lengths[4] = {
        sc.topology.service_alice.length_km, sc.topology.qkd_alice.length_km,
        sc.topology.service_bob.length_km, sc.topology.qkd_bob.length_km};
    double total_len = lengths[0] + lengths[1] + lengths[2] + lengths[3];

    control::NoiseInputs inputs;
    noise::NoiseSpec* span_specs[4] = {&inputs.service_alice, &inputs.qkd_alice,
                                       &inputs.service_bob, &inputs.qkd_bob};
    for (int i = 0; i < 4; ++i) {
        double w = total_len > 0.0 ? lengths[i] / total_len : 0.25;
        *span_specs[i] = fiber_total.scaled_amplitude(std::sqrt(w));
    }
    if (sc.slave_linewidth_hz > 0.0) {
        inputs.slave_alice = noise::laser_spec(sc.slave_linewidth_hz);
        inputs.slave_bob = inputs.slave_alice;
    }
    if (sc.reference_linewidth_hz > 0.0)
        inputs.reference = noise::laser_spec(sc.reference_linewidth_hz);
    inputs.extra_alice = sc.extra_alice;
    inputs.extra_bob = sc.extra_bob;

    control::RunConfig rc = sc.run;
    rc.fiber_loop.sample_rate_hz = rc.sample_rate_hz;

    control::ClosedLoopResult result =
        control::closed_loop_run(inputs, sc.topology, rc, sc.seed);

    rep.loop.oscillation_detected = result.oscillation_detected;
    rep.loop.open_loop_rms_rad = result.open_loop_rms;
    rep.loop.closed_loop_rms_rad = result.closed_loop_rms;

    const double fs = rc.sample_rate_hz;
    const std::size_t n = result.stabilized.size();

    const csvio::Metadata meta{
        "scenario: " + rep.name,
        "hash: " + rep.hash,
        "seed: " + std::to_string(rep.seed),
        "sample_rate_hz: " + fmt_g(fs),
    };

    auto add_file = [&](const std::string& name) {
        std::filesystem::path p = out_dir / name;
        rep.files.push_back({name, p, csvio::checksum_hex(csvio::file_checksum(p))});
    };

    std::size_t stride = sc.outputs.preview_stride;
    if (stride == 0)
        stride = std::max<std::size_t>(1, n / 100000);

    if (sc.outputs.stabilized_trace) {
        csvio::write_trace_csv(out_dir / "stabilized.csv", result.stabilized, stride,
                               with(meta, {"provenance: " + result.stabilized.provenance,
                                           "stride: " + std::to_string(stride)}));
        add_file("stabilized.csv");
    }
    if (sc.outputs.error_trace) {
        csvio::write_trace_csv(out_dir / "error.csv", result.error, stride,
                               with(meta, {"provenance: " + result.error.provenance,
                                           "stride: " + std::to_string(stride)}));
        add_file("error.csv");
    }
    if (sc.outputs.correction_trace) {
        csvio::write_trace_csv(out_dir / "correction.csv", result.correction, stride,
                               with(meta, {"provenance: " + result.correction.provenance,
                                           "stride: " + std::to_string(stride)}));
        add_file("correction.csv");
    }

    // Loop suppression, measured on the disturbance the loop actually saw:
    // the open-loop input is error - correction by construction.
    {
        PhaseTrace open_loop;
        open_loop.sample_rate_hz = fs;
        open_loop.provenance = "reconstructed:error_minus_correction";
        open_loop.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            open_loop.samples[i] =
                result.error.samples[i] - result.correction.samples[i];
        analysis::Psd psd_open =
            analysis::welch_psd(open_loop, sc.analysis.psd_segment_length);
        open_loop.samples = std::vector<double>();
        analysis::Psd psd_resid =
            analysis::welch_psd(result.error, sc.analysis.psd_segment_length);

        double band = std::min(5e3, psd_resid.freq_hz.back());
        rep.loop.in_band_hz = band;
        double p_open = psd_open.band_power(0.0, band);
        double p_resid = psd_resid.band_power(0.0, band);
        rep.loop.suppression_db = (p_open > 0.0 && p_resid > 0.0)
                                      ? 10.0 * std::log10(p_open / p_resid)
                                      : 0.0;
    }
    result.error = PhaseTrace{};
    result.correction = PhaseTrace{};

    if (sc.outputs.psd) {
        analysis::Psd psd =
            analysis::welch_psd(result.stabilized, sc.analysis.psd_segment_length);
        csvio::write_psd_csv(
            out_dir / "psd.csv", psd,
            with(meta, {"trace: stabilized differential phase (unfolded)",
                        "segments: " + std::to_string(psd.segment_count),
                        "segment_length: " + std::to_string(psd.segment_length)}));
        add_file("psd.csv");
    }

    // Classical readout at the configured operating point: interference,
    // photodiode acquisition, folded-phase retrieval, stability statistics.
    {
        interference::InterferencePattern pattern = interference::intensity(
            result.stabilized, sc.analysis.operating_point_rad);
        interference::InterferencePattern acquired =
            detect::photodiode_acquire(pattern, sc.detection.photodiode, sc.seed);
        pattern = interference::InterferencePattern{};

        if (sc.outputs.pattern) {
            std::size_t pstride = sc.outputs.preview_stride;
            if (pstride == 0)
                pstride = std::max<std::size_t>(1, acquired.intensity.size() / 100000);
            csvio::write_pattern_csv(
                out_dir / "pattern.csv", acquired, pstride,
                with(meta, {"operating_point_rad: " +
                                fmt_g(sc.analysis.operating_point_rad),
                            "stride: " + std::to_string(pstride)}));
            add_file("pattern.csv");
        }

        PhaseTrace retrieved = interference::retrieve_phase(acquired);
        acquired = interference::InterferencePattern{};

        std::vector<double> grid;
        for (double t : sc.analysis.grid()) {
            if (t * retrieved.sample_rate_hz >= 2.0 - 1e-9 &&
                t <= retrieved.duration_s() * (1.0 + 1e-9))
                grid.push_back(t);
        }
        if (grid.size() >= 1)
            rep.sigma = analysis::sigma_curve(retrieved, grid);

        if (const analysis::SigmaPoint* p = point_near(rep.sigma, 1e-2)) {
            rep.sigma_short_t_a_s = p->t_a_s;
            rep.sigma_short_rad = p->sigma_rad;
        }
        rep.qber_small = analysis::qber_small_phase(rep.sigma_short_rad);
        rep.qber_integral = analysis::qber_integral_gaussian(rep.sigma_short_rad);

        if (sc.outputs.sigma) {
            csvio::Metadata smeta =
                with(meta, {"trace: retrieved (folded) phase",
                            "operating_point_rad: " +
                                fmt_g(sc.analysis.operating_point_rad)});
            for (const auto& c : rep.sigma.crossings) {
                char line[160];
                std::snprintf(line, sizeof line,
                              "crossing: qber=%g sigma_rad=%.6g t_a_s=%.6g found=%d",
                              c.qber, c.sigma_rad, c.t_a_s, c.found ? 1 : 0);
                smeta.push_back(line);
            }
            csvio::write_sigma_csv(out_dir / "sigma.csv", rep.sigma, smeta);
            add_file("sigma.csv");
        }
    }

    // Photon counting at the dark port (operating point 0): the bright
    // output collects correct events, the complementary output collects
    // phase errors.
    {
        double incident = interference::attenuate(sc.detection.source_rate_hz,
                                                  sc.detection.attenuation_db);
        rep.counting.incident_rate_hz = incident;

        double cd = sc.detection.counting_duration_s;
        if (cd <= 0.0)
            cd = result.stabilized.duration_s();
        std::size_t n_cd = static_cast<std::size_t>(std::llround(cd * fs));
        n_cd = std::min(n, std::max<std::size_t>(2, n_cd));
        rep.counting.duration_s = static_cast<double>(n_cd) / fs;

        PhaseTrace head;
        head.sample_rate_hz = fs;
        head.provenance = result.stabilized.provenance;
        head.samples.assign(result.stabilized.samples.begin(),
                            result.stabilized.samples.begin() +
                                static_cast<std::ptrdiff_t>(n_cd));
        result.stabilized = PhaseTrace{};

        interference::InterferencePattern dark = interference::intensity(head, 0.0);
        head = PhaseTrace{};

        PhaseTrace flux_correct, flux_error;
        flux_correct.sample_rate_hz = fs;
        flux_correct.provenance = "port_flux:correct";
        flux_correct.samples = interference::port_flux(dark, incident, false);
        flux_error.sample_rate_hz = fs;
        flux_error.provenance = "port_flux:error";
        flux_error.samples = interference::port_flux(dark, incident, true);
        dark = interference::InterferencePattern{};

        detect::CountRecord rec_correct =
            detect::spd_detect(flux_correct, sc.detection.spd, sc.detection.background,
                               sc.seed, "detector.correct", 0);
        double mean_correct = mean_of(flux_correct.samples);
        flux_correct = PhaseTrace{};
        detect::CountRecord rec_error =
            detect::spd_detect(flux_error, sc.detection.spd, sc.detection.background,
                               sc.seed, "detector.error", 1);
        double mean_error = mean_of(flux_error.samples);
        flux_error = PhaseTrace{};

        rep.counting.counts_correct = rec_correct.size();
        rep.counting.counts_error = rec_error.size();
        rep.counting.measured_rate_correct_hz =
            static_cast<double>(rec_correct.size()) / rep.counting.duration_s;
        rep.counting.measured_rate_error_hz =
            static_cast<double>(rec_error.size()) / rep.counting.duration_s;
        rep.counting.budget_correct = detect::click_budget(
            mean_correct, sc.detection.spd, sc.detection.background,
            rep.counting.duration_s);
        rep.counting.budget_error =
            detect::click_budget(mean_error, sc.detection.spd,
                                 sc.detection.background, rep.counting.duration_s);
        rep.counting.background = detect::background_budget(
            sc.detection.background, sc.detection.spd, rep.counting.duration_s);

        try {
            rep.qber_counts = detect::qber_from_counts(rec_correct, rec_error);
            rep.qber_counts_valid = true;
        } catch (const std::exception& e) {
            rep.qber_counts_valid = false;
            rep.qber_counts_error = e.what();
        }

        if (sc.outputs.counts) {
            detect::CountRecord merged = detect::merge_records(rec_correct, rec_error);
            csvio::write_counts_csv(
                out_dir / "counts.csv", merged,
                with(meta, {"detector 0: correct port, detector 1: error port",
                            "counting_duration_s: " + fmt_g(rep.counting.duration_s),
                            "incident_rate_hz: " + fmt_g(incident)}));
            add_file("counts.csv");

            const analysis::QberEstimate& best =
                rep.qber_counts_valid ? rep.qber_counts : rep.qber_integral;
            csvio::write_qber_csv(out_dir / "qber.csv", best, meta);
            add_file("qber.csv");
        }
    }

    // report.json last, so the manifest covers every file written above.
    {
        const control::LoopConfig& loop = rc.fiber_loop;
        json j;
        j["name"] = rep.name;
        j["hash"] = rep.hash;
        j["seed"] = rep.seed;
        j["run"] = {{"duration_s", rc.duration_s},
                    {"sample_rate_hz", rc.sample_rate_hz},
                    {"stabilization", rc.stabilization},
                    {"nu_mismatch", rc.nu_mismatch},
                    {"qkd_pll_bandwidth_hz", rc.qkd_pll_bandwidth_hz},
                    {"fiber_loop",
                     {{"kind", loop.kind == control::LoopKind::pi ? "pi" : "pid"},
                      {"bandwidth_hz", loop.bandwidth_hz},
                      {"latency_s", loop.effective_latency_s()},
                      {"integral_corner_hz", loop.effective_integral_corner_hz()},
                      {"error_scale", loop.error_scale}}}};
        j["link"] = {
            {"loss",
             {{"alice_qkd_km", rep.loss.alice_qkd_km},
              {"alice_qkd_db", rep.loss.alice_qkd_db},
              {"bob_qkd_km", rep.loss.bob_qkd_km},
              {"bob_qkd_db", rep.loss.bob_qkd_db},
              {"total_km", rep.loss.total_km},
              {"total_db", rep.loss.total_db},
              {"alice_db_per_km", rep.loss.alice_db_per_km},
              {"bob_db_per_km", rep.loss.bob_db_per_km},
              {"total_db_per_km", rep.loss.total_db_per_km}}},
            {"timing",
             {{"alice_delay_s", rep.timing.alice_delay_s},
              {"bob_delay_s", rep.timing.bob_delay_s},
              {"skew_s", rep.timing.skew_s},
              {"unbalance_delay_s", rep.timing.unbalance_delay_s}}},
            {"wavelengths",
             {{"reference_hz", sc.topology.plan.reference_hz},
              {"sensing_hz", sc.topology.plan.sensing_hz},
              {"mismatch", sc.topology.plan.mismatch()}}}};
        j["loop_metrics"] = {{"oscillation_detected", rep.loop.oscillation_detected},
                             {"open_loop_rms_rad", rep.loop.open_loop_rms_rad},
                             {"closed_loop_rms_rad", rep.loop.closed_loop_rms_rad},
                             {"in_band_hz", rep.loop.in_band_hz},
                             {"suppression_db", rep.loop.suppression_db}};
        j["stability"] = {{"sigma_short",
                           {{"t_a_s", rep.sigma_short_t_a_s},
                            {"sigma_rad", rep.sigma_short_rad}}},
                          {"crossings", crossings_json(rep.sigma)},
                          {"points", rep.sigma.points.size()}};
        j["qber"] = {{"small_phase", qber_json(rep.qber_small)},
                     {"integral", qber_json(rep.qber_integral)},
                     {"counts", rep.qber_counts_valid ? qber_json(rep.qber_counts)
                                                      : json()},
                     {"counts_error",
                      rep.qber_counts_valid ? json() : json(rep.qber_counts_error)}};
        j["counting"] = {
            {"incident_rate_hz", rep.counting.incident_rate_hz},
            {"duration_s", rep.counting.duration_s},
            {"correct",
             {{"counts", rep.counting.counts_correct},
              {"measured_rate_hz", rep.counting.measured_rate_correct_hz},
              {"budget", click_budget_json(rep.counting.budget_correct)}}},
            {"error",
             {{"counts", rep.counting.counts_error},
              {"measured_rate_hz", rep.counting.measured_rate_error_hz},
              {"budget", click_budget_json(rep.counting.budget_error)}}},
            {"background",
             {{"dark", rate_json(rep.counting.background.dark)},
              {"raman", rate_json(rep.counting.background.raman)},
              {"rayleigh", rate_json(rep.counting.background.rayleigh)},
              {"external", rate_json(rep.counting.background.external)},
              {"total", rate_json(rep.counting.background.total)}}}};
        json files = json::object();
        for (const auto& f : rep.files)
            files[f.name] = f.checksum;
        j["files"] = files;

        std::ofstream out(out_dir / "report.json", std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot write " +
                                     (out_dir / "report.json").string());
        out << j.dump(2) << '\n';
    }

    return rep;
}

AnalyzeReport analyze_trace(const std::filesystem::path& trace_csv,
                            scenario::AnalysisConfig analysis,
                            const std::filesystem::path& out_dir) {
    PhaseTrace trace = csvio::read_trace_csv(trace_csv);
    const double fs = trace.sample_rate_hz;
    const double duration = trace.duration_s();

    analysis.t_a_min_s = std::max(analysis.t_a_min_s, 2.0 / fs);
    analysis.t_a_max_s = std::min(analysis.t_a_max_s, duration);
    if (!(analysis.t_a_min_s < analysis.t_a_max_s))
        throw scenario::ConfigError(
            "averaging-time grid is empty for this trace (too short or too "
            "coarsely sampled)");
    analysis.validate(duration, fs);

    std::filesystem::create_directories(out_dir);

    AnalyzeReport rep;
    rep.sample_rate_hz = fs;
    rep.samples = trace.size();
    rep.duration_s = duration;

    const csvio::Metadata meta{
        "source: " + trace_csv.filename().string(),
        "provenance: " + trace.provenance,
        "sample_rate_hz: " + fmt_g(fs),
    };

    auto add_file = [&](const std::string& name) {
        std::filesystem::path p = out_dir / name;
        rep.files.push_back({name, p, csvio::checksum_hex(csvio::file_checksum(p))});
    };

    analysis::Psd psd = analysis::welch_psd(trace, analysis.psd_segment_length);
    csvio::write_psd_csv(
        out_dir / "psd.csv", psd,
        with(meta, {"segments: " + std::to_string(psd.segment_count),
                    "segment_length: " + std::to_string(psd.segment_length)}));
    add_file("psd.csv");

    rep.sigma = analysis::sigma_curve(trace, analysis.grid());
    {
        csvio::Metadata smeta = meta;
        for (const auto& c : rep.sigma.crossings) {
            char line[160];
            std::snprintf(line, sizeof line,
                          "crossing: qber=%g sigma_rad=%.6g t_a_s=%.6g found=%d",
                          c.qber, c.sigma_rad, c.t_a_s, c.found ? 1 : 0);
            smeta.push_back(line);
        }
        csvio::write_sigma_csv(out_dir / "sigma.csv", rep.sigma, smeta);
        add_file("sigma.csv");
    }

    if (const analysis::SigmaPoint* p = point_near(rep.sigma, 1e-2)) {
        rep.sigma_short_t_a_s = p->t_a_s;
        rep.sigma_short_rad = p->sigma_rad;
    }
    rep.qber_small = analysis::qber_small_phase(rep.sigma_short_rad);
    rep.qber_integral = analysis::qber_integral_gaussian(rep.sigma_short_rad);
    csvio::write_qber_csv(out_dir / "qber.csv", rep.qber_integral, meta);
    add_file("qber.csv");

    {
        json j;
        j["source"] = trace_csv.string();
        j["samples"] = rep.samples;
        j["sample_rate_hz"] = rep.sample_rate_hz;
        j["duration_s"] = rep.duration_s;
        j["stability"] = {{"sigma_short",
                           {{"t_a_s", rep.sigma_short_t_a_s},
                            {"sigma_rad", rep.sigma_short_rad}}},
                          {"crossings", crossings_json(rep.sigma)},
                          {"points", rep.sigma.points.size()}};
        j["qber"] = {{"small_phase", qber_json(rep.qber_small)},
                     {"integral", qber_json(rep.qber_integral)}};
        json files = json::object();
        for (const auto& f : rep.files)
            files[f.name] = f.checksum;
        j["files"] = files;

        std::ofstream out(out_dir / "analysis.json", std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot write " +
                                     (out_dir / "analysis.json").string());
        out << j.dump(2) << '\n';
    }

    return rep;
}

CompareResult compare_runs(const std::filesystem::path& dir_a,
                           const std::filesystem::path& dir_b) {
    analysis::Psd psd_a = csvio::read_psd_csv(dir_a / "psd.csv");
    analysis::Psd psd_b = csvio::read_psd_csv(dir_b / "psd.csv");
    analysis::SigmaCurve sig_a = csvio::read_sigma_csv(dir_a / "sigma.csv");
    analysis::SigmaCurve sig_b = csvio::read_sigma_csv(dir_b / "sigma.csv");

    if (sig_a.points.size() != sig_b.points.size())
        throw scenario::ConfigError(
            "sigma.csv grids differ between the two runs; re-run both with the "
            "same analysis settings");

    CompareResult res;
    res.sigma.reserve(sig_a.points.size());
    for (std::size_t i = 0; i < sig_a.points.size(); ++i) {
        const auto& pa = sig_a.points[i];
        const auto& pb = sig_b.points[i];
        double rel = std::fabs(pa.t_a_s - pb.t_a_s);
        if (rel > 1e-9 * std::max(pa.t_a_s, pb.t_a_s))
            throw scenario::ConfigError(
                "sigma.csv grids differ between the two runs; re-run both with "
                "the same analysis settings");
        ComparePoint cp;
        cp.t_a_s = pa.t_a_s;
        cp.sigma_a_rad = pa.sigma_rad;
        cp.sigma_b_rad = pb.sigma_rad;
        cp.ratio = pa.sigma_rad > 0.0
                       ? pb.sigma_rad / pa.sigma_rad
                       : std::numeric_limits<double>::infinity();
        res.sigma.push_back(cp);
    }

    res.band_hz = std::min({5e3, psd_a.freq_hz.back(), psd_b.freq_hz.back()});
    res.band_power_a = psd_a.band_power(0.0, res.band_hz);
    res.band_power_b = psd_b.band_power(0.0, res.band_hz);
    res.suppression_db = (res.band_power_a > 0.0 && res.band_power_b > 0.0)
                             ? 10.0 * std::log10(res.band_power_a / res.band_power_b)
                             : 0.0;
    return res;
}

} // namespace tfsim::pipeline
