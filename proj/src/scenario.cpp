#include "tfsim/scenario.hpp"

#include "tfsim/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

namespace tfsim::scenario {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

void check_object(const json& j, const std::string& path) {
    if (!j.is_object())
        fail(path, "expected an object");
}

void check_known_keys(const json& obj, const std::string& path,
                      std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed) {
            if (it.key() == k) {
                ok = true;
                break;
            }
        }
        if (!ok)
            fail(path + "." + it.key(), "unknown field");
    }
}

double get_number(const json& obj, const char* key, const std::string& path,
                  std::optional<double> fallback = std::nullopt) {
    if (!obj.contains(key)) {
        if (fallback)
            return *fallback;
        fail(path + "." + key, "required number missing");
    }
    const json& v = obj.at(key);
    if (!v.is_number())
        fail(path + "." + key, "expected a number");
    return v.get<double>();
}

bool get_bool(const json& obj, const char* key, const std::string& path,
              bool fallback) {
    if (!obj.contains(key))
        return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean())
        fail(path + "." + key, "expected true or false");
    return v.get<bool>();
}

std::string get_string(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key))
        fail(path + "." + key, "required string missing");
    const json& v = obj.at(key);
    if (!v.is_string())
        fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

std::uint64_t get_seed(const json& obj, const char* key, const std::string& path,
                       std::uint64_t fallback) {
    if (!obj.contains(key))
        return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer() ||
        (!v.is_number_unsigned() && v.get<long long>() < 0))
        fail(path + "." + key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

std::size_t get_count(const json& obj, const char* key, const std::string& path,
                      std::size_t fallback) {
    if (!obj.contains(key))
        return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        fail(path + "." + key, "expected a non-negative integer");
    return v.get<std::size_t>();
}

noise::NoiseSpec parse_noise_spec(const json& j, const std::string& path) {
    check_object(j, path);
    check_known_keys(j, path, {"h", "tones", "transients"});

    noise::NoiseSpec spec;
    if (j.contains("h")) {
        const json& h = j.at("h");
        check_object(h, path + ".h");
        check_known_keys(h, path + ".h", {"0", "-1", "-2", "-3", "-4"});
        const char* keys[5] = {"0", "-1", "-2", "-3", "-4"};
        for (std::size_t a = 0; a < 5; ++a)
            spec.h[a] = get_number(h, keys[a], path + ".h", 0.0);
    }
    if (j.contains("tones")) {
        const json& tones = j.at("tones");
        if (!tones.is_array())
            fail(path + ".tones", "expected an array");
        for (std::size_t i = 0; i < tones.size(); ++i) {
            std::string tpath = path + ".tones[" + std::to_string(i) + "]";
            check_object(tones[i], tpath);
            check_known_keys(tones[i], tpath, {"freq_hz", "amplitude_rad"});
            noise::Tone tone;
            tone.freq_hz = get_number(tones[i], "freq_hz", tpath);
            tone.amplitude_rad = get_number(tones[i], "amplitude_rad", tpath);
            spec.tones.push_back(tone);
        }
    }
    if (j.contains("transients") && !j.at("transients").is_null()) {
        const json& tr = j.at("transients");
        std::string tpath = path + ".transients";
        check_object(tr, tpath);
        check_known_keys(tr, tpath, {"rate_hz", "amplitude_rad", "duration_s"});
        noise::TransientModel model;
        model.rate_hz = get_number(tr, "rate_hz", tpath);
        model.amplitude_rad = get_number(tr, "amplitude_rad", tpath);
        model.duration_s = get_number(tr, "duration_s", tpath);
        spec.transients = model;
    }
    try {
        spec.validate();
    } catch (const std::exception& e) {
        fail(path, e.what());
    }
    return spec;
}

link::FiberSpan parse_span(const json& j, const std::string& path,
                           const std::string& label) {
    check_object(j, path);
    check_known_keys(j, path, {"length_km", "loss_db"});
    link::FiberSpan span;
    span.length_km = get_number(j, "length_km", path);
    span.loss_db = get_number(j, "loss_db", path);
    span.label = label;
    return span;
}

control::LoopConfig parse_loop(const json& j, const std::string& path,
                               double sample_rate_hz) {
    check_object(j, path);
    check_known_keys(j, path,
                     {"kind", "bandwidth_hz", "latency_s", "integral_corner_hz",
                      "error_scale", "slew_limit_rad_per_s", "range_limit_rad"});
    control::LoopConfig cfg;
    cfg.sample_rate_hz = sample_rate_hz;
    if (j.contains("kind")) {
        std::string kind = get_string(j, "kind", path);
        if (kind == "pi")
            cfg.kind = control::LoopKind::pi;
        else if (kind == "pid")
            cfg.kind = control::LoopKind::pid;
        else
            fail(path + ".kind", "expected \"pi\" or \"pid\"");
    }
    cfg.bandwidth_hz = get_number(j, "bandwidth_hz", path, cfg.bandwidth_hz);
    cfg.latency_s = get_number(j, "latency_s", path, cfg.latency_s);
    cfg.integral_corner_hz =
        get_number(j, "integral_corner_hz", path, cfg.integral_corner_hz);
    cfg.error_scale = get_number(j, "error_scale", path, cfg.error_scale);
    if (j.contains("slew_limit_rad_per_s") && !j.at("slew_limit_rad_per_s").is_null())
        cfg.slew_limit_rad_per_s = get_number(j, "slew_limit_rad_per_s", path);
    if (j.contains("range_limit_rad") && !j.at("range_limit_rad").is_null())
        cfg.range_limit_rad = get_number(j, "range_limit_rad", path);
    return cfg;
}

json noise_spec_to_json(const noise::NoiseSpec& spec) {
    json h = json::object();
    const char* keys[5] = {"0", "-1", "-2", "-3", "-4"};
    for (std::size_t a = 0; a < 5; ++a)
        h[keys[a]] = spec.h[a];
    json tones = json::array();
    for (const auto& t : spec.tones)
        tones.push_back({{"freq_hz", t.freq_hz}, {"amplitude_rad", t.amplitude_rad}});
    json tr;
    if (spec.transients) {
        tr = {{"rate_hz", spec.transients->rate_hz},
              {"amplitude_rad", spec.transients->amplitude_rad},
              {"duration_s", spec.transients->duration_s}};
    }
    return {{"h", h}, {"tones", tones}, {"transients", tr}};
}

json span_to_json(const link::FiberSpan& span) {
    return {{"length_km", span.length_km}, {"loss_db", span.loss_db}};
}

} // namespace

std::vector<double> AnalysisConfig::grid() const {
    std::vector<double> grid;
    for (int k = 0;; ++k) {
        double ta = t_a_min_s *
                    std::pow(10.0, static_cast<double>(k) /
                                       static_cast<double>(points_per_decade));
        if (ta > t_a_max_s * (1.0 + 1e-9))
            break;
        grid.push_back(ta);
    }
    return grid;
}

void AnalysisConfig::validate(double duration_s, double sample_rate_hz) const {
    if (!(t_a_min_s > 0.0) || !(t_a_min_s * sample_rate_hz >= 2.0))
        throw ConfigError("analysis.t_a_min_s: must span at least 2 samples");
    if (!(t_a_max_s > t_a_min_s))
        throw ConfigError("analysis.t_a_max_s: must exceed t_a_min_s");
    if (t_a_max_s > duration_s * (1.0 + 1e-9))
        throw ConfigError("analysis.t_a_max_s: exceeds the run duration");
    if (points_per_decade < 1)
        throw ConfigError("analysis.points_per_decade: must be >= 1");
    if (!std::isfinite(operating_point_rad))
        throw ConfigError("analysis.operating_point_rad: must be finite");
    if (psd_segment_length != 0 &&
        (psd_segment_length & (psd_segment_length - 1)) != 0)
        throw ConfigError("analysis.psd_segment_length: must be 0 or a power of two");
}

void DetectionConfig::validate(double duration_s) const {
    if (source_rate_hz < 0.0)
        throw ConfigError("detection.source_rate_hz: must be >= 0");
    if (attenuation_db < 0.0)
        throw ConfigError("detection.attenuation_db: must be >= 0");
    if (counting_duration_s < 0.0 || counting_duration_s > duration_s * (1.0 + 1e-9))
        throw ConfigError("detection.counting_duration_s: must be in [0, duration]");
    try {
        spd.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("detection.spd: ") + e.what());
    }
    try {
        background.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("detection.background: ") + e.what());
    }
    try {
        photodiode.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("detection.photodiode: ") + e.what());
    }
}

void Scenario::validate() const {
    if (name.empty())
        throw ConfigError("name: must not be empty");
    if (!(run.duration_s > 0.0) || !(run.sample_rate_hz > 0.0))
        throw ConfigError("run: duration_s and sample_rate_hz must be > 0");
    if (run.duration_s * run.sample_rate_hz < 4.0)
        throw ConfigError("run.duration_s: run must cover at least 4 samples");

    control::LoopConfig loop = run.fiber_loop;
    loop.sample_rate_hz = run.sample_rate_hz;
    try {
        loop.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("run.fiber_loop: ") + e.what());
    }

    if (slave_linewidth_hz < 0.0)
        throw ConfigError("noise.slave_linewidth_hz: must be >= 0");
    if (reference_linewidth_hz < 0.0)
        throw ConfigError("noise.reference_linewidth_hz: must be >= 0");
    if (calibrate_drift_rad_per_ms < 0.0)
        throw ConfigError("noise.calibrate_drift_rad_per_ms: must be >= 0");
    if (calibrate_drift_rad_per_ms > 0.0 && fiber_base.is_zero())
        throw ConfigError(
            "noise.fiber_base: calibration target set but the base shape is zero");
    if (slave_linewidth_hz > 0.0 && run.sample_rate_hz < 5e6)
        throw ConfigError(
            "run.sample_rate_hz: must be >= 5e6 to resolve the laser lock");
    if (slave_linewidth_hz > 0.0 &&
        !(run.qkd_pll_bandwidth_hz > 0.0 &&
          run.qkd_pll_bandwidth_hz < run.sample_rate_hz / 2.0))
        throw ConfigError("run.qkd_pll_bandwidth_hz: must be in (0, f_s/2)");

    auto check_tones = [this](const noise::NoiseSpec& spec, const std::string& where) {
        for (const auto& t : spec.tones) {
            if (!(t.freq_hz < run.sample_rate_hz / 2.0))
                throw ConfigError(where +
                                  ".tones: frequency must stay below f_s/2 "
                                  "(measurement bandwidth)");
        }
    };
    check_tones(fiber_base, "noise.fiber_base");
    if (extra_alice)
        check_tones(*extra_alice, "noise.extra_alice");
    if (extra_bob)
        check_tones(*extra_bob, "noise.extra_bob");

    try {
        topology.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("topology: ") + e.what());
    }
    detection.validate(run.duration_s);
    analysis.validate(run.duration_s, run.sample_rate_hz);
}

Scenario parse_scenario(const std::string& json_text, const std::string& source) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(source + ": " + e.what());
    }
    const std::string r = "$";
    check_object(root, r);
    check_known_keys(root, r,
                     {"name", "seed", "run", "topology", "noise", "detection",
                      "analysis", "outputs"});

    Scenario sc;
    sc.name = get_string(root, "name", r);
    sc.seed = get_seed(root, "seed", r, sc.seed);

    if (root.contains("run")) {
        const json& run = root.at("run");
        const std::string p = r + ".run";
        check_object(run, p);
        check_known_keys(run, p,
                         {"duration_s", "sample_rate_hz", "stabilization",
                          "nu_mismatch", "qkd_pll_bandwidth_hz", "fiber_loop"});
        sc.run.duration_s = get_number(run, "duration_s", p, sc.run.duration_s);
        sc.run.sample_rate_hz =
            get_number(run, "sample_rate_hz", p, sc.run.sample_rate_hz);
        sc.run.stabilization = get_bool(run, "stabilization", p, sc.run.stabilization);
        sc.run.nu_mismatch = get_bool(run, "nu_mismatch", p, sc.run.nu_mismatch);
        sc.run.qkd_pll_bandwidth_hz = get_number(run, "qkd_pll_bandwidth_hz", p,
                                                 sc.run.qkd_pll_bandwidth_hz);
        if (run.contains("fiber_loop"))
            sc.run.fiber_loop =
                parse_loop(run.at("fiber_loop"), p + ".fiber_loop", sc.run.sample_rate_hz);
    }
    sc.run.fiber_loop.sample_rate_hz = sc.run.sample_rate_hz;

    if (root.contains("topology")) {
        const json& topo = root.at("topology");
        const std::string p = r + ".topology";
        check_object(topo, p);
        check_known_keys(topo, p, {"wavelengths", "spans"});
        if (topo.contains("wavelengths")) {
            const json& wl = topo.at("wavelengths");
            const std::string wp = p + ".wavelengths";
            check_object(wl, wp);
            check_known_keys(wl, wp, {"reference_hz", "sensing_hz"});
            sc.topology.plan.reference_hz =
                get_number(wl, "reference_hz", wp, sc.topology.plan.reference_hz);
            sc.topology.plan.sensing_hz =
                get_number(wl, "sensing_hz", wp, sc.topology.plan.sensing_hz);
        }
        if (topo.contains("spans")) {
            const json& spans = topo.at("spans");
            const std::string sp = p + ".spans";
            check_object(spans, sp);
            check_known_keys(spans, sp,
                             {"service_alice", "qkd_alice", "service_bob", "qkd_bob"});
            if (spans.contains("service_alice"))
                sc.topology.service_alice = parse_span(
                    spans.at("service_alice"), sp + ".service_alice", "service_alice");
            if (spans.contains("qkd_alice"))
                sc.topology.qkd_alice =
                    parse_span(spans.at("qkd_alice"), sp + ".qkd_alice", "qkd_alice");
            if (spans.contains("service_bob"))
                sc.topology.service_bob = parse_span(
                    spans.at("service_bob"), sp + ".service_bob", "service_bob");
            if (spans.contains("qkd_bob"))
                sc.topology.qkd_bob =
                    parse_span(spans.at("qkd_bob"), sp + ".qkd_bob", "qkd_bob");
        }
    }

    if (root.contains("noise")) {
        const json& nz = root.at("noise");
        const std::string p = r + ".noise";
        check_object(nz, p);
        check_known_keys(nz, p,
                         {"fiber_base", "calibrate_drift_rad_per_ms",
                          "slave_linewidth_hz", "reference_linewidth_hz",
                          "extra_alice", "extra_bob"});
        if (nz.contains("fiber_base"))
            sc.fiber_base = parse_noise_spec(nz.at("fiber_base"), p + ".fiber_base");
        sc.calibrate_drift_rad_per_ms = get_number(nz, "calibrate_drift_rad_per_ms", p,
                                                   sc.calibrate_drift_rad_per_ms);
        sc.slave_linewidth_hz =
            get_number(nz, "slave_linewidth_hz", p, sc.slave_linewidth_hz);
        sc.reference_linewidth_hz =
            get_number(nz, "reference_linewidth_hz", p, sc.reference_linewidth_hz);
        if (nz.contains("extra_alice") && !nz.at("extra_alice").is_null())
            sc.extra_alice = parse_noise_spec(nz.at("extra_alice"), p + ".extra_alice");
        if (nz.contains("extra_bob") && !nz.at("extra_bob").is_null())
            sc.extra_bob = parse_noise_spec(nz.at("extra_bob"), p + ".extra_bob");
    }

    if (root.contains("detection")) {
        const json& det = root.at("detection");
        const std::string p = r + ".detection";
        check_object(det, p);
        check_known_keys(det, p,
                         {"source_rate_hz", "attenuation_db", "counting_duration_s",
                          "spd", "background", "photodiode"});
        sc.detection.source_rate_hz =
            get_number(det, "source_rate_hz", p, sc.detection.source_rate_hz);
        sc.detection.attenuation_db =
            get_number(det, "attenuation_db", p, sc.detection.attenuation_db);
        sc.detection.counting_duration_s = get_number(det, "counting_duration_s", p,
                                                      sc.detection.counting_duration_s);
        if (det.contains("spd")) {
            const json& spd = det.at("spd");
            const std::string sp = p + ".spd";
            check_object(spd, sp);
            check_known_keys(spd, sp,
                             {"efficiency", "dead_time_s", "dark_rate_hz",
                              "jitter_rms_s"});
            sc.detection.spd.efficiency =
                get_number(spd, "efficiency", sp, sc.detection.spd.efficiency);
            sc.detection.spd.dead_time_s =
                get_number(spd, "dead_time_s", sp, sc.detection.spd.dead_time_s);
            sc.detection.spd.dark_rate_hz =
                get_number(spd, "dark_rate_hz", sp, sc.detection.spd.dark_rate_hz);
            sc.detection.spd.jitter_rms_s =
                get_number(spd, "jitter_rms_s", sp, sc.detection.spd.jitter_rms_s);
        }
        if (det.contains("background")) {
            const json& bg = det.at("background");
            const std::string bp = p + ".background";
            check_object(bg, bp);
            check_known_keys(bg, bp,
                             {"raman_rate_hz", "rayleigh_rate_hz", "external_rate_hz"});
            sc.detection.background.raman_rate_hz = get_number(
                bg, "raman_rate_hz", bp, sc.detection.background.raman_rate_hz);
            sc.detection.background.rayleigh_rate_hz = get_number(
                bg, "rayleigh_rate_hz", bp, sc.detection.background.rayleigh_rate_hz);
            sc.detection.background.external_rate_hz = get_number(
                bg, "external_rate_hz", bp, sc.detection.background.external_rate_hz);
        }
        if (det.contains("photodiode")) {
            const json& pd = det.at("photodiode");
            const std::string pp = p + ".photodiode";
            check_object(pd, pp);
            check_known_keys(pd, pp,
                             {"analog_bandwidth_hz", "sample_rate_hz", "noise_rms"});
            double bw = get_number(pd, "analog_bandwidth_hz", pp,
                                   sc.detection.photodiode.analog_bandwidth_hz);
            // 0 encodes an ideal (unlimited-bandwidth) photodiode.
            sc.detection.photodiode.analog_bandwidth_hz =
                bw == 0.0 ? std::numeric_limits<double>::infinity() : bw;
            sc.detection.photodiode.sample_rate_hz = get_number(
                pd, "sample_rate_hz", pp, sc.detection.photodiode.sample_rate_hz);
            sc.detection.photodiode.noise_rms =
                get_number(pd, "noise_rms", pp, sc.detection.photodiode.noise_rms);
        }
    }

    if (root.contains("analysis")) {
        const json& an = root.at("analysis");
        const std::string p = r + ".analysis";
        check_object(an, p);
        check_known_keys(an, p,
                         {"t_a_min_s", "t_a_max_s", "points_per_decade",
                          "operating_point_rad", "psd_segment_length"});
        sc.analysis.t_a_min_s = get_number(an, "t_a_min_s", p, sc.analysis.t_a_min_s);
        sc.analysis.t_a_max_s = get_number(an, "t_a_max_s", p, sc.analysis.t_a_max_s);
        sc.analysis.points_per_decade = static_cast<int>(get_count(
            an, "points_per_decade", p,
            static_cast<std::size_t>(sc.analysis.points_per_decade)));
        sc.analysis.operating_point_rad =
            get_number(an, "operating_point_rad", p, sc.analysis.operating_point_rad);
        sc.analysis.psd_segment_length =
            get_count(an, "psd_segment_length", p, sc.analysis.psd_segment_length);
    }

    if (root.contains("outputs")) {
        const json& out = root.at("outputs");
        const std::string p = r + ".outputs";
        check_object(out, p);
        check_known_keys(out, p,
                         {"stabilized_trace", "error_trace", "correction_trace",
                          "pattern", "psd", "sigma", "counts", "preview_stride"});
        sc.outputs.stabilized_trace =
            get_bool(out, "stabilized_trace", p, sc.outputs.stabilized_trace);
        sc.outputs.error_trace = get_bool(out, "error_trace", p, sc.outputs.error_trace);
        sc.outputs.correction_trace =
            get_bool(out, "correction_trace", p, sc.outputs.correction_trace);
        sc.outputs.pattern = get_bool(out, "pattern", p, sc.outputs.pattern);
        sc.outputs.psd = get_bool(out, "psd", p, sc.outputs.psd);
        sc.outputs.sigma = get_bool(out, "sigma", p, sc.outputs.sigma);
        sc.outputs.counts = get_bool(out, "counts", p, sc.outputs.counts);
        sc.outputs.preview_stride =
            get_count(out, "preview_stride", p, sc.outputs.preview_stride);
    }

    sc.validate();
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open scenario file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.string());
}

std::string canonical_json(const Scenario& sc) {
    const double fs = sc.run.sample_rate_hz;
    const control::LoopConfig& loop = sc.run.fiber_loop;

    json j;
    j["name"] = sc.name;
    j["seed"] = sc.seed;
    j["run"] = {
        {"duration_s", sc.run.duration_s},
        {"sample_rate_hz", fs},
        {"stabilization", sc.run.stabilization},
        {"nu_mismatch", sc.run.nu_mismatch},
        {"qkd_pll_bandwidth_hz", sc.run.qkd_pll_bandwidth_hz},
        {"fiber_loop",
         {{"kind", loop.kind == control::LoopKind::pi ? "pi" : "pid"},
          {"bandwidth_hz", loop.bandwidth_hz},
          // Canonical form stores effective values so that defaults and
          // their explicit spellings hash identically.
          {"latency_s", loop.effective_latency_s()},
          {"integral_corner_hz", loop.effective_integral_corner_hz()},
          {"error_scale", loop.error_scale},
          {"slew_limit_rad_per_s",
           loop.slew_limit_rad_per_s ? json(*loop.slew_limit_rad_per_s) : json()},
          {"range_limit_rad",
           loop.range_limit_rad ? json(*loop.range_limit_rad) : json()}}}};
    j["topology"] = {
        {"wavelengths",
         {{"reference_hz", sc.topology.plan.reference_hz},
          {"sensing_hz", sc.topology.plan.sensing_hz}}},
        {"spans",
         {{"service_alice", span_to_json(sc.topology.service_alice)},
          {"qkd_alice", span_to_json(sc.topology.qkd_alice)},
          {"service_bob", span_to_json(sc.topology.service_bob)},
          {"qkd_bob", span_to_json(sc.topology.qkd_bob)}}}};
    j["noise"] = {
        {"fiber_base", noise_spec_to_json(sc.fiber_base)},
        {"calibrate_drift_rad_per_ms", sc.calibrate_drift_rad_per_ms},
        {"slave_linewidth_hz", sc.slave_linewidth_hz},
        {"reference_linewidth_hz", sc.reference_linewidth_hz},
        {"extra_alice", sc.extra_alice ? noise_spec_to_json(*sc.extra_alice) : json()},
        {"extra_bob", sc.extra_bob ? noise_spec_to_json(*sc.extra_bob) : json()}};
    double pd_bw = sc.detection.photodiode.analog_bandwidth_hz;
    j["detection"] = {
        {"source_rate_hz", sc.detection.source_rate_hz},
        {"attenuation_db", sc.detection.attenuation_db},
        {"counting_duration_s", sc.detection.counting_duration_s},
        {"spd",
         {{"efficiency", sc.detection.spd.efficiency},
          {"dead_time_s", sc.detection.spd.dead_time_s},
          {"dark_rate_hz", sc.detection.spd.dark_rate_hz},
          {"jitter_rms_s", sc.detection.spd.jitter_rms_s}}},
        {"background",
         {{"raman_rate_hz", sc.detection.background.raman_rate_hz},
          {"rayleigh_rate_hz", sc.detection.background.rayleigh_rate_hz},
          {"external_rate_hz", sc.detection.background.external_rate_hz}}},
        {"photodiode",
         {{"analog_bandwidth_hz", std::isfinite(pd_bw) ? pd_bw : 0.0},
          {"sample_rate_hz", sc.detection.photodiode.sample_rate_hz},
          {"noise_rms", sc.detection.photodiode.noise_rms}}}};
    j["analysis"] = {{"t_a_min_s", sc.analysis.t_a_min_s},
                     {"t_a_max_s", sc.analysis.t_a_max_s},
                     {"points_per_decade", sc.analysis.points_per_decade},
                     {"operating_point_rad", sc.analysis.operating_point_rad},
                     {"psd_segment_length", sc.analysis.psd_segment_length}};
    j["outputs"] = {{"stabilized_trace", sc.outputs.stabilized_trace},
                    {"error_trace", sc.outputs.error_trace},
                    {"correction_trace", sc.outputs.correction_trace},
                    {"pattern", sc.outputs.pattern},
                    {"psd", sc.outputs.psd},
                    {"sigma", sc.outputs.sigma},
                    {"counts", sc.outputs.counts},
                    {"preview_stride", sc.outputs.preview_stride}};
    return j.dump();
}

std::string scenario_hash(const Scenario& scenario) {
    std::string canon = canonical_json(scenario);
    std::uint64_t h = rng::fnv1a64(canon);
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

} // namespace tfsim::scenario
