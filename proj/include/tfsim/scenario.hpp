#pragma once

#include "tfsim/constants.hpp"
#include "tfsim/control.hpp"
#include "tfsim/detect.hpp"
#include "tfsim/link.hpp"
#include "tfsim/noise.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tfsim::scenario {

/// Configuration problems (bad schema, invalid values).  The CLI maps this
/// to its config-error exit code; messages carry the offending field path.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Statistical-analysis settings for a run.
struct AnalysisConfig {
    double t_a_min_s = 1e-4;  ///< shortest averaging time on the log grid
    double t_a_max_s = 1.0;   ///< longest averaging time (must fit the trace)
    int points_per_decade = 12;
    double operating_point_rad = constants::pi / 2.0; ///< classical readout offset
    std::size_t psd_segment_length = 0;               ///< 0 = automatic

    std::vector<double> grid() const; ///< ascending log-spaced averaging times
    void validate(double duration_s, double sample_rate_hz) const;
};

/// Photon-counting chain settings.
struct DetectionConfig {
    double source_rate_hz = 1e11;   ///< photon flux leaving each transmitter
    double attenuation_db = 80.0;   ///< attenuation down to the few-photon level
    double counting_duration_s = 0; ///< 0 = full trace; otherwise leading window
    detect::SpdConfig spd;
    detect::BackgroundModel background;
    detect::PhotodiodeConfig photodiode;

    void validate(double duration_s) const;
};

/// Which files run_scenario writes (report.json is always written).
struct OutputConfig {
    bool stabilized_trace = true;  ///< phase preview CSV
    bool error_trace = false;      ///< loop error preview CSV
    bool correction_trace = false; ///< actuator preview CSV
    bool pattern = false;          ///< acquired interference preview CSV
    bool psd = true;
    bool sigma = true;
    bool counts = true;
    std::size_t preview_stride = 0; ///< 0 = auto (~1e5 rows per preview)
};

/// A complete, self-contained description of one simulated link run.
struct Scenario {
    std::string name;
    std::uint64_t seed = 1;

    control::RunConfig run;      ///< loop settings, f_s, duration, toggles
    link::LinkTopology topology; ///< spans and wavelength plan (no noise attached)

    noise::NoiseSpec fiber_base;            ///< link-total fiber noise shape
    double calibrate_drift_rad_per_ms = 0.0; ///< 0 = use fiber_base as-is
    double slave_linewidth_hz = 0.0;        ///< per QKD laser, before its lock
    double reference_linewidth_hz = 0.0;    ///< shared reference laser
    std::optional<noise::NoiseSpec> extra_alice; ///< uncommon-path noise, Alice
    std::optional<noise::NoiseSpec> extra_bob;   ///< uncommon-path noise, Bob

    DetectionConfig detection;
    AnalysisConfig analysis;
    OutputConfig outputs;

    void validate() const;
};

/// Parse and validate a scenario file.  Unknown keys, wrong types, and
/// invalid values raise ConfigError with the JSON field path.
Scenario load_scenario(const std::filesystem::path& path);

/// Parse from a JSON string (same rules); `source` names it in errors.
Scenario parse_scenario(const std::string& json_text, const std::string& source);

/// Canonical serialization: sorted keys, compact, all semantic fields
/// including the (possibly overridden) seed.  Hashing this makes the run
/// hash independent of file formatting but sensitive to every field.
std::string canonical_json(const Scenario& scenario);

/// FNV-1a 64-bit hash of canonical_json, as "fnv1a64:<16 hex digits>".
std::string scenario_hash(const Scenario& scenario);

} // namespace tfsim::scenario
