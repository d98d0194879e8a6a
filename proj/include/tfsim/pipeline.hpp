#pragma once

#include "tfsim/analysis.hpp"
#include "tfsim/detect.hpp"
#include "tfsim/link.hpp"
#include "tfsim/scenario.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace tfsim::pipeline {

/// Loop performance numbers for one run.  The open-loop input is
/// reconstructed from the recorded residual and actuator traces
/// (input = error - correction), so the suppression figure is measured on
/// exactly the disturbance the loop saw.
struct LoopMetrics {
    bool oscillation_detected = false;
    double open_loop_rms_rad = 0.0;
    double closed_loop_rms_rad = 0.0;
    double in_band_hz = 0.0;      ///< upper edge of the suppression band
    double suppression_db = 0.0;  ///< 10 log10(open/closed band power)
};

/// Photon-counting summary for the run's counting window.
struct CountingSummary {
    double incident_rate_hz = 0.0; ///< two-port flux after attenuation
    double duration_s = 0.0;       ///< counting window actually used
    std::size_t counts_correct = 0;
    std::size_t counts_error = 0;
    double measured_rate_correct_hz = 0.0;
    double measured_rate_error_hz = 0.0;
    detect::ClickBudget budget_correct;
    detect::ClickBudget budget_error;
    detect::BackgroundBudget background;
};

/// One file written by a run, with its content checksum.
struct FileEntry {
    std::string name;               ///< filename within the output directory
    std::filesystem::path path;     ///< full path as written
    std::string checksum;           ///< "fnv1a64:<16 hex>"
};

/// Everything run_scenario computed.  The same data (minus the full sigma
/// curve, which lives in sigma.csv) is serialized to report.json.
struct RunReport {
    std::string name;
    std::string hash;               ///< canonical scenario hash
    std::uint64_t seed = 0;

    link::LossBudget loss;
    link::TimingSkew timing;
    LoopMetrics loop;

    analysis::SigmaCurve sigma;     ///< folded (as-measured) stability curve
    double sigma_short_t_a_s = 0.0; ///< grid point nearest 10 ms
    double sigma_short_rad = 0.0;

    analysis::QberEstimate qber_small;
    analysis::QberEstimate qber_integral;
    analysis::QberEstimate qber_counts;
    bool qber_counts_valid = false;
    std::string qber_counts_error;  ///< why counts-based QBER is missing

    CountingSummary counting;
    std::vector<FileEntry> files;   ///< outputs excluding report.json
};

/// Run one scenario end to end and write its outputs into out_dir
/// (created if needed): trace previews, psd.csv (spectrum of the
/// stabilized differential phase before folding), sigma.csv (stability of
/// the retrieved, folded phase), counts.csv, qber.csv, and report.json.
/// Deterministic for a given (scenario, seed).
RunReport run_scenario(const scenario::Scenario& sc,
                       const std::filesystem::path& out_dir);

/// Stand-alone analysis of an exported phase trace: PSD, stability curve,
/// threshold crossings, and phase-derived QBER, written next to a
/// machine-readable analysis.json.  The averaging-time grid is clipped to
/// what the trace can support.
struct AnalyzeReport {
    double sample_rate_hz = 0.0;
    std::size_t samples = 0;
    double duration_s = 0.0;

    analysis::SigmaCurve sigma;
    double sigma_short_t_a_s = 0.0;
    double sigma_short_rad = 0.0;
    analysis::QberEstimate qber_small;
    analysis::QberEstimate qber_integral;

    std::vector<FileEntry> files;
};

AnalyzeReport analyze_trace(const std::filesystem::path& trace_csv,
                            scenario::AnalysisConfig analysis,
                            const std::filesystem::path& out_dir);

/// Point-by-point comparison of two completed run directories (A is the
/// baseline, B the candidate): per averaging time sigma_B / sigma_A, and the
/// in-band (default up to 5 kHz) spectral suppression of B relative to A.
struct ComparePoint {
    double t_a_s = 0.0;
    double sigma_a_rad = 0.0;
    double sigma_b_rad = 0.0;
    double ratio = 0.0;             ///< sigma_b / sigma_a
};

struct CompareResult {
    std::vector<ComparePoint> sigma;
    double band_hz = 0.0;
    double band_power_a = 0.0;      ///< rad^2 in [0, band_hz], run A
    double band_power_b = 0.0;
    double suppression_db = 0.0;    ///< 10 log10(A/B); positive = B quieter
};

/// Both directories must contain psd.csv and sigma.csv produced with the
/// same averaging-time grid; mismatched grids raise scenario::ConfigError.
CompareResult compare_runs(const std::filesystem::path& dir_a,
                           const std::filesystem::path& dir_b);

} // namespace tfsim::pipeline
