#pragma once

#include "tfsim/analysis.hpp"
#include "tfsim/interference.hpp"
#include "tfsim/trace.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tfsim::detect {

/// Classical photodiode + acquisition chain viewing an interference pattern.
struct PhotodiodeConfig {
    double analog_bandwidth_hz = 2e6; ///< first-order electrical response; +inf = ideal
    double sample_rate_hz = 5e6;      ///< acquisition rate of the digitizer
    double noise_rms = 0.0;           ///< additive white noise, normalized intensity units

    void validate() const;
};

/// Free-running single-photon detector.
struct SpdConfig {
    double efficiency = 0.1;       ///< click probability per incident signal photon
    double dead_time_s = 25e-6;    ///< non-extending (non-paralyzable) hold-off
    double dark_rate_hz = 4.52;    ///< intrinsic dark clicks (already a click rate)
    double jitter_rms_s = 150e-12; ///< Gaussian timestamp jitter per click

    void validate() const;
};

/// Stray-photon click rates at the detector output.  These are *detected*
/// rates, so the quantum efficiency is not applied to them again.
struct BackgroundModel {
    double raman_rate_hz = 0.0;    ///< scatter of co-propagating classical light
    double rayleigh_rate_hz = 0.0; ///< backscatter leaking through the return path
    double external_rate_hz = 0.0; ///< everything else (ambient, crosstalk)

    double total_hz() const { return raman_rate_hz + rayleigh_rate_hz + external_rate_hz; }
    void validate() const;
};

/// Timestamped clicks from one or more detectors over a measurement window.
/// `detector[i]` tags which port produced `times_s[i]`; times are sorted.
/// Records produced by spd_detect respect the dead time per detector before
/// jitter is applied.
struct CountRecord {
    std::vector<double> times_s;
    std::vector<std::uint8_t> detector;
    double duration_s = 0.0;

    std::size_t size() const { return times_s.size(); }
    std::size_t count_for(std::uint8_t tag) const;
    void validate() const;
};

/// One rate with its Poisson counting uncertainty over the budget window.
struct RateEstimate {
    double rate_hz = 0.0;
    double sigma_hz = 0.0; ///< sqrt(rate / duration)
};

/// Expected background click budget, per source and total.
struct BackgroundBudget {
    RateEstimate dark;
    RateEstimate raman;
    RateEstimate rayleigh;
    RateEstimate external;
    RateEstimate total;
    double duration_s = 0.0;
};

/// Expected click statistics for a constant incident signal flux.
struct ClickBudget {
    double signal_hz = 0.0;       ///< efficiency * incident flux
    double background_hz = 0.0;   ///< dark + background model total
    double total_hz = 0.0;        ///< before dead time
    double measured_hz = 0.0;     ///< total / (1 + total * dead_time)
    double expected_counts = 0.0; ///< measured rate integrated over the window
    double count_sigma = 0.0;     ///< Poisson standard deviation of the count
    double rate_sigma_hz = 0.0;   ///< count_sigma expressed as a rate
};

/// Measured rate of a non-paralyzable detector: R / (1 + R * dead_time).
double dead_time_rate(double true_rate_hz, double dead_time_s);

/// Acquire an interference pattern through the photodiode chain: first-order
/// low-pass at the analog bandwidth, resampling at the configured rate, and
/// additive white measurement noise (clamped back into [0, 1]).  Warns on
/// stderr when the acquisition rate undersamples the analog bandwidth.  An
/// infinite-bandwidth, noiseless, same-rate configuration is the identity.
interference::InterferencePattern photodiode_acquire(
    const interference::InterferencePattern& pattern, const PhotodiodeConfig& config,
    std::uint64_t seed, std::string_view stream_label = "photodiode");

/// Simulate one detector viewing a time-varying photon flux (photons/s).
/// Arrival candidates are drawn by thinning an upper-bounding Poisson process
/// at efficiency * max(flux) + dark + background; the dead-time filter then
/// drops candidates inside the hold-off window (without extending it), and
/// each surviving click is smeared by the timing jitter and the record
/// re-sorted.  Deterministic per (seed, stream_label).
CountRecord spd_detect(const PhaseTrace& flux_hz, const SpdConfig& spd,
                       const BackgroundModel& bg, std::uint64_t seed,
                       std::string_view stream_label = "detector",
                       std::uint8_t detector_tag = 0);

/// Same, for a flux that is constant over the window.
CountRecord spd_detect_constant(double flux_hz, double duration_s,
                                const SpdConfig& spd, const BackgroundModel& bg,
                                std::uint64_t seed,
                                std::string_view stream_label = "detector",
                                std::uint8_t detector_tag = 0);

/// Expected background rates with Poisson uncertainties over the window.
BackgroundBudget background_budget(const BackgroundModel& bg, const SpdConfig& spd,
                                   double duration_s);

/// Expected total click statistics for a constant signal flux.
ClickBudget click_budget(double incident_flux_hz, const SpdConfig& spd,
                         const BackgroundModel& bg, double duration_s);

/// Merge two records (e.g. the two output ports) into one time-sorted record.
CountRecord merge_records(const CountRecord& a, const CountRecord& b);

/// QBER from the two output ports: e = N_wrong / (N_right + N_wrong), with
/// Wilson 95% half-width uncertainty.  The records must cover the same
/// window; zero total counts fails (insufficient statistics), and an error
/// fraction above 1/2 fails validation since it indicates swapped ports.
analysis::QberEstimate qber_from_counts(const CountRecord& correct_port,
                                        const CountRecord& error_port);
analysis::QberEstimate qber_from_counts(std::size_t error_clicks,
                                        std::size_t total_clicks);

} // namespace tfsim::detect
