#pragma once

#include "tfsim/trace.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tfsim::noise {

// Deterministic sinusoidal component added on top of the power-law floor.
// The start phase is drawn once from the generation seed.
struct Tone {
    double freq_hz = 0.0;
    double amplitude_rad = 0.0;
};

// Sparse phase bumps at Poisson-distributed times (slammed doors, trams,
// anything man-made).  Each event adds a smooth sin^2 pulse.
struct TransientModel {
    double rate_hz = 0.0;       // mean event rate
    double amplitude_rad = 0.0; // peak excursion per event
    double duration_s = 0.0;    // pulse support
};

// Power-law phase-noise description: one-sided PSD
//   S_phi(f) = sum_a h[a] * f^(-a),  a = 0..4
// in rad^2/Hz, plus optional tones and transients.
struct NoiseSpec {
    // h[0] multiplies f^0, h[1] f^-1, ... h[4] f^-4.
    std::array<double, 5> h{0.0, 0.0, 0.0, 0.0, 0.0};
    std::vector<Tone> tones;
    std::optional<TransientModel> transients;

    bool is_zero() const;
    // One-sided PSD of the power-law part at frequency f > 0.
    double psd_at(double f_hz) const;
    // Multiply every amplitude by `scale` (coefficients scale by scale^2).
    NoiseSpec scaled_amplitude(double scale) const;
    void validate() const;
};

// Synthesize a phase trace whose ensemble-average one-sided PSD equals the
// spec over [f_s/n, f_s/2].  Frequency-domain synthesis: each hermitian bin
// gets an independent complex Gaussian weighted by sqrt(S(f_k) df / 2), then
// one inverse real FFT.  n must be a power of two (>= 2); same (spec, f_s, n,
// seed, stream) gives bit-identical samples.
PhaseTrace gen_power_law(const NoiseSpec& spec, double sample_rate_hz,
                         std::size_t n, std::uint64_t seed,
                         const std::string& stream_label = "noise");

// Delayed-self-interference observable: out(t) = phi(t) - phi(t - delay).
// The output starts delay seconds later and is shorter by round(delay*f_s)
// samples.  delay == 0 returns zeros of full length.
PhaseTrace delayed_self(const PhaseTrace& trace, double delay_s);

// White-frequency-noise spec for a Lorentzian laser line:
// h_-2 = linewidth / pi (rad^2 Hz).  Rejects linewidth <= 0.
NoiseSpec laser_spec(double linewidth_hz);

// Scale `base_shape` so that the 95th percentile of |phi(t+1ms) - phi(t)|
// equals target_drift_rad_per_ms.  Monte Carlo over a fixed internal seed
// set; the statistic is linear in amplitude so a single scaling step lands
// exactly on target for those seeds.  Rejects zero/empty base shapes.
NoiseSpec calibrate_fiber_spec(double target_drift_rad_per_ms,
                               const NoiseSpec& base_shape);

// Measured drift statistic used by the calibration: pooled 95th percentile of
// |phi(t + window) - phi(t)| over all start samples, rad per window.
double drift_p95(const PhaseTrace& trace, double window_s = 1e-3);

} // namespace tfsim::noise
