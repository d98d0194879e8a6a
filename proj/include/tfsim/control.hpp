#pragma once

#include "tfsim/link.hpp"
#include "tfsim/noise.hpp"
#include "tfsim/trace.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

namespace tfsim::control {

enum class LoopKind { pi, pid };

// Discrete-time controller for the fiber stabilization loop.
//
// The actuator is a frequency shifter, so the applied correction phase is an
// accumulator fed by the controller output.  Gain mapping (documented, fixed):
//   kp = 2*pi*bandwidth / f_s      per-sample increment per rad of error,
//                                  giving open loop G = BW/(jf) with unity
//                                  gain at the configured bandwidth;
//   ki = kp * 2*pi*integral_corner / f_s
//                                  second integration below the corner
//                                  (default bandwidth/10, 0 disables);
//   kd (PID only) adds phase lead with the derivative corner at 2*bandwidth.
// The error prescaler models the divide-by-N phase detector: the controller
// operates on error * error_scale with gains rescaled by 1/error_scale, so
// loop dynamics are independent of the prescale value.
struct LoopConfig {
    LoopKind kind = LoopKind::pi;
    double bandwidth_hz = 50e3;
    double sample_rate_hz = 5e6;
    // Total loop latency; defaults to 2 samples when negative.
    double latency_s = -1.0;
    // Second-integrator corner; negative selects bandwidth/10, 0 disables.
    double integral_corner_hz = -1.0;
    double error_scale = 0.1;
    std::optional<double> slew_limit_rad_per_s;
    std::optional<double> range_limit_rad;

    double effective_latency_s() const;
    double effective_integral_corner_hz() const;
    void validate() const;
};

// Mutable loop state: the second-integrator accumulator, the actuator
// accumulator, and the latency delay line (length round(latency * f_s),
// minimum one sample since a causal discrete loop cannot act in-sample).
struct LoopState {
    double integrator = 0.0;        // accumulated scaled error (I path)
    double correction = 0.0;        // actuator phase, rad
    double prev_scaled_error = 0.0; // for the D path
    std::deque<double> delay_line;  // pending controller outputs
    bool primed = false;

    static LoopState init(const LoopConfig& cfg);
};

// Advance the loop by one sample: feed the current error observable (rad),
// get back the correction phase to apply at the next sample.  Rejects
// non-finite errors.
double loop_step(LoopState& state, double error_rad, const LoopConfig& cfg);

// Residual laser phase after the offset phase-lock to the (noiseless by
// convention) reference: one-pole high-pass at the lock bandwidth, bilinear
// with prewarped corner.  Requires f_s >= 5 MHz so the 0.9 MHz default
// corner stays well below Nyquist.
PhaseTrace qkd_laser_lock(const PhaseTrace& laser_noise, double bandwidth_hz);

// Noise descriptions for every independent source in the chain.
struct NoiseInputs {
    noise::NoiseSpec service_alice, qkd_alice, service_bob, qkd_bob;
    noise::NoiseSpec slave_alice, slave_bob;  // free-running QKD diode lasers
    noise::NoiseSpec reference;               // metrological reference laser
    std::optional<noise::NoiseSpec> extra_alice, extra_bob; // uncommon paths
};

struct RunConfig {
    LoopConfig fiber_loop;
    double qkd_pll_bandwidth_hz = 0.9e6;
    bool stabilization = true;
    bool nu_mismatch = true;
    double sample_rate_hz = 5e6;
    double duration_s = 1.0;
};

struct ClosedLoopResult {
    PhaseTrace stabilized;    // QKD differential phase at Charlie, rad
    PhaseTrace error;         // sensing observable the loop nulls, rad
    PhaseTrace correction;    // actuator phase, rad
    bool oscillation_detected = false;
    double open_loop_rms = 0.0;
    double closed_loop_rms = 0.0;
};

// Full chain: per-span fiber noise -> sensing observable -> loop error ->
// actuator correction on Alice's arm -> residual QKD differential phase
// including locked-laser residuals, the delayed-self term over the arm
// unbalance, and the frequency-mismatch residual of the cancelled fiber
// phase.  Deterministic per (inputs, topology, config, seed).
ClosedLoopResult closed_loop_run(const NoiseInputs& inputs,
                                 const link::LinkTopology& topology,
                                 const RunConfig& config, std::uint64_t seed);

} // namespace tfsim::control
