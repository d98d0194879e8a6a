#include "tfsim/control.hpp"

#include "tfsim/constants.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tfsim::control {

namespace {

// Numerical containment for unstable loops: the correction is clamped here so
// oscillation grows to a detectable, finite amplitude instead of overflowing.
constexpr double kGuardRangeRad = 1e9;

std::size_t next_power_of_two(std::size_t n) {
    std::size_t p = 2;
    while (p < n)
        p *= 2;
    return p;
}

double rms(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v)
        acc += x * x;
    return std::sqrt(acc / static_cast<double>(v.size()));
}

} // namespace

double LoopConfig::effective_latency_s() const {
    return latency_s < 0.0 ? 2.0 / sample_rate_hz : latency_s;
}

double LoopConfig::effective_integral_corner_hz() const {
    return integral_corner_hz < 0.0 ? bandwidth_hz / 10.0 : integral_corner_hz;
}

void LoopConfig::validate() const {
    if (!(sample_rate_hz > 0.0))
        throw std::invalid_argument("LoopConfig: sample_rate_hz must be > 0");
    if (!(bandwidth_hz > 0.0))
        throw std::invalid_argument("LoopConfig: bandwidth must be > 0");
    if (bandwidth_hz >= sample_rate_hz / 10.0)
        throw std::invalid_argument("LoopConfig: bandwidth must stay below f_s/10 for the "
                                    "discrete loop to be meaningful");
    if (!(error_scale > 0.0))
        throw std::invalid_argument("LoopConfig: error_scale must be > 0");
    if (effective_integral_corner_hz() > bandwidth_hz)
        throw std::invalid_argument("LoopConfig: integral corner above the loop bandwidth");
    if (slew_limit_rad_per_s && !(*slew_limit_rad_per_s > 0.0))
        throw std::invalid_argument("LoopConfig: slew limit must be > 0");
    if (range_limit_rad && !(*range_limit_rad > 0.0))
        throw std::invalid_argument("LoopConfig: range limit must be > 0");
}

LoopState LoopState::init(const LoopConfig& cfg) {
    cfg.validate();
    LoopState st;
    auto d = static_cast<std::size_t>(
        std::llround(cfg.effective_latency_s() * cfg.sample_rate_hz));
    d = std::max<std::size_t>(1, d);
    st.delay_line.assign(d, 0.0);
    return st;
}

double loop_step(LoopState& state, double error_rad, const LoopConfig& cfg) {
    if (!std::isfinite(error_rad))
        throw std::invalid_argument("loop_step: non-finite error");
    if (state.delay_line.empty())
        throw std::invalid_argument("loop_step: state not initialized for this config");

    const double fs = cfg.sample_rate_hz;
    const double kp = constants::two_pi * cfg.bandwidth_hz / fs / cfg.error_scale;
    const double f_i = cfg.effective_integral_corner_hz();
    const double ki = kp * constants::two_pi * f_i / fs;
    const double kd = cfg.kind == LoopKind::pid
                          ? kp * fs / (constants::two_pi * 2.0 * cfg.bandwidth_hz)
                          : 0.0;

    const double scaled = error_rad * cfg.error_scale;
    state.integrator += scaled;
    double u = kp * scaled + ki * state.integrator;
    if (kd != 0.0) {
        u += kd * (state.primed ? scaled - state.prev_scaled_error : 0.0);
    }
    state.prev_scaled_error = scaled;
    state.primed = true;

    // Latency: the freshly computed output enters the line; the oldest one
    // reaches the actuator this sample.
    state.delay_line.push_back(u);
    double applied = state.delay_line.front();
    state.delay_line.pop_front();

    if (cfg.slew_limit_rad_per_s) {
        double max_step = *cfg.slew_limit_rad_per_s / fs;
        applied = std::clamp(applied, -max_step, max_step);
    }
    // Negative feedback: the actuator steps against the error.
    double next = state.correction - applied;
    double range = cfg.range_limit_rad ? *cfg.range_limit_rad : kGuardRangeRad;
    state.correction = std::clamp(next, -range, range);
    return state.correction;
}

PhaseTrace qkd_laser_lock(const PhaseTrace& laser_noise, double bandwidth_hz) {
    laser_noise.validate();
    if (laser_noise.sample_rate_hz < 5e6)
        throw std::invalid_argument("qkd_laser_lock: needs f_s >= 5 MHz");
    if (!(bandwidth_hz > 0.0) || bandwidth_hz >= laser_noise.sample_rate_hz / 2.0)
        throw std::invalid_argument("qkd_laser_lock: bandwidth must be in (0, f_s/2)");

    const double fs = laser_noise.sample_rate_hz;
    // Prewarp so the -3 dB corner lands exactly on the lock bandwidth.
    const double alpha = std::tan(constants::pi * bandwidth_hz / fs);
    const double a0 = 1.0 + alpha;
    const double b1 = 1.0 - alpha;

    PhaseTrace out;
    out.sample_rate_hz = fs;
    out.t0_s = laser_noise.t0_s;
    out.provenance = laser_noise.provenance + ":pll_residual";
    out.samples.resize(laser_noise.size());
    double y = 0.0, x_prev = laser_noise.samples[0];
    // Start the filter settled on the first sample so there is no artificial
    // step transient from the arbitrary trace origin.
    out.samples[0] = 0.0;
    for (std::size_t i = 1; i < laser_noise.size(); ++i) {
        double x = laser_noise.samples[i];
        y = (x - x_prev + b1 * y) / a0;
        x_prev = x;
        out.samples[i] = y;
    }
    return out;
}

ClosedLoopResult closed_loop_run(const NoiseInputs& inputs,
                                 const link::LinkTopology& topology,
                                 const RunConfig& config, std::uint64_t seed) {
    topology.validate();
    LoopConfig loop_cfg = config.fiber_loop;
    loop_cfg.sample_rate_hz = config.sample_rate_hz;
    loop_cfg.validate();
    if (!(config.duration_s > 0.0))
        throw std::invalid_argument("closed_loop_run: duration must be > 0");
    if (!(config.sample_rate_hz > 0.0))
        throw std::invalid_argument("closed_loop_run: sample rate must be > 0");

    const double fs = config.sample_rate_hz;
    const auto n = static_cast<std::size_t>(std::llround(config.duration_s * fs));
    if (n < 4)
        throw std::invalid_argument("closed_loop_run: duration too short");

    // The reference-laser delayed-self term needs history before t0, so the
    // synthesis length covers the record plus the unbalance delay.
    const link::TimingSkew skew = link::timing_skew(topology);
    const auto unbalance_samples =
        static_cast<std::size_t>(std::llround(skew.unbalance_delay_s * fs));
    const std::size_t n_gen = next_power_of_two(n + unbalance_samples);

    // Summed fiber phase at the sensing wavelength, Alice minus Bob.  The
    // loop and the mismatch residual are both linear in this sum, so the
    // per-span traces never need to be held individually.
    std::vector<double> fiber_sum(n, 0.0);
    auto add_fiber = [&](const noise::NoiseSpec& spec, const char* label, double sign) {
        if (spec.is_zero())
            return;
        PhaseTrace t = noise::gen_power_law(spec, fs, n_gen, seed, label);
        for (std::size_t i = 0; i < n; ++i)
            fiber_sum[i] += sign * t.samples[i];
    };
    add_fiber(inputs.service_alice, "fiber.service_alice", +1.0);
    add_fiber(inputs.qkd_alice, "fiber.qkd_alice", +1.0);
    add_fiber(inputs.service_bob, "fiber.service_bob", -1.0);
    add_fiber(inputs.qkd_bob, "fiber.qkd_bob", -1.0);

    // Loop-independent terms of the QKD differential phase.
    std::vector<double> other(n, 0.0);
    auto add_locked_slave = [&](const noise::NoiseSpec& spec, const char* label,
                                double sign) {
        if (spec.is_zero())
            return;
        PhaseTrace t = noise::gen_power_law(spec, fs, n_gen, seed, label);
        t.samples.resize(n);
        PhaseTrace r = qkd_laser_lock(t, config.qkd_pll_bandwidth_hz);
        for (std::size_t i = 0; i < n; ++i)
            other[i] += sign * r.samples[i];
    };
    add_locked_slave(inputs.slave_alice, "laser.slave_alice", +1.0);
    add_locked_slave(inputs.slave_bob, "laser.slave_bob", -1.0);

    if (!inputs.reference.is_zero() && unbalance_samples > 0) {
        PhaseTrace ref =
            noise::gen_power_law(inputs.reference, fs, n_gen, seed, "laser.reference");
        for (std::size_t i = 0; i < n; ++i)
            other[i] += ref.samples[i + unbalance_samples] - ref.samples[i];
    }

    auto add_extra = [&](const std::optional<noise::NoiseSpec>& spec, const char* label,
                         double sign) {
        if (!spec || spec->is_zero())
            return;
        PhaseTrace t = noise::gen_power_law(*spec, fs, n_gen, seed, label);
        for (std::size_t i = 0; i < n; ++i)
            other[i] += sign * t.samples[i];
    };
    add_extra(inputs.extra_alice, "fiber.extra_alice", +1.0);
    add_extra(inputs.extra_bob, "fiber.extra_bob", -1.0);

    // The correction cancels the sensing-wavelength phase; the QKD light sees
    // the same fiber scaled by nu_R/nu_S, so what survives a perfect loop is
    // fiber_sum * (nu_R - nu_S)/nu_S.
    const double nu_ratio =
        config.nu_mismatch ? topology.plan.reference_hz / topology.plan.sensing_hz : 1.0;

    ClosedLoopResult res;
    res.stabilized.sample_rate_hz = fs;
    res.error.sample_rate_hz = fs;
    res.correction.sample_rate_hz = fs;
    res.stabilized.provenance = "closed_loop_run:stabilized:seed=" + std::to_string(seed);
    res.error.provenance = "closed_loop_run:error:seed=" + std::to_string(seed);
    res.correction.provenance = "closed_loop_run:correction:seed=" + std::to_string(seed);
    res.stabilized.samples.resize(n);
    res.error.samples.resize(n);
    res.correction.samples.resize(n);

    if (config.stabilization) {
        LoopState st = LoopState::init(loop_cfg);
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double e = fiber_sum[i] + c;
            res.error.samples[i] = e;
            res.correction.samples[i] = c;
            res.stabilized.samples[i] = nu_ratio * fiber_sum[i] + c + other[i];
            c = loop_step(st, e, loop_cfg);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            res.error.samples[i] = fiber_sum[i];
            res.correction.samples[i] = 0.0;
            res.stabilized.samples[i] = nu_ratio * fiber_sum[i] + other[i];
        }
    }

    res.open_loop_rms = rms(fiber_sum);
    res.closed_loop_rms = rms(res.error.samples);
    bool finite = std::isfinite(res.closed_loop_rms);
    res.oscillation_detected =
        config.stabilization && (!finite || res.closed_loop_rms > res.open_loop_rms);
    return res;
}

} // namespace tfsim::control
