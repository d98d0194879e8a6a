#include "tfsim/noise.hpp"

#include "tfsim/constants.hpp"
#include "tfsim/fft.hpp"
#include "tfsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace tfsim::noise {

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::string format_provenance(std::uint64_t seed, const std::string& stream) {
    return "philox4x32:seed=" + std::to_string(seed) + ":stream=" + stream;
}

} // namespace

bool NoiseSpec::is_zero() const {
    for (double v : h)
        if (v != 0.0) return false;
    if (!tones.empty()) return false;
    if (transients && transients->rate_hz > 0.0 && transients->amplitude_rad != 0.0)
        return false;
    return true;
}

double NoiseSpec::psd_at(double f_hz) const {
    double s = h[0];
    double inv = 1.0 / f_hz;
    double p = 1.0;
    for (int a = 1; a <= 4; ++a) {
        p *= inv;
        s += h[a] * p;
    }
    return s;
}

NoiseSpec NoiseSpec::scaled_amplitude(double scale) const {
    NoiseSpec out = *this;
    for (double& v : out.h)
        v *= scale * scale;
    for (Tone& t : out.tones)
        t.amplitude_rad *= scale;
    if (out.transients)
        out.transients->amplitude_rad *= scale;
    return out;
}

void NoiseSpec::validate() const {
    for (double v : h) {
        if (!(v >= 0.0))
            throw std::invalid_argument("NoiseSpec: power-law coefficients must be >= 0 and finite");
    }
    for (const Tone& t : tones) {
        if (!(t.freq_hz > 0.0))
            throw std::invalid_argument("NoiseSpec: tone frequency must be > 0");
        if (!(t.amplitude_rad >= 0.0))
            throw std::invalid_argument("NoiseSpec: tone amplitude must be >= 0");
    }
    if (transients) {
        if (!(transients->rate_hz >= 0.0) || !(transients->duration_s >= 0.0))
            throw std::invalid_argument("NoiseSpec: transient rate and duration must be >= 0");
    }
}

PhaseTrace gen_power_law(const NoiseSpec& spec, double sample_rate_hz,
                         std::size_t n, std::uint64_t seed,
                         const std::string& stream_label) {
    spec.validate();
    if (sample_rate_hz <= 0.0)
        throw std::invalid_argument("gen_power_law: sample_rate_hz must be > 0");
    if (n < 2 || !is_power_of_two(n))
        throw std::invalid_argument("gen_power_law: n must be a power of two >= 2");
    for (const Tone& t : spec.tones) {
        if (t.freq_hz >= sample_rate_hz / 2.0)
            throw std::invalid_argument("gen_power_law: tone frequency must be below f_s/2");
    }

    PhaseTrace out;
    out.sample_rate_hz = sample_rate_hz;
    out.provenance = format_provenance(seed, stream_label);

    const double df = sample_rate_hz / static_cast<double>(n);

    if (spec.is_zero()) {
        out.samples.assign(n, 0.0);
        return out;
    }

    bool has_power_law = false;
    for (double v : spec.h)
        if (v != 0.0) has_power_law = true;

    if (has_power_law) {
        // Hermitian half-spectrum.  With FFTW's unnormalized c2r transform the
        // time-domain variance is sum_k E|X_k|^2 over all n bins, i.e. twice
        // the sum over positive bins, so E|X_k|^2 = S(f_k) df / 2 yields
        // var = sum S(f_k) df as required of a one-sided density.
        rng::Stream gauss(seed, stream_label + ".spectrum");
        std::vector<std::complex<double>> half(n / 2 + 1, {0.0, 0.0});
        for (std::size_t k = 1; k < n / 2; ++k) {
            double sk = spec.psd_at(static_cast<double>(k) * df);
            double sigma = std::sqrt(sk * df / 2.0);
            // Complex Gaussian with E|X|^2 = sigma^2: each quadrature sigma/sqrt(2).
            double re = gauss.next_gaussian();
            double im = gauss.next_gaussian();
            half[k] = {sigma * 0.7071067811865476 * re,
                       sigma * 0.7071067811865476 * im};
        }
        // Nyquist bin is real-valued with the full variance.
        double s_nyq = spec.psd_at(sample_rate_hz / 2.0);
        half[n / 2] = {std::sqrt(s_nyq * df) * gauss.next_gaussian(), 0.0};

        out.samples = fft::irfft(half, n);
    } else {
        out.samples.assign(n, 0.0);
    }

    const double dt = 1.0 / sample_rate_hz;

    if (!spec.tones.empty()) {
        rng::Stream phase(seed, stream_label + ".tones");
        for (const Tone& t : spec.tones) {
            double theta = constants::two_pi * phase.next_uniform();
            double w = constants::two_pi * t.freq_hz * dt;
            for (std::size_t i = 0; i < n; ++i)
                out.samples[i] += t.amplitude_rad * std::sin(w * static_cast<double>(i) + theta);
        }
    }

    if (spec.transients && spec.transients->rate_hz > 0.0 &&
        spec.transients->amplitude_rad != 0.0 && spec.transients->duration_s > 0.0) {
        rng::Stream ev(seed, stream_label + ".transients");
        const TransientModel& m = *spec.transients;
        const double duration = static_cast<double>(n) * dt;
        double t_event = ev.next_exponential() / m.rate_hz;
        while (t_event < duration) {
            std::size_t start = static_cast<std::size_t>(t_event * sample_rate_hz);
            std::size_t len = static_cast<std::size_t>(m.duration_s * sample_rate_hz);
            for (std::size_t j = 0; j < len && start + j < n; ++j) {
                double x = static_cast<double>(j) / static_cast<double>(len);
                double env = std::sin(constants::pi * x);
                out.samples[start + j] += m.amplitude_rad * env * env;
            }
            t_event += ev.next_exponential() / m.rate_hz;
        }
    }

    return out;
}

PhaseTrace delayed_self(const PhaseTrace& trace, double delay_s) {
    trace.validate();
    if (delay_s < 0.0)
        throw std::invalid_argument("delayed_self: delay must be >= 0");

    const std::size_t d =
        static_cast<std::size_t>(std::llround(delay_s * trace.sample_rate_hz));

    PhaseTrace out;
    out.sample_rate_hz = trace.sample_rate_hz;
    out.provenance = trace.provenance + ":delayed_self";

    if (d == 0) {
        out.t0_s = trace.t0_s;
        out.samples.assign(trace.size(), 0.0);
        return out;
    }
    if (d + 2 > trace.size())
        throw std::invalid_argument("delayed_self: trace shorter than delay, insufficient data");

    out.t0_s = trace.t0_s + static_cast<double>(d) / trace.sample_rate_hz;
    out.samples.resize(trace.size() - d);
    for (std::size_t i = 0; i < out.samples.size(); ++i)
        out.samples[i] = trace.samples[i + d] - trace.samples[i];
    return out;
}

NoiseSpec laser_spec(double linewidth_hz) {
    if (!(linewidth_hz > 0.0))
        throw std::invalid_argument("laser_spec: linewidth must be > 0");
    NoiseSpec spec;
    spec.h[2] = linewidth_hz / constants::pi;
    return spec;
}

double drift_p95(const PhaseTrace& trace, double window_s) {
    trace.validate();
    const std::size_t m =
        static_cast<std::size_t>(std::llround(window_s * trace.sample_rate_hz));
    if (m == 0 || m >= trace.size())
        throw std::invalid_argument("drift_p95: window must resolve to [1, n) samples");

    std::vector<double> deltas(trace.size() - m);
    for (std::size_t i = 0; i + m < trace.size(); ++i)
        deltas[i] = std::abs(trace.samples[i + m] - trace.samples[i]);

    std::size_t k = static_cast<std::size_t>(0.95 * static_cast<double>(deltas.size() - 1));
    std::nth_element(deltas.begin(), deltas.begin() + static_cast<std::ptrdiff_t>(k),
                     deltas.end());
    return deltas[k];
}

NoiseSpec calibrate_fiber_spec(double target_drift_rad_per_ms,
                               const NoiseSpec& base_shape) {
    base_shape.validate();
    if (!(target_drift_rad_per_ms > 0.0))
        throw std::invalid_argument("calibrate_fiber_spec: target drift must be > 0");
    if (base_shape.is_zero())
        throw std::invalid_argument("calibrate_fiber_spec: base shape has no noise to scale");

    // Fixed internal seed set and generation settings; part of the documented
    // calibration procedure, not user-configurable.
    constexpr std::uint64_t kCalSeeds[] = {
        0xC0FFEE00, 0xC0FFEE01, 0xC0FFEE02, 0xC0FFEE03,
        0xC0FFEE04, 0xC0FFEE05, 0xC0FFEE06, 0xC0FFEE07,
    };
    constexpr double kCalRate = 2.0e6;
    constexpr std::size_t kCalSamples = 1u << 20;

    const std::size_t m = static_cast<std::size_t>(std::llround(1e-3 * kCalRate));
    std::vector<double> deltas;
    deltas.reserve((kCalSamples - m) * std::size(kCalSeeds));
    for (std::uint64_t seed : kCalSeeds) {
        PhaseTrace t = gen_power_law(base_shape, kCalRate, kCalSamples, seed, "calibration");
        for (std::size_t i = 0; i + m < t.size(); ++i)
            deltas.push_back(std::abs(t.samples[i + m] - t.samples[i]));
    }
    std::size_t k = static_cast<std::size_t>(0.95 * static_cast<double>(deltas.size() - 1));
    std::nth_element(deltas.begin(), deltas.begin() + static_cast<std::ptrdiff_t>(k),
                     deltas.end());
    double p95 = deltas[k];
    if (!(p95 > 0.0))
        throw std::runtime_error("calibrate_fiber_spec: base shape produced zero drift");

    return base_shape.scaled_amplitude(target_drift_rad_per_ms / p95);
}

} // namespace tfsim::noise
