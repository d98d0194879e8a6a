#include "tfsim/detect.hpp"

#include "tfsim/constants.hpp"
#include "tfsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <string>

namespace tfsim::detect {

namespace {

// Wilson score interval at 95% two-sided confidence.
constexpr double kWilsonZ = 1.96;

std::vector<double> apply_dead_time(const std::vector<double>& candidates,
                                    double dead_time_s) {
    std::vector<double> clicks;
    clicks.reserve(candidates.size());
    double last = -std::numeric_limits<double>::infinity();
    for (double t : candidates) {
        if (t - last >= dead_time_s) {
            clicks.push_back(t);
            last = t;
        }
        // An arrival inside the hold-off window is lost without extending it.
    }
    return clicks;
}

void apply_jitter(std::vector<double>& clicks, double jitter_rms_s,
                  double duration_s, rng::Stream& stream) {
    if (jitter_rms_s <= 0.0)
        return;
    for (double& t : clicks) {
        t = std::clamp(t + jitter_rms_s * stream.next_gaussian(), 0.0, duration_s);
    }
    std::sort(clicks.begin(), clicks.end());
}

CountRecord finish_record(std::vector<double> candidates, const SpdConfig& spd,
                          double duration_s, std::uint64_t seed,
                          std::string_view stream_label, std::uint8_t tag) {
    std::vector<double> clicks = apply_dead_time(candidates, spd.dead_time_s);
    rng::Stream jitter(seed, std::string(stream_label) + ".jitter");
    apply_jitter(clicks, spd.jitter_rms_s, duration_s, jitter);

    CountRecord rec;
    rec.duration_s = duration_s;
    rec.detector.assign(clicks.size(), tag);
    rec.times_s = std::move(clicks);
    return rec;
}

analysis::QberEstimate wilson_estimate(std::size_t error_clicks,
                                       std::size_t total_clicks) {
    const double n = static_cast<double>(total_clicks);
    const double p = static_cast<double>(error_clicks) / n;
    const double z2 = kWilsonZ * kWilsonZ;
    const double denom = 1.0 + z2 / n;
    const double half =
        kWilsonZ * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;

    analysis::QberEstimate est;
    est.e = p;
    est.method = analysis::QberMethod::counts;
    est.sigma_phi_rad = 0.0;
    est.uncertainty = half;
    est.out_of_domain = false;
    est.validate();
    return est;
}

} // namespace

void PhotodiodeConfig::validate() const {
    if (!(analog_bandwidth_hz > 0.0))
        throw std::invalid_argument("PhotodiodeConfig: analog bandwidth must be > 0");
    if (!(sample_rate_hz > 0.0))
        throw std::invalid_argument("PhotodiodeConfig: sample rate must be > 0");
    if (!(noise_rms >= 0.0))
        throw std::invalid_argument("PhotodiodeConfig: noise RMS must be >= 0");
}

void SpdConfig::validate() const {
    if (!(efficiency >= 0.0) || efficiency > 1.0)
        throw std::invalid_argument("SpdConfig: efficiency must be in [0, 1]");
    if (dead_time_s < 0.0)
        throw std::invalid_argument("SpdConfig: dead time must be >= 0");
    if (dark_rate_hz < 0.0)
        throw std::invalid_argument("SpdConfig: dark rate must be >= 0");
    if (jitter_rms_s < 0.0)
        throw std::invalid_argument("SpdConfig: jitter must be >= 0");
}

void BackgroundModel::validate() const {
    if (raman_rate_hz < 0.0 || rayleigh_rate_hz < 0.0 || external_rate_hz < 0.0)
        throw std::invalid_argument("BackgroundModel: rates must be >= 0");
}

std::size_t CountRecord::count_for(std::uint8_t tag) const {
    return static_cast<std::size_t>(std::count(detector.begin(), detector.end(), tag));
}

void CountRecord::validate() const {
    if (!(duration_s > 0.0))
        throw std::invalid_argument("CountRecord: duration must be > 0");
    if (detector.size() != times_s.size())
        throw std::invalid_argument("CountRecord: tag/time length mismatch");
    if (!std::is_sorted(times_s.begin(), times_s.end()))
        throw std::invalid_argument("CountRecord: times must be sorted");
    for (double t : times_s) {
        if (!(t >= 0.0) || t > duration_s)
            throw std::invalid_argument("CountRecord: click outside the window");
    }
}

double dead_time_rate(double true_rate_hz, double dead_time_s) {
    if (true_rate_hz < 0.0 || dead_time_s < 0.0)
        throw std::invalid_argument("dead_time_rate: arguments must be >= 0");
    return true_rate_hz / (1.0 + true_rate_hz * dead_time_s);
}

interference::InterferencePattern photodiode_acquire(
    const interference::InterferencePattern& pattern, const PhotodiodeConfig& config,
    std::uint64_t seed, std::string_view stream_label) {
    config.validate();
    if (pattern.intensity.size() < 2 || !(pattern.sample_rate_hz > 0.0))
        throw std::invalid_argument("photodiode_acquire: pattern needs >= 2 samples");

    const double fs_in = pattern.sample_rate_hz;
    const double fs_out = config.sample_rate_hz;
    if (fs_out < 2.0 * std::min(config.analog_bandwidth_hz, fs_in / 2.0)) {
        std::cerr << "photodiode_acquire: acquisition rate " << fs_out
                  << " Hz undersamples the analog bandwidth "
                  << config.analog_bandwidth_hz << " Hz\n";
    }

    // First-order low-pass at the analog bandwidth, run at the input rate.
    // A corner at or above input Nyquist (incl. +inf) is a pass-through.
    std::vector<double> filtered;
    const std::vector<double>* source = &pattern.intensity;
    if (std::isfinite(config.analog_bandwidth_hz) &&
        config.analog_bandwidth_hz < fs_in / 2.0) {
        const double a =
            1.0 - std::exp(-constants::two_pi * config.analog_bandwidth_hz / fs_in);
        filtered.resize(pattern.intensity.size());
        double y = pattern.intensity.front();
        for (std::size_t i = 0; i < pattern.intensity.size(); ++i) {
            y += a * (pattern.intensity[i] - y);
            filtered[i] = y;
        }
        source = &filtered;
    }

    const double duration = static_cast<double>(pattern.intensity.size()) / fs_in;
    const auto n_out =
        std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(duration * fs_out)));
    const std::size_t last = source->size() - 1;

    interference::InterferencePattern out;
    out.sample_rate_hz = fs_out;
    out.t0_s = pattern.t0_s;
    out.operating_point_rad = pattern.operating_point_rad;
    out.intensity.resize(n_out);

    rng::Stream noise(seed, std::string(stream_label) + ".noise");
    const double ratio = fs_in / fs_out;
    for (std::size_t j = 0; j < n_out; ++j) {
        auto idx = static_cast<std::size_t>(
            std::llround(static_cast<double>(j) * ratio));
        double v = (*source)[std::min(idx, last)];
        if (config.noise_rms > 0.0)
            v = std::clamp(v + config.noise_rms * noise.next_gaussian(), 0.0, 1.0);
        out.intensity[j] = v;
    }
    return out;
}

CountRecord spd_detect(const PhaseTrace& flux_hz, const SpdConfig& spd,
                       const BackgroundModel& bg, std::uint64_t seed,
                       std::string_view stream_label, std::uint8_t detector_tag) {
    flux_hz.validate();
    spd.validate();
    bg.validate();

    double flux_max = 0.0;
    for (double r : flux_hz.samples) {
        if (!(r >= 0.0))
            throw std::invalid_argument("spd_detect: flux must be >= 0");
        flux_max = std::max(flux_max, r);
    }

    const double fs = flux_hz.sample_rate_hz;
    const double duration = flux_hz.duration_s();
    const double floor_rate = spd.dark_rate_hz + bg.total_hz();
    const double rate_max = spd.efficiency * flux_max + floor_rate;

    std::vector<double> candidates;
    if (rate_max > 0.0) {
        candidates.reserve(static_cast<std::size_t>(rate_max * duration * 1.1) + 16);
        rng::Stream arrivals(seed, std::string(stream_label) + ".arrivals");
        const std::size_t last_index = flux_hz.size() - 1;
        double t = 0.0;
        for (;;) {
            t += arrivals.next_exponential() / rate_max;
            if (t >= duration)
                break;
            auto idx = std::min(static_cast<std::size_t>(t * fs), last_index);
            double rate_here = spd.efficiency * flux_hz.samples[idx] + floor_rate;
            if (arrivals.next_uniform() * rate_max < rate_here)
                candidates.push_back(t);
        }
    }
    return finish_record(std::move(candidates), spd, duration, seed, stream_label,
                         detector_tag);
}

CountRecord spd_detect_constant(double flux_hz, double duration_s,
                                const SpdConfig& spd, const BackgroundModel& bg,
                                std::uint64_t seed, std::string_view stream_label,
                                std::uint8_t detector_tag) {
    spd.validate();
    bg.validate();
    if (flux_hz < 0.0)
        throw std::invalid_argument("spd_detect_constant: flux must be >= 0");
    if (!(duration_s > 0.0))
        throw std::invalid_argument("spd_detect_constant: duration must be > 0");

    const double rate = spd.efficiency * flux_hz + spd.dark_rate_hz + bg.total_hz();
    std::vector<double> candidates;
    if (rate > 0.0) {
        candidates.reserve(static_cast<std::size_t>(rate * duration_s * 1.1) + 16);
        rng::Stream arrivals(seed, std::string(stream_label) + ".arrivals");
        double t = 0.0;
        for (;;) {
            t += arrivals.next_exponential() / rate;
            if (t >= duration_s)
                break;
            candidates.push_back(t);
        }
    }
    return finish_record(std::move(candidates), spd, duration_s, seed, stream_label,
                         detector_tag);
}

BackgroundBudget background_budget(const BackgroundModel& bg, const SpdConfig& spd,
                                   double duration_s) {
    spd.validate();
    bg.validate();
    if (!(duration_s > 0.0))
        throw std::invalid_argument("background_budget: duration must be > 0");

    auto estimate = [duration_s](double rate) {
        RateEstimate e;
        e.rate_hz = rate;
        e.sigma_hz = std::sqrt(rate / duration_s);
        return e;
    };

    BackgroundBudget b;
    b.duration_s = duration_s;
    b.dark = estimate(spd.dark_rate_hz);
    b.raman = estimate(bg.raman_rate_hz);
    b.rayleigh = estimate(bg.rayleigh_rate_hz);
    b.external = estimate(bg.external_rate_hz);
    b.total = estimate(spd.dark_rate_hz + bg.total_hz());
    return b;
}

ClickBudget click_budget(double incident_flux_hz, const SpdConfig& spd,
                         const BackgroundModel& bg, double duration_s) {
    spd.validate();
    bg.validate();
    if (incident_flux_hz < 0.0)
        throw std::invalid_argument("click_budget: flux must be >= 0");
    if (!(duration_s > 0.0))
        throw std::invalid_argument("click_budget: duration must be > 0");

    ClickBudget b;
    b.signal_hz = spd.efficiency * incident_flux_hz;
    b.background_hz = spd.dark_rate_hz + bg.total_hz();
    b.total_hz = b.signal_hz + b.background_hz;
    b.measured_hz = dead_time_rate(b.total_hz, spd.dead_time_s);
    b.expected_counts = b.measured_hz * duration_s;
    b.count_sigma = std::sqrt(b.expected_counts);
    b.rate_sigma_hz = b.count_sigma / duration_s;
    return b;
}

CountRecord merge_records(const CountRecord& a, const CountRecord& b) {
    if (std::abs(a.duration_s - b.duration_s) >
        1e-12 * std::max(a.duration_s, b.duration_s))
        throw std::invalid_argument("merge_records: records cover different windows");

    CountRecord out;
    out.duration_s = a.duration_s;
    out.times_s.reserve(a.size() + b.size());
    out.detector.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        bool take_a = j >= b.size() || (i < a.size() && a.times_s[i] <= b.times_s[j]);
        if (take_a) {
            out.times_s.push_back(a.times_s[i]);
            out.detector.push_back(a.detector[i]);
            ++i;
        } else {
            out.times_s.push_back(b.times_s[j]);
            out.detector.push_back(b.detector[j]);
            ++j;
        }
    }
    return out;
}

analysis::QberEstimate qber_from_counts(std::size_t error_clicks,
                                        std::size_t total_clicks) {
    if (total_clicks == 0)
        throw std::invalid_argument(
            "qber_from_counts: no clicks, insufficient statistics");
    if (error_clicks > total_clicks)
        throw std::invalid_argument("qber_from_counts: error clicks exceed total");
    return wilson_estimate(error_clicks, total_clicks);
}

analysis::QberEstimate qber_from_counts(const CountRecord& correct_port,
                                        const CountRecord& error_port) {
    if (std::abs(correct_port.duration_s - error_port.duration_s) >
        1e-12 * std::max(correct_port.duration_s, error_port.duration_s))
        throw std::invalid_argument("qber_from_counts: unmatched record durations");
    return qber_from_counts(error_port.size(),
                            correct_port.size() + error_port.size());
}

} // namespace tfsim::detect
