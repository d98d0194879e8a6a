#include "tfsim/analysis.hpp"

#include "tfsim/constants.hpp"
#include "tfsim/fft.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tfsim::analysis {

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t auto_segment_length(std::size_t n) {
    std::size_t seg = 1;
    while (seg * 2 <= n / 8)
        seg *= 2;
    // Small traces: fall back to the largest power of two that fits.
    if (seg < 256) {
        seg = 1;
        while (seg * 2 <= n)
            seg *= 2;
    }
    return seg;
}

} // namespace

void Psd::validate() const {
    if (freq_hz.size() != density.size() || freq_hz.empty())
        throw std::invalid_argument("Psd: frequency and density grids must match and be non-empty");
    for (std::size_t i = 0; i < freq_hz.size(); ++i) {
        if (freq_hz[i] <= 0.0 || (i > 0 && freq_hz[i] <= freq_hz[i - 1]))
            throw std::invalid_argument("Psd: frequencies must be strictly increasing and > 0");
        if (!(density[i] >= 0.0))
            throw std::invalid_argument("Psd: density must be >= 0 and finite");
    }
}

double Psd::band_power(double f_lo, double f_hi) const {
    validate();
    if (!(f_hi > f_lo))
        throw std::invalid_argument("Psd::band_power: need f_hi > f_lo");
    f_lo = std::max(f_lo, freq_hz.front());
    f_hi = std::min(f_hi, freq_hz.back());
    if (f_hi <= f_lo)
        return 0.0;

    auto value_at = [this](double f) {
        auto it = std::lower_bound(freq_hz.begin(), freq_hz.end(), f);
        std::size_t j = static_cast<std::size_t>(it - freq_hz.begin());
        if (j == 0) return density.front();
        if (j >= freq_hz.size()) return density.back();
        double w = (f - freq_hz[j - 1]) / (freq_hz[j] - freq_hz[j - 1]);
        return density[j - 1] + w * (density[j] - density[j - 1]);
    };

    // Trapezoid over interior grid points plus partial edge intervals.
    double acc = 0.0;
    double prev_f = f_lo;
    double prev_s = value_at(f_lo);
    for (std::size_t i = 0; i < freq_hz.size(); ++i) {
        if (freq_hz[i] <= f_lo) continue;
        if (freq_hz[i] >= f_hi) break;
        acc += 0.5 * (prev_s + density[i]) * (freq_hz[i] - prev_f);
        prev_f = freq_hz[i];
        prev_s = density[i];
    }
    acc += 0.5 * (prev_s + value_at(f_hi)) * (f_hi - prev_f);
    return acc;
}

Psd welch_psd(const PhaseTrace& trace, std::size_t segment_length, double overlap) {
    trace.validate();
    const std::size_t n = trace.size();
    if (segment_length == 0)
        segment_length = auto_segment_length(n);
    if (!is_power_of_two(segment_length))
        throw std::invalid_argument("welch_psd: segment_length must be a power of two");
    if (segment_length > n)
        throw std::invalid_argument("welch_psd: segment longer than trace");
    if (!(overlap >= 0.0 && overlap < 1.0))
        throw std::invalid_argument("welch_psd: overlap must be in [0, 1)");

    const std::size_t seg = segment_length;
    const std::size_t hop = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(seg) * (1.0 - overlap))));

    // Periodic Hann window.
    std::vector<double> window(seg);
    double wss = 0.0;
    for (std::size_t j = 0; j < seg; ++j) {
        window[j] = 0.5 * (1.0 - std::cos(constants::two_pi * static_cast<double>(j) /
                                          static_cast<double>(seg)));
        wss += window[j] * window[j];
    }

    const std::size_t bins = seg / 2;      // k = 1 .. seg/2, DC dropped
    std::vector<double> accum(bins, 0.0);
    std::vector<double> buf(seg);
    std::size_t count = 0;

    for (std::size_t start = 0; start + seg <= n; start += hop) {
        double mean = 0.0;
        for (std::size_t j = 0; j < seg; ++j)
            mean += trace.samples[start + j];
        mean /= static_cast<double>(seg);
        for (std::size_t j = 0; j < seg; ++j)
            buf[j] = (trace.samples[start + j] - mean) * window[j];

        auto spec = fft::rfft(buf);
        for (std::size_t k = 1; k <= bins; ++k) {
            double p = std::norm(spec[k]);
            // One-sided density: double everything except Nyquist.
            accum[k - 1] += (k == seg / 2 ? 1.0 : 2.0) * p;
        }
        ++count;
    }
    if (count == 0)
        throw std::invalid_argument("welch_psd: trace shorter than one segment");

    Psd psd;
    psd.sample_rate_hz = trace.sample_rate_hz;
    psd.segment_length = seg;
    psd.overlap = overlap;
    psd.segment_count = count;
    psd.freq_hz.resize(bins);
    psd.density.resize(bins);
    const double df = trace.sample_rate_hz / static_cast<double>(seg);
    const double norm = 1.0 / (static_cast<double>(count) * trace.sample_rate_hz * wss);
    for (std::size_t k = 1; k <= bins; ++k) {
        psd.freq_hz[k - 1] = static_cast<double>(k) * df;
        psd.density[k - 1] = accum[k - 1] * norm;
    }
    return psd;
}

double sigma_from_psd(const Psd& psd, double t_a_s) {
    psd.validate();
    if (!(t_a_s > 0.0))
        throw std::invalid_argument("sigma_from_psd: t_a must be > 0");
    if (!(t_a_s > 2.0 / psd.sample_rate_hz))
        throw std::invalid_argument("sigma_from_psd: t_a must exceed 2/f_s");
    const double f_lo = 1.0 / t_a_s;
    // Tolerate the boundary bin itself (floating grids).
    if (f_lo < psd.freq_hz.front() * (1.0 - 1e-9))
        throw std::invalid_argument("sigma_from_psd: 1/t_a below the resolved PSD band");
    double var = psd.band_power(f_lo, psd.sample_rate_hz / 2.0);
    return std::sqrt(var);
}

SigmaPoint sigma_time_domain(const PhaseTrace& trace, double t_a_s) {
    trace.validate();
    const std::size_t total = trace.size();
    const std::size_t n =
        static_cast<std::size_t>(std::llround(t_a_s * trace.sample_rate_hz));
    if (n < 2)
        throw std::invalid_argument("sigma_time_domain: t_a resolves to fewer than 2 samples");
    if (n > total)
        throw std::invalid_argument("sigma_time_domain: t_a exceeds the trace duration");

    const std::size_t subsets = total / n;
    // Center the used span; reversal then maps the partition onto itself.
    const std::size_t start0 = (total - subsets * n) / 2;

    double var_sum = 0.0;
    for (std::size_t s = 0; s < subsets; ++s) {
        const double* p = trace.samples.data() + start0 + s * n;
        // Shift by the subset's first value before accumulating: the variance
        // is shift-invariant, and removing the large common phase offset first
        // keeps the sums exact for constant input and accurate for offsets
        // far larger than the fluctuations.
        const double ref = p[0];
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            mean += p[j] - ref;
        mean /= static_cast<double>(n);
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double d = (p[j] - ref) - mean;
            acc += d * d;
        }
        var_sum += acc / static_cast<double>(n - 1);
    }

    SigmaPoint pt;
    pt.t_a_s = t_a_s;
    pt.subsets = subsets;
    pt.low_confidence = subsets < 4;
    pt.sigma_rad = std::sqrt(var_sum / static_cast<double>(subsets));
    return pt;
}

ThresholdCrossing SigmaCurve::crossing(double level) const {
    ThresholdCrossing c;
    c.sigma_rad = level;
    c.qber = level * level / 4.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].sigma_rad >= level) {
            if (i == 0) {
                c.t_a_s = points[0].t_a_s;
            } else {
                // Log-time interpolation between the straddling grid points.
                const SigmaPoint& a = points[i - 1];
                const SigmaPoint& b = points[i];
                double w = (level - a.sigma_rad) / (b.sigma_rad - a.sigma_rad);
                c.t_a_s = std::exp(std::log(a.t_a_s) +
                                   w * (std::log(b.t_a_s) - std::log(a.t_a_s)));
            }
            c.found = true;
            return c;
        }
    }
    return c;
}

SigmaCurve sigma_curve(const PhaseTrace& trace, const std::vector<double>& t_a_grid) {
    if (t_a_grid.empty())
        throw std::invalid_argument("sigma_curve: empty averaging-time grid");
    for (std::size_t i = 1; i < t_a_grid.size(); ++i)
        if (!(t_a_grid[i] > t_a_grid[i - 1]))
            throw std::invalid_argument("sigma_curve: grid must be strictly increasing");

    SigmaCurve curve;
    curve.points.reserve(t_a_grid.size());
    for (double ta : t_a_grid)
        curve.points.push_back(sigma_time_domain(trace, ta));

    // 0.5%, 1%, 3% QBER equivalents: sigma = 2 sqrt(e).
    for (double e : {0.005, 0.01, 0.03})
        curve.crossings.push_back(curve.crossing(2.0 * std::sqrt(e)));
    return curve;
}

void QberEstimate::validate() const {
    if (!(e >= 0.0 && e <= 0.5 + 1e-9))
        throw std::runtime_error("QberEstimate: e outside [0, 0.5]; check detector assignment");
    if (!(uncertainty >= 0.0))
        throw std::runtime_error("QberEstimate: negative uncertainty");
}

QberEstimate qber_small_phase(double sigma_rad) {
    if (!(sigma_rad >= 0.0))
        throw std::invalid_argument("qber_small_phase: sigma must be >= 0");
    QberEstimate q;
    q.method = QberMethod::small_phase;
    q.sigma_phi_rad = sigma_rad;
    q.out_of_domain = sigma_rad > 0.5;
    q.e = std::min(sigma_rad * sigma_rad / 4.0, 0.5);
    q.validate();
    return q;
}

QberEstimate qber_integral_gaussian(double sigma_rad) {
    if (!(sigma_rad >= 0.0))
        throw std::invalid_argument("qber_integral_gaussian: sigma must be >= 0");
    QberEstimate q;
    q.method = QberMethod::integral;
    q.sigma_phi_rad = sigma_rad;
    if (sigma_rad == 0.0) {
        q.e = 0.0;
        return q;
    }
    // Trapezoid over +-10 sigma; integrand is smooth and decays as the
    // Gaussian, so this is converged far below the 1e-4 tolerance.
    const int npts = 4001;
    const double lo = -10.0 * sigma_rad, hi = 10.0 * sigma_rad;
    const double step = (hi - lo) / static_cast<double>(npts - 1);
    const double inv_norm = 1.0 / (sigma_rad * std::sqrt(constants::two_pi));
    double acc = 0.0;
    for (int i = 0; i < npts; ++i) {
        double phi = lo + step * i;
        double s = std::sin(phi / 2.0);
        double w = (i == 0 || i == npts - 1) ? 0.5 : 1.0;
        acc += w * s * s * std::exp(-phi * phi / (2.0 * sigma_rad * sigma_rad));
    }
    q.e = acc * step * inv_norm;
    q.validate();
    return q;
}

QberEstimate qber_integral_samples(const std::vector<double>& phases_rad) {
    if (phases_rad.empty())
        throw std::invalid_argument("qber_integral_samples: empty sample set");
    double acc = 0.0, acc2 = 0.0;
    for (double phi : phases_rad) {
        double s = std::sin(phi / 2.0);
        acc += s * s;
        acc2 += s * s * s * s;
    }
    const double nn = static_cast<double>(phases_rad.size());
    QberEstimate q;
    q.method = QberMethod::integral;
    q.e = acc / nn;
    double var = std::max(0.0, acc2 / nn - q.e * q.e);
    q.uncertainty = std::sqrt(var / nn);
    q.validate();
    return q;
}

} // namespace tfsim::analysis
