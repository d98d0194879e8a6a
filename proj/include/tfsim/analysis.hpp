#pragma once

#include "tfsim/trace.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tfsim::analysis {

// One-sided Welch power spectral density, rad^2/Hz.
struct Psd {
    std::vector<double> freq_hz;       // strictly increasing, (0, f_s/2]
    std::vector<double> density;       // same length
    double sample_rate_hz = 0.0;
    std::size_t segment_length = 0;
    double overlap = 0.0;
    std::size_t segment_count = 0;

    void validate() const;
    // Trapezoidal band power over [f_lo, f_hi], clipped to the grid.
    double band_power(double f_lo, double f_hi) const;
};

// Welch estimate: Hann window, per-segment mean subtraction, given overlap
// fraction, averaged periodograms normalized so integral(S df) equals the
// variance of the windowed process.  segment_length must be a power of two
// <= n; pass 0 to pick the largest power of two <= n/8 (at least 256 when
// the trace allows it).
Psd welch_psd(const PhaseTrace& trace, std::size_t segment_length = 0,
              double overlap = 0.5);

// Phase stability from the spectrum: sigma^2 = integral of S from 1/t_a to
// f_s/2 (trapezoid, partial first interval interpolated).  Requires
// 1/t_a >= lowest PSD frequency and t_a > 2/f_s.
double sigma_from_psd(const Psd& psd, double t_a_s);

struct SigmaPoint {
    double t_a_s = 0.0;
    double sigma_rad = 0.0;
    std::size_t subsets = 0;
    bool low_confidence = false;   // fewer than 4 subsets
};

// Time-domain phase stability: split the trace into consecutive subsets of
// n = round(t_a * f_s) samples (remainder split evenly front/back so the
// statistic is invariant under time reversal), take each subset's sample
// variance about its own mean, average the variances, return the root.
SigmaPoint sigma_time_domain(const PhaseTrace& trace, double t_a_s);

struct ThresholdCrossing {
    double sigma_rad = 0.0;        // threshold level
    double qber = 0.0;             // equivalent small-phase QBER
    double t_a_s = 0.0;            // log-interpolated first crossing
    bool found = false;
};

struct SigmaCurve {
    std::vector<SigmaPoint> points;       // ascending t_a
    std::vector<ThresholdCrossing> crossings;

    // First t_a where sigma crosses `level` from below, log-interpolated
    // between grid points; returns unfound crossing if it never does.
    ThresholdCrossing crossing(double level) const;
};

// sigma_time_domain over an ascending averaging-time grid, annotated with the
// 0.5% / 1% / 3% QBER-equivalent threshold crossings (sigma = 2 sqrt(e)).
SigmaCurve sigma_curve(const PhaseTrace& trace, const std::vector<double>& t_a_grid);

enum class QberMethod { small_phase, integral, counts };

struct QberEstimate {
    double e = 0.0;                 // [0, 0.5]
    QberMethod method = QberMethod::small_phase;
    double sigma_phi_rad = 0.0;     // sigma the estimate was derived from (0 for counts)
    double uncertainty = 0.0;       // one-sided half-width (Wilson for counts)
    bool out_of_domain = false;     // sigma beyond small-phase validity

    void validate() const;
};

// Small-phase approximation e = sigma^2/4, capped at 0.5.  Sets
// out_of_domain for sigma > 0.5 rad.
QberEstimate qber_small_phase(double sigma_rad);

// e = E[sin^2(phi/2)] for phi ~ N(0, sigma^2), evaluated by trapezoidal
// quadrature over +-10 sigma (the Gaussian closed form (1 - e^{-s^2/2})/2 is
// reproduced to ~1e-14 and is asserted in tests, not used here).
QberEstimate qber_integral_gaussian(double sigma_rad);

// e = mean of sin^2(phi_i/2) over a sample set; uncertainty is the standard
// error of that mean.  Rejects empty input.
QberEstimate qber_integral_samples(const std::vector<double>& phases_rad);

} // namespace tfsim::analysis
