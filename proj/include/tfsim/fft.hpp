#pragma once

#include <complex>
#include <vector>

namespace tfsim::fft {

// Thin wrappers around FFTW3 (double precision, FFTW_ESTIMATE plans).
// FFTW_ESTIMATE keeps plan selection deterministic between runs of the same
// binary, which the reproducibility guarantees rely on.

// Inverse real transform: n/2+1 hermitian-half spectrum -> n real samples.
// Unnormalized FFTW convention (output is the plain sum over bins).
std::vector<double> irfft(const std::vector<std::complex<double>>& half_spectrum,
                          std::size_t n);

// Forward real transform: n real samples -> n/2+1 complex bins, unnormalized.
std::vector<std::complex<double>> rfft(const std::vector<double>& samples);

} // namespace tfsim::fft
