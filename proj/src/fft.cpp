#include "tfsim/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <stdexcept>

namespace tfsim::fft {

std::vector<double> irfft(const std::vector<std::complex<double>>& half_spectrum,
                          std::size_t n) {
    if (n == 0 || half_spectrum.size() != n / 2 + 1)
        throw std::invalid_argument("irfft: spectrum size must be n/2+1");

    fftw_complex* in = fftw_alloc_complex(half_spectrum.size());
    double* out = fftw_alloc_real(n);
    std::memcpy(in, half_spectrum.data(),
                half_spectrum.size() * sizeof(fftw_complex));

    fftw_plan plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), in, out,
                                          FFTW_ESTIMATE | FFTW_DESTROY_INPUT);
    fftw_execute(plan);
    fftw_destroy_plan(plan);

    std::vector<double> result(out, out + n);
    fftw_free(in);
    fftw_free(out);
    return result;
}

std::vector<std::complex<double>> rfft(const std::vector<double>& samples) {
    const std::size_t n = samples.size();
    if (n == 0)
        throw std::invalid_argument("rfft: empty input");

    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    std::memcpy(in, samples.data(), n * sizeof(double));

    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out,
                                          FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);

    std::vector<std::complex<double>> result(n / 2 + 1);
    std::memcpy(result.data(), out, (n / 2 + 1) * sizeof(fftw_complex));
    fftw_free(in);
    fftw_free(out);
    return result;
}

} // namespace tfsim::fft
