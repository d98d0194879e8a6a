#include "tfsim/interference.hpp"

#include "tfsim/constants.hpp"

#include <cmath>
#include <stdexcept>

namespace tfsim::interference {

namespace {
constexpr double kClampTol = 1e-3;
}

void InterferencePattern::validate() const {
    if (sample_rate_hz <= 0.0)
        throw std::invalid_argument("InterferencePattern: sample_rate_hz must be > 0");
    if (intensity.size() < 2)
        throw std::invalid_argument("InterferencePattern: need at least 2 samples");
    for (double v : intensity) {
        if (!(v >= -kClampTol && v <= 1.0 + kClampTol))
            throw std::invalid_argument("InterferencePattern: intensity outside [0, 1]");
    }
}

InterferencePattern intensity(const PhaseTrace& phase, double operating_point_rad,
                              double contrast) {
    phase.validate();
    if (!(contrast >= 0.0 && contrast <= 1.0))
        throw std::invalid_argument("intensity: contrast must be in [0, 1]");

    InterferencePattern out;
    out.sample_rate_hz = phase.sample_rate_hz;
    out.t0_s = phase.t0_s;
    out.operating_point_rad = operating_point_rad;
    out.intensity.resize(phase.size());
    for (std::size_t i = 0; i < phase.size(); ++i) {
        out.intensity[i] =
            0.5 * (1.0 + contrast * std::cos(phase.samples[i] + operating_point_rad));
    }
    return out;
}

PhaseTrace retrieve_phase(const InterferencePattern& pattern) {
    pattern.validate();

    PhaseTrace out;
    out.sample_rate_hz = pattern.sample_rate_hz;
    out.t0_s = pattern.t0_s;
    out.provenance = "retrieve_phase";
    out.samples.resize(pattern.intensity.size());
    for (std::size_t i = 0; i < pattern.intensity.size(); ++i) {
        double v = pattern.intensity[i];
        if (v < -kClampTol || v > 1.0 + kClampTol)
            throw std::invalid_argument("retrieve_phase: intensity outside tolerated range");
        v = std::min(1.0, std::max(0.0, v));
        out.samples[i] = 2.0 * std::acos(std::sqrt(v));
    }
    return out;
}

double attenuate(double rate_hz, double atten_db) {
    if (!(rate_hz >= 0.0))
        throw std::invalid_argument("attenuate: rate must be >= 0");
    if (!(atten_db >= 0.0))
        throw std::invalid_argument("attenuate: attenuation must be >= 0 dB");
    return rate_hz * std::pow(10.0, -atten_db / 10.0);
}

std::vector<double> port_flux(const InterferencePattern& pattern, double mean_rate_hz,
                              bool complementary_port) {
    pattern.validate();
    if (!(mean_rate_hz >= 0.0))
        throw std::invalid_argument("port_flux: rate must be >= 0");
    std::vector<double> flux(pattern.intensity.size());
    for (std::size_t i = 0; i < flux.size(); ++i) {
        double frac = complementary_port ? 1.0 - pattern.intensity[i] : pattern.intensity[i];
        flux[i] = mean_rate_hz * std::min(1.0, std::max(0.0, frac));
    }
    return flux;
}

} // namespace tfsim::interference
