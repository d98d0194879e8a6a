#pragma once

#include "tfsim/trace.hpp"

#include <vector>

namespace tfsim::interference {

// Normalized single-port interference record, values in [0, 1].
struct InterferencePattern {
    std::vector<double> intensity;   // Ibar
    double sample_rate_hz = 0.0;
    double t0_s = 0.0;
    double operating_point_rad = 0.0;

    void validate() const;
};

// First-order interference of the two QKD fields at the beam splitter:
//   Ibar(t) = (1 + V cos(phi + phi_0)) / 2
// which reduces to cos^2((phi + phi_0)/2) at unit contrast.
InterferencePattern intensity(const PhaseTrace& phase, double operating_point_rad,
                              double contrast = 1.0);

// Invert Ibar = cos^2(phi/2): phi = 2 acos(sqrt(Ibar)), folded into [0, pi].
// No unwrapping is attempted; the folding is a property of the measurement
// and deliberately kept.  Values outside [-tol, 1+tol] (tol = 1e-3) are
// rejected; in-range overshoot is clamped.
PhaseTrace retrieve_phase(const InterferencePattern& pattern);

// Photon flux after attenuating a mean rate by atten_db: rate * 10^(-dB/10).
double attenuate(double rate_hz, double atten_db);

// Per-sample flux for one output port given the pattern and the mean
// detected-side rate of the full (two-port) field.
std::vector<double> port_flux(const InterferencePattern& pattern, double mean_rate_hz,
                              bool complementary_port);

} // namespace tfsim::interference
