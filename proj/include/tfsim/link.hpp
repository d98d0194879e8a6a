#pragma once

#include "tfsim/noise.hpp"
#include "tfsim/trace.hpp"

#include <array>
#include <string>

namespace tfsim::link {

// One fiber span: geometry, attenuation, and its phase-noise description.
struct FiberSpan {
    double length_km = 0.0;
    double loss_db = 0.0;
    noise::NoiseSpec noise;
    std::string label;

    void validate() const;
};

// Optical frequencies on the link.  The two QKD lasers run at the reference
// frequency; the sensing laser runs offset so both directions can share the
// service fiber.
struct WavelengthPlan {
    double reference_hz = 194.4e12;   // nu_R, also nu_A and nu_B
    double sensing_hz = 194.25e12;    // nu_S

    void validate() const;
    // Fractional frequency mismatch (nu_R - nu_S) / nu_S.
    double mismatch() const { return (reference_hz - sensing_hz) / sensing_hz; }
};

// Dual-fiber star topology: each arm has a service fiber (sensing light,
// reference distribution) and a QKD fiber (quantum signal plus returned
// sensing light).
struct LinkTopology {
    FiberSpan service_alice, qkd_alice, service_bob, qkd_bob;
    WavelengthPlan plan;

    void validate() const;
    // Interferometer arm-length unbalance |alice - bob| over both fibers, km.
    double unbalance_km() const;
};

struct LossBudget {
    double alice_qkd_km = 0.0, alice_qkd_db = 0.0;
    double bob_qkd_km = 0.0, bob_qkd_db = 0.0;
    double total_km = 0.0, total_db = 0.0;       // sum over the two QKD spans
    double alice_db_per_km = 0.0, bob_db_per_km = 0.0, total_db_per_km = 0.0;
};

// Additive loss/length accounting over the QKD spans.
LossBudget loss_budget(const LinkTopology& topo);

struct SensedPhase {
    PhaseTrace alice;   // phi_service + phi_qkd + correction
    PhaseTrace bob;     // phi_service + phi_qkd
    PhaseTrace error;   // alice - bob, the loop error observable
};

// Round-trip sensing observable per arm.  The actuator correction enters
// Alice's arm only.  All traces must share sample rate and length.
SensedPhase sensed_phase(const PhaseTrace& service_alice, const PhaseTrace& qkd_alice,
                         const PhaseTrace& service_bob, const PhaseTrace& qkd_bob,
                         const PhaseTrace& correction);

// Residual phase at the QKD wavelength after a correction derived at the
// sensing wavelength cancels fiber_phase exactly:
//   phi_res = phi_fiber * (nu_R - nu_S) / nu_S.
double residual_after_correction(double fiber_phase_rad, const WavelengthPlan& plan);
PhaseTrace residual_after_correction(const PhaseTrace& fiber_phase,
                                     const WavelengthPlan& plan);

struct TimingSkew {
    double alice_delay_s = 0.0;   // one-way over Alice's QKD span
    double bob_delay_s = 0.0;
    double skew_s = 0.0;          // |alice - bob|
    double unbalance_delay_s = 0.0; // both-fiber arm unbalance delay (interferometer)
};

// One-way propagation delays (group index 1.468) and their difference.
TimingSkew timing_skew(const LinkTopology& topo);

} // namespace tfsim::link
