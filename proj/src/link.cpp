#include "tfsim/link.hpp"

#include "tfsim/constants.hpp"

#include <cmath>
#include <stdexcept>

namespace tfsim::link {

void FiberSpan::validate() const {
    if (!(length_km >= 0.0))
        throw std::invalid_argument("FiberSpan: length must be >= 0");
    if (!(loss_db >= 0.0))
        throw std::invalid_argument("FiberSpan: loss must be >= 0");
    noise.validate();
}

void WavelengthPlan::validate() const {
    if (!(reference_hz > 0.0) || !(sensing_hz > 0.0))
        throw std::invalid_argument("WavelengthPlan: frequencies must be > 0");
    if (reference_hz == sensing_hz)
        throw std::invalid_argument("WavelengthPlan: sensing and reference frequencies must differ");
}

void LinkTopology::validate() const {
    service_alice.validate();
    qkd_alice.validate();
    service_bob.validate();
    qkd_bob.validate();
    plan.validate();
}

double LinkTopology::unbalance_km() const {
    return std::abs((service_alice.length_km + qkd_alice.length_km) -
                    (service_bob.length_km + qkd_bob.length_km));
}

LossBudget loss_budget(const LinkTopology& topo) {
    topo.validate();
    LossBudget b;
    b.alice_qkd_km = topo.qkd_alice.length_km;
    b.alice_qkd_db = topo.qkd_alice.loss_db;
    b.bob_qkd_km = topo.qkd_bob.length_km;
    b.bob_qkd_db = topo.qkd_bob.loss_db;
    b.total_km = b.alice_qkd_km + b.bob_qkd_km;
    b.total_db = b.alice_qkd_db + b.bob_qkd_db;
    b.alice_db_per_km = b.alice_qkd_km > 0.0 ? b.alice_qkd_db / b.alice_qkd_km : 0.0;
    b.bob_db_per_km = b.bob_qkd_km > 0.0 ? b.bob_qkd_db / b.bob_qkd_km : 0.0;
    b.total_db_per_km = b.total_km > 0.0 ? b.total_db / b.total_km : 0.0;
    return b;
}

namespace {

void require_compatible(const PhaseTrace& a, const PhaseTrace& b, const char* what) {
    if (a.sample_rate_hz != b.sample_rate_hz)
        throw std::invalid_argument(std::string("sensed_phase: mismatched sample rates (") + what + ")");
    if (a.size() != b.size())
        throw std::invalid_argument(std::string("sensed_phase: mismatched lengths (") + what + ")");
}

} // namespace

SensedPhase sensed_phase(const PhaseTrace& service_alice, const PhaseTrace& qkd_alice,
                         const PhaseTrace& service_bob, const PhaseTrace& qkd_bob,
                         const PhaseTrace& correction) {
    service_alice.validate();
    require_compatible(service_alice, qkd_alice, "qkd_alice");
    require_compatible(service_alice, service_bob, "service_bob");
    require_compatible(service_alice, qkd_bob, "qkd_bob");
    require_compatible(service_alice, correction, "correction");

    SensedPhase out;
    const std::size_t n = service_alice.size();
    out.alice.sample_rate_hz = out.bob.sample_rate_hz = out.error.sample_rate_hz =
        service_alice.sample_rate_hz;
    out.alice.t0_s = out.bob.t0_s = out.error.t0_s = service_alice.t0_s;
    out.alice.provenance = "sensed_phase:alice";
    out.bob.provenance = "sensed_phase:bob";
    out.error.provenance = "sensed_phase:error";
    out.alice.samples.resize(n);
    out.bob.samples.resize(n);
    out.error.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.alice.samples[i] =
            service_alice.samples[i] + qkd_alice.samples[i] + correction.samples[i];
        out.bob.samples[i] = service_bob.samples[i] + qkd_bob.samples[i];
        out.error.samples[i] = out.alice.samples[i] - out.bob.samples[i];
    }
    return out;
}

double residual_after_correction(double fiber_phase_rad, const WavelengthPlan& plan) {
    plan.validate();
    return fiber_phase_rad * plan.mismatch();
}

PhaseTrace residual_after_correction(const PhaseTrace& fiber_phase,
                                     const WavelengthPlan& plan) {
    plan.validate();
    fiber_phase.validate();
    PhaseTrace out = fiber_phase;
    out.provenance = fiber_phase.provenance + ":nu_mismatch_residual";
    const double eps = plan.mismatch();
    for (double& v : out.samples)
        v *= eps;
    return out;
}

TimingSkew timing_skew(const LinkTopology& topo) {
    topo.validate();
    TimingSkew t;
    t.alice_delay_s = constants::fiber_delay_s(topo.qkd_alice.length_km * 1e3);
    t.bob_delay_s = constants::fiber_delay_s(topo.qkd_bob.length_km * 1e3);
    t.skew_s = std::abs(t.alice_delay_s - t.bob_delay_s);
    t.unbalance_delay_s = constants::fiber_delay_s(topo.unbalance_km() * 1e3);
    return t;
}

} // namespace tfsim::link
