#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tfsim/constants.hpp"
#include "tfsim/link.hpp"

#include <cmath>
#include <initializer_list>

using namespace tfsim;

namespace {

link::LinkTopology metro_topology() {
    link::LinkTopology topo;
    topo.service_alice = {114.0, 35.0, {}, "service_alice"};
    topo.qkd_alice = {114.0, 35.0, {}, "qkd_alice"};
    topo.service_bob = {92.0, 30.0, {}, "service_bob"};
    topo.qkd_bob = {92.0, 30.0, {}, "qkd_bob"};
    return topo;
}

} // namespace

TEST_CASE("loss budget: shipped metro numbers") {
    link::LossBudget b = link::loss_budget(metro_topology());
    CHECK(b.alice_qkd_km == doctest::Approx(114.0));
    CHECK(b.alice_qkd_db == doctest::Approx(35.0));
    CHECK(b.bob_qkd_km == doctest::Approx(92.0));
    CHECK(b.bob_qkd_db == doctest::Approx(30.0));
    CHECK(b.total_km == doctest::Approx(206.0));
    CHECK(b.total_db == doctest::Approx(65.0));
    CHECK(b.alice_db_per_km == doctest::Approx(35.0 / 114.0).epsilon(1e-12));
    CHECK(b.bob_db_per_km == doctest::Approx(30.0 / 92.0).epsilon(1e-12));
    CHECK(b.total_db_per_km == doctest::Approx(65.0 / 206.0).epsilon(1e-12));
}

TEST_CASE("timing: propagation delays, skew, and arm unbalance") {
    link::TimingSkew t = link::timing_skew(metro_topology());
    const double per_m = constants::fiber_group_index / constants::c_vacuum;
    CHECK(t.alice_delay_s == doctest::Approx(114e3 * per_m).epsilon(1e-12));
    CHECK(t.bob_delay_s == doctest::Approx(92e3 * per_m).epsilon(1e-12));
    CHECK(t.skew_s == doctest::Approx(22e3 * per_m).epsilon(1e-12));
    // Unbalance counts both fibers of each arm: 228 km vs 184 km.
    CHECK(t.unbalance_delay_s == doctest::Approx(44e3 * per_m).epsilon(1e-12));

    // Frozen absolute values.
    CHECK(t.alice_delay_s == doctest::Approx(5.58212e-4).epsilon(1e-5));
    CHECK(t.bob_delay_s == doctest::Approx(4.50487e-4).epsilon(1e-5));
    CHECK(t.skew_s == doctest::Approx(1.077252e-4).epsilon(1e-5));
    CHECK(t.unbalance_delay_s == doctest::Approx(2.15450e-4).epsilon(1e-5));
}

TEST_CASE("wavelength plan: fractional mismatch and residual scaling") {
    link::WavelengthPlan plan; // defaults: 194.4 / 194.25 THz
    CHECK(plan.mismatch() ==
          doctest::Approx((194.4 - 194.25) / 194.25).epsilon(1e-15));
    CHECK(plan.mismatch() == doctest::Approx(7.722007722e-4).epsilon(1e-9));

    // A 1000 rad cancelled swing leaves a 0.772 rad residual.
    CHECK(link::residual_after_correction(1000.0, plan) ==
          doctest::Approx(0.7722007722).epsilon(1e-9));

    link::WavelengthPlan bad;
    bad.sensing_hz = 0.0;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("residual_after_correction on a trace scales every sample") {
    link::WavelengthPlan plan;
    PhaseTrace tr;
    tr.sample_rate_hz = 1e3;
    tr.samples = {1.0, -2.0, 1000.0};
    PhaseTrace res = link::residual_after_correction(tr, plan);
    REQUIRE(res.size() == 3);
    double eps = plan.mismatch();
    CHECK(res.samples[0] == doctest::Approx(eps).epsilon(1e-12));
    CHECK(res.samples[1] == doctest::Approx(-2.0 * eps).epsilon(1e-12));
    CHECK(res.samples[2] == doctest::Approx(1000.0 * eps).epsilon(1e-12));
}

TEST_CASE("sensed phase: arm sums and the actuator entering Alice's arm") {
    auto trace = [](std::initializer_list<double> vals) {
        PhaseTrace t;
        t.sample_rate_hz = 1e3;
        t.samples = vals;
        return t;
    };
    PhaseTrace svc_a = trace({0.5, 1.0});
    PhaseTrace qkd_a = trace({0.25, 0.5});
    PhaseTrace svc_b = trace({0.1, 0.2});
    PhaseTrace qkd_b = trace({0.05, 0.1});
    PhaseTrace corr = trace({2.0, -1.0});

    link::SensedPhase s = link::sensed_phase(svc_a, qkd_a, svc_b, qkd_b, corr);
    REQUIRE(s.error.size() == 2);
    CHECK(s.alice.samples[0] == doctest::Approx(0.75 + 2.0));
    CHECK(s.bob.samples[0] == doctest::Approx(0.15));
    CHECK(s.error.samples[0] == doctest::Approx(0.75 - 0.15 + 2.0));
    CHECK(s.error.samples[1] == doctest::Approx(1.5 - 0.3 - 1.0));

    // Mismatched lengths are rejected.
    PhaseTrace shorter = trace({1.0});
    CHECK_THROWS(link::sensed_phase(svc_a, qkd_a, svc_b, qkd_b, shorter));
}

TEST_CASE("span and topology validation") {
    link::FiberSpan bad;
    bad.length_km = -1.0;
    CHECK_THROWS(bad.validate());

    link::FiberSpan lossy;
    lossy.length_km = 10.0;
    lossy.loss_db = -3.0;
    CHECK_THROWS(lossy.validate());

    link::LinkTopology topo = metro_topology();
    CHECK_NOTHROW(topo.validate());
    CHECK(topo.unbalance_km() == doctest::Approx(44.0));
    topo.qkd_bob.length_km = -5.0;
    CHECK_THROWS(topo.validate());
}
