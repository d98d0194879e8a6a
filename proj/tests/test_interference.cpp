#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tfsim/constants.hpp"
#include "tfsim/interference.hpp"

#include <cmath>
#include <cstddef>

using namespace tfsim;

namespace {

PhaseTrace phase_trace(std::vector<double> samples) {
    PhaseTrace t;
    t.sample_rate_hz = 5e6;
    t.t0_s = 0.25;
    t.samples = std::move(samples);
    return t;
}

} // namespace

TEST_CASE("intensity: known operating points at unit contrast") {
    const double pi = constants::pi;
    PhaseTrace t = phase_trace({0.0, pi, pi / 3.0, pi / 2.0});

    auto at_zero = interference::intensity(t, 0.0);
    CHECK(at_zero.intensity[0] == doctest::Approx(1.0));
    CHECK(at_zero.intensity[1] == doctest::Approx(0.0));
    CHECK(at_zero.intensity[2] == doctest::Approx(0.75));
    CHECK(at_zero.intensity[3] == doctest::Approx(0.5));
    CHECK(at_zero.sample_rate_hz == doctest::Approx(5e6));
    CHECK(at_zero.t0_s == doctest::Approx(0.25));
    CHECK(at_zero.operating_point_rad == 0.0);

    // At quadrature a zero phase lands mid-fringe.
    auto at_quad = interference::intensity(t, pi / 2.0);
    CHECK(at_quad.intensity[0] == doctest::Approx(0.5));
    CHECK(at_quad.operating_point_rad == doctest::Approx(pi / 2.0));
}

TEST_CASE("intensity: finite contrast compresses the fringe") {
    PhaseTrace t = phase_trace({0.0, constants::pi});
    auto p = interference::intensity(t, 0.0, 0.5);
    CHECK(p.intensity[0] == doctest::Approx(0.75));
    CHECK(p.intensity[1] == doctest::Approx(0.25));

    CHECK_THROWS(interference::intensity(t, 0.0, -0.1));
    CHECK_THROWS(interference::intensity(t, 0.0, 1.1));
}

TEST_CASE("pattern validation") {
    interference::InterferencePattern p;
    p.sample_rate_hz = 5e6;
    p.intensity = {0.2, 0.8};
    CHECK_NOTHROW(p.validate());

    p.sample_rate_hz = 0.0;
    CHECK_THROWS(p.validate());

    p.sample_rate_hz = 5e6;
    p.intensity = {0.2};
    CHECK_THROWS(p.validate()); // needs at least two samples

    p.intensity = {0.2, 1.1};
    CHECK_THROWS(p.validate()); // far outside [0, 1]

    p.intensity = {0.2, 1.0005};
    CHECK_NOTHROW(p.validate()); // small acquisition overshoot tolerated
}

TEST_CASE("retrieve_phase inverts the fringe and folds the sign") {
    PhaseTrace t = phase_trace({0.3, 1.2, -0.5, 2.9});
    auto p = interference::intensity(t, 0.0);
    PhaseTrace r = interference::retrieve_phase(p);

    REQUIRE(r.size() == 4);
    CHECK(r.samples[0] == doctest::Approx(0.3).epsilon(1e-9));
    CHECK(r.samples[1] == doctest::Approx(1.2).epsilon(1e-9));
    CHECK(r.samples[2] == doctest::Approx(0.5).epsilon(1e-9)); // |phi|, folded
    CHECK(r.samples[3] == doctest::Approx(2.9).epsilon(1e-9));
    CHECK(r.sample_rate_hz == doctest::Approx(5e6));
    CHECK(r.t0_s == doctest::Approx(0.25));
}

TEST_CASE("retrieve_phase at quadrature has unit slope around the operating point") {
    PhaseTrace t = phase_trace({-0.4, -0.1, 0.0, 0.1, 0.4});
    auto p = interference::intensity(t, constants::pi / 2.0);
    PhaseTrace r = interference::retrieve_phase(p);
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(r.samples[i] ==
              doctest::Approx(t.samples[i] + constants::pi / 2.0).epsilon(1e-9));
    }
}

TEST_CASE("retrieve_phase clamps in-tolerance overshoot and rejects the rest") {
    interference::InterferencePattern p;
    p.sample_rate_hz = 5e6;

    p.intensity = {1.0005, -0.0005};
    PhaseTrace r = interference::retrieve_phase(p);
    CHECK(r.samples[0] == doctest::Approx(0.0));
    CHECK(r.samples[1] == doctest::Approx(constants::pi));

    p.intensity = {0.5, 1.1};
    CHECK_THROWS(interference::retrieve_phase(p));
}

TEST_CASE("attenuate follows the dB law") {
    CHECK(interference::attenuate(1e11, 70.0) == doctest::Approx(1e4).epsilon(1e-12));
    CHECK(interference::attenuate(1e11, 0.0) == doctest::Approx(1e11));
    CHECK(interference::attenuate(500.0, 3.0) ==
          doctest::Approx(500.0 * std::pow(10.0, -0.3)).epsilon(1e-12));
    CHECK_THROWS(interference::attenuate(-1.0, 10.0));
    CHECK_THROWS(interference::attenuate(1.0, -10.0));
}

TEST_CASE("port fluxes are complementary and conserve the mean rate") {
    PhaseTrace t = phase_trace({0.0, 0.7, 1.9, 3.0});
    auto p = interference::intensity(t, constants::pi / 2.0);
    const double rate = 1e4;

    auto bright = interference::port_flux(p, rate, false);
    auto dark = interference::port_flux(p, rate, true);
    REQUIRE(bright.size() == 4);
    for (std::size_t i = 0; i < bright.size(); ++i) {
        CHECK(bright[i] >= 0.0);
        CHECK(dark[i] >= 0.0);
        CHECK(bright[i] + dark[i] == doctest::Approx(rate).epsilon(1e-12));
        CHECK(bright[i] == doctest::Approx(rate * p.intensity[i]).epsilon(1e-12));
    }

    CHECK_THROWS(interference::port_flux(p, -1.0, false));
}
