#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tfsim/constants.hpp"
#include "tfsim/detect.hpp"
#include "tfsim/interference.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

using namespace tfsim;

namespace {

interference::InterferencePattern pattern_of(std::vector<double> values,
                                             double fs = 5e6) {
    interference::InterferencePattern p;
    p.sample_rate_hz = fs;
    p.intensity = std::move(values);
    return p;
}

double mean(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v)
        acc += x;
    return acc / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
    double m = mean(v);
    double acc = 0.0;
    for (double x : v)
        acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

} // namespace

TEST_CASE("photodiode: ideal configuration is the identity") {
    auto p = pattern_of({0.1, 0.9, 0.4, 0.6, 0.5, 0.2});
    detect::PhotodiodeConfig cfg;
    cfg.analog_bandwidth_hz = std::numeric_limits<double>::infinity();
    cfg.sample_rate_hz = p.sample_rate_hz;
    cfg.noise_rms = 0.0;

    auto out = detect::photodiode_acquire(p, cfg, 1);
    REQUIRE(out.intensity.size() == p.intensity.size());
    for (std::size_t i = 0; i < p.intensity.size(); ++i)
        CHECK(out.intensity[i] == p.intensity[i]);
    CHECK(out.sample_rate_hz == p.sample_rate_hz);
}

TEST_CASE("photodiode: analog bandwidth attenuates fast fringes, keeps DC") {
    const double fs = 5e6;
    const std::size_t n = 50000;

    SUBCASE("constant input passes exactly") {
        auto p = pattern_of(std::vector<double>(n, 0.7), fs);
        detect::PhotodiodeConfig cfg;
        cfg.analog_bandwidth_hz = 1e5;
        cfg.sample_rate_hz = fs;
        auto out = detect::photodiode_acquire(p, cfg, 1);
        for (double v : out.intensity)
            CHECK(v == 0.7);
    }

    SUBCASE("2 MHz fringe through a 100 kHz diode") {
        std::vector<double> vals(n);
        for (std::size_t i = 0; i < n; ++i)
            vals[i] = 0.5 + 0.4 * std::sin(constants::two_pi * 2e6 *
                                           static_cast<double>(i) / fs);
        auto p = pattern_of(std::move(vals), fs);
        detect::PhotodiodeConfig cfg;
        cfg.analog_bandwidth_hz = 1e5;
        cfg.sample_rate_hz = fs;
        auto out = detect::photodiode_acquire(p, cfg, 1);
        CHECK(mean(out.intensity) == doctest::Approx(0.5).epsilon(0.02));
        // One-pole response at 20x the corner: the swing collapses.
        CHECK(stddev(out.intensity) < 0.1 * (0.4 / std::sqrt(2.0)));
    }
}

TEST_CASE("photodiode: resampling to the acquisition rate") {
    auto p = pattern_of(std::vector<double>(1000, 0.5), 5e6); // 200 us record
    detect::PhotodiodeConfig cfg;
    cfg.analog_bandwidth_hz = 4e5;
    cfg.sample_rate_hz = 1e6;
    auto out = detect::photodiode_acquire(p, cfg, 1);
    CHECK(out.intensity.size() == 200);
    CHECK(out.sample_rate_hz == doctest::Approx(1e6));
    for (double v : out.intensity)
        CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("photodiode: measurement noise level, clamping, determinism") {
    const std::size_t n = 50000;
    detect::PhotodiodeConfig cfg;
    cfg.analog_bandwidth_hz = std::numeric_limits<double>::infinity();
    cfg.sample_rate_hz = 5e6;
    cfg.noise_rms = 0.02;

    auto p = pattern_of(std::vector<double>(n, 0.5));
    auto out = detect::photodiode_acquire(p, cfg, 7);
    CHECK(stddev(out.intensity) == doctest::Approx(0.02).epsilon(0.1));
    CHECK(mean(out.intensity) == doctest::Approx(0.5).epsilon(0.002));

    auto again = detect::photodiode_acquire(p, cfg, 7);
    CHECK(out.intensity == again.intensity);
    auto other = detect::photodiode_acquire(p, cfg, 8);
    CHECK(out.intensity != other.intensity);

    // Near the rail the noise is clamped into [0, 1].
    auto low = pattern_of(std::vector<double>(n, 0.001));
    cfg.noise_rms = 0.05;
    auto clamped = detect::photodiode_acquire(low, cfg, 7);
    double lo = 1.0, hi = 0.0;
    std::size_t at_zero = 0;
    for (double v : clamped.intensity) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        if (v == 0.0)
            ++at_zero;
    }
    CHECK(lo == 0.0);
    CHECK(hi <= 1.0);
    CHECK(at_zero > n / 10);
}

TEST_CASE("photodiode config validation") {
    detect::PhotodiodeConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.analog_bandwidth_hz = 0.0;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.sample_rate_hz = -1.0;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.noise_rms = -0.1;
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("spd: mean count of a constant flux without dead time") {
    detect::SpdConfig spd;
    spd.efficiency = 0.1;
    spd.dead_time_s = 0.0;
    spd.dark_rate_hz = 0.0;
    spd.jitter_rms_s = 0.0;

    auto rec = detect::spd_detect_constant(1e4, 100.0, spd, {}, 21);
    rec.validate();
    // eta * flux = 1000 clicks/s over 100 s; allow 5 Poisson sigma.
    const double expected = 1e5;
    CHECK(std::abs(static_cast<double>(rec.size()) - expected) <
          5.0 * std::sqrt(expected));
    CHECK(rec.duration_s == doctest::Approx(100.0));
}

TEST_CASE("spd: dead time saturates the measured rate") {
    detect::SpdConfig spd;
    spd.efficiency = 0.1;
    spd.dead_time_s = 25e-6;
    spd.dark_rate_hz = 0.0;
    spd.jitter_rms_s = 0.0;

    auto rec = detect::spd_detect_constant(1e5, 100.0, spd, {}, 22);
    // True click rate 1e4/s -> measured 1e4 / (1 + 1e4 * 25e-6) = 8000/s.
    const double expected = detect::dead_time_rate(1e4, 25e-6) * 100.0;
    CHECK(static_cast<double>(rec.size()) == doctest::Approx(expected).epsilon(0.02));

    // No two clicks closer than the hold-off when jitter is off.
    for (std::size_t i = 1; i < rec.size(); ++i)
        CHECK(rec.times_s[i] - rec.times_s[i - 1] >= 25e-6);
}

TEST_CASE("spd: dark counts alone") {
    detect::SpdConfig spd;
    spd.efficiency = 0.1;
    spd.dead_time_s = 25e-6;
    spd.dark_rate_hz = 4.52;
    spd.jitter_rms_s = 0.0;

    auto rec = detect::spd_detect_constant(0.0, 1000.0, spd, {}, 23);
    const double expected = 4.52 * 1000.0;
    CHECK(std::abs(static_cast<double>(rec.size()) - expected) <
          5.0 * std::sqrt(expected));
}

TEST_CASE("spd: jitter perturbs timestamps but keeps the record sorted") {
    detect::SpdConfig spd;
    spd.efficiency = 1.0;
    spd.dead_time_s = 25e-6;
    spd.dark_rate_hz = 0.0;
    spd.jitter_rms_s = 0.0;
    auto crisp = detect::spd_detect_constant(1e5, 1.0, spd, {}, 24);

    spd.jitter_rms_s = 1e-6;
    auto fuzzy = detect::spd_detect_constant(1e5, 1.0, spd, {}, 24);
    REQUIRE(crisp.size() == fuzzy.size()); // same arrivals, only timestamps move
    CHECK_NOTHROW(fuzzy.validate());
    bool moved = false;
    for (std::size_t i = 0; i < crisp.size(); ++i)
        moved = moved || crisp.times_s[i] != fuzzy.times_s[i];
    CHECK(moved);
}

TEST_CASE("spd: deterministic per seed and stream label") {
    detect::SpdConfig spd;
    auto a = detect::spd_detect_constant(1e5, 1.0, spd, {}, 5, "detector.correct");
    auto b = detect::spd_detect_constant(1e5, 1.0, spd, {}, 5, "detector.correct");
    auto c = detect::spd_detect_constant(1e5, 1.0, spd, {}, 5, "detector.error");
    CHECK(a.times_s == b.times_s);
    CHECK(a.times_s != c.times_s);
}

TEST_CASE("spd: thinning a flux trace matches the constant-rate path") {
    detect::SpdConfig spd;
    spd.efficiency = 0.1;
    spd.dead_time_s = 0.0;
    spd.dark_rate_hz = 0.0;
    spd.jitter_rms_s = 0.0;

    PhaseTrace flux;
    flux.sample_rate_hz = 1e4;
    flux.samples.assign(20000, 1e4); // 2 s at 1e4 photons/s

    auto varying = detect::spd_detect(flux, spd, {}, 31);
    auto constant = detect::spd_detect_constant(1e4, 2.0, spd, {}, 32);
    // Both should see eta * flux * T = 2000 clicks; compare at 5 sigma.
    double diff = std::abs(static_cast<double>(varying.size()) -
                           static_cast<double>(constant.size()));
    CHECK(diff < 5.0 * std::sqrt(2.0 * 2000.0));
    CHECK(std::abs(static_cast<double>(varying.size()) - 2000.0) <
          5.0 * std::sqrt(2000.0));
}

TEST_CASE("spd: clicks follow the instantaneous flux") {
    detect::SpdConfig spd;
    spd.efficiency = 0.1;
    spd.dead_time_s = 0.0;
    spd.dark_rate_hz = 0.0;
    spd.jitter_rms_s = 0.0;

    PhaseTrace flux;
    flux.sample_rate_hz = 1e4;
    flux.samples.assign(20000, 0.0);
    for (std::size_t i = 10000; i < 20000; ++i)
        flux.samples[i] = 1e5; // dark first second, bright second second

    auto rec = detect::spd_detect(flux, spd, {}, 33);
    for (double t : rec.times_s)
        CHECK(t >= 1.0);
    const double expected = 0.1 * 1e5 * 1.0;
    CHECK(std::abs(static_cast<double>(rec.size()) - expected) <
          5.0 * std::sqrt(expected));

    PhaseTrace bad = flux;
    bad.samples[0] = -1.0;
    CHECK_THROWS(detect::spd_detect(bad, spd, {}, 33));
}

TEST_CASE("dead_time_rate formula") {
    CHECK(detect::dead_time_rate(1e4, 25e-6) == doctest::Approx(8000.0).epsilon(1e-12));
    CHECK(detect::dead_time_rate(1e4, 0.0) == doctest::Approx(1e4));
    CHECK(detect::dead_time_rate(0.0, 25e-6) == 0.0);
    CHECK_THROWS(detect::dead_time_rate(-1.0, 0.0));
    CHECK_THROWS(detect::dead_time_rate(1.0, -1.0));
}

TEST_CASE("click budget arithmetic") {
    detect::SpdConfig spd;
    spd.efficiency = 0.1;
    spd.dead_time_s = 25e-6;
    spd.dark_rate_hz = 4.52;
    detect::BackgroundModel bg;
    bg.raman_rate_hz = 0.33;
    bg.external_rate_hz = 0.24;

    const double T = 86400.0;
    auto b = detect::click_budget(1e4, spd, bg, T);
    CHECK(b.signal_hz == doctest::Approx(1000.0));
    CHECK(b.background_hz == doctest::Approx(5.09));
    CHECK(b.total_hz == doctest::Approx(1005.09));
    CHECK(b.measured_hz ==
          doctest::Approx(detect::dead_time_rate(1005.09, 25e-6)).epsilon(1e-12));
    CHECK(b.expected_counts == doctest::Approx(b.measured_hz * T));
    CHECK(b.count_sigma == doctest::Approx(std::sqrt(b.expected_counts)));
    CHECK(b.rate_sigma_hz == doctest::Approx(b.count_sigma / T));
}

TEST_CASE("background budget: per-source rates with Poisson uncertainties") {
    detect::SpdConfig spd;
    spd.dark_rate_hz = 4.52;
    detect::BackgroundModel bg;
    bg.raman_rate_hz = 0.33;
    bg.external_rate_hz = 0.24;

    const double T = 86400.0;
    auto b = detect::background_budget(bg, spd, T);
    CHECK(b.dark.rate_hz == doctest::Approx(4.52));
    CHECK(b.raman.rate_hz == doctest::Approx(0.33));
    CHECK(b.rayleigh.rate_hz == doctest::Approx(0.0));
    CHECK(b.external.rate_hz == doctest::Approx(0.24));
    CHECK(b.total.rate_hz == doctest::Approx(5.09));
    CHECK(b.total.sigma_hz == doctest::Approx(std::sqrt(5.09 / T)).epsilon(1e-12));
    CHECK(b.dark.sigma_hz == doctest::Approx(std::sqrt(4.52 / T)).epsilon(1e-12));
    CHECK(b.duration_s == doctest::Approx(T));
}

TEST_CASE("merge_records interleaves two ports by time") {
    detect::CountRecord a;
    a.duration_s = 10.0;
    a.times_s = {1.0, 4.0, 9.0};
    a.detector = {0, 0, 0};
    detect::CountRecord b;
    b.duration_s = 10.0;
    b.times_s = {2.0, 4.0, 5.0};
    b.detector = {1, 1, 1};

    auto m = detect::merge_records(a, b);
    REQUIRE(m.size() == 6);
    CHECK(m.times_s == std::vector<double>{1.0, 2.0, 4.0, 4.0, 5.0, 9.0});
    CHECK(m.detector == std::vector<std::uint8_t>{0, 1, 0, 1, 1, 0});
    CHECK(m.count_for(0) == 3);
    CHECK(m.count_for(1) == 3);
    CHECK_NOTHROW(m.validate());

    detect::CountRecord c = b;
    c.duration_s = 11.0;
    CHECK_THROWS(detect::merge_records(a, c));
}

TEST_CASE("count record validation") {
    detect::CountRecord r;
    r.duration_s = 1.0;
    r.times_s = {0.1, 0.5};
    r.detector = {0, 1};
    CHECK_NOTHROW(r.validate());

    detect::CountRecord bad = r;
    bad.times_s = {0.5, 0.1};
    CHECK_THROWS(bad.validate()); // unsorted

    bad = r;
    bad.detector = {0};
    CHECK_THROWS(bad.validate()); // length mismatch

    bad = r;
    bad.times_s = {0.1, 1.5};
    CHECK_THROWS(bad.validate()); // click past the window

    bad = r;
    bad.duration_s = 0.0;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("qber from counts: Wilson interval") {
    auto est = detect::qber_from_counts(10, 1000);
    CHECK(est.e == doctest::Approx(0.01));
    CHECK(est.method == analysis::QberMethod::counts);
    // 95% Wilson half-width for 10/1000, frozen.
    CHECK(est.uncertainty == doctest::Approx(0.0064345).epsilon(1e-4));
    CHECK_FALSE(est.out_of_domain);

    CHECK_THROWS(detect::qber_from_counts(0, 0));    // no statistics
    CHECK_THROWS(detect::qber_from_counts(11, 10));  // more errors than clicks
    CHECK_THROWS(detect::qber_from_counts(800, 1000)); // swapped ports
}

TEST_CASE("qber from records needs matching windows") {
    auto make = [](std::size_t n, double duration) {
        detect::CountRecord r;
        r.duration_s = duration;
        for (std::size_t i = 0; i < n; ++i) {
            r.times_s.push_back(duration * static_cast<double>(i + 1) /
                                static_cast<double>(n + 1));
            r.detector.push_back(0);
        }
        return r;
    };

    auto est = detect::qber_from_counts(make(990, 10.0), make(10, 10.0));
    CHECK(est.e == doctest::Approx(0.01));

    CHECK_THROWS(detect::qber_from_counts(make(990, 10.0), make(10, 11.0)));
}
