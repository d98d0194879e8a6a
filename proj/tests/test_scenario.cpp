#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tfsim/scenario.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>

using namespace tfsim;
namespace fs = std::filesystem;

namespace {

bool throws_containing(const std::function<void()>& fn, const std::string& needle) {
    try {
        fn();
    } catch (const scenario::ConfigError& e) {
        return std::string(e.what()).find(needle) != std::string::npos;
    }
    return false;
}

scenario::Scenario parse(const std::string& text) {
    return scenario::parse_scenario(text, "inline");
}

} // namespace

TEST_CASE("minimal scenario parses with defaults") {
    auto sc = parse(R"({"name":"x"})");
    CHECK(sc.name == "x");
    CHECK(sc.seed == 1);
    CHECK(sc.run.duration_s == doctest::Approx(1.0));
    CHECK(sc.run.sample_rate_hz == doctest::Approx(5e6));
    CHECK(sc.run.stabilization);
    CHECK(sc.run.nu_mismatch);
    CHECK(sc.run.fiber_loop.bandwidth_hz == doctest::Approx(5e4));
    CHECK(sc.topology.plan.reference_hz == doctest::Approx(194.4e12));
    CHECK(sc.topology.plan.sensing_hz == doctest::Approx(194.25e12));
    CHECK(sc.fiber_base.is_zero());
    CHECK(sc.detection.spd.dead_time_s == doctest::Approx(25e-6));
    CHECK(sc.outputs.stabilized_trace);
    CHECK_FALSE(sc.outputs.error_trace);
    CHECK_NOTHROW(sc.validate());
}

TEST_CASE("default averaging-time grid: 12 points per decade, 1e-4 to 1 s") {
    auto sc = parse(R"({"name":"x"})");
    auto grid = sc.analysis.grid();
    REQUIRE(grid.size() == 49);
    CHECK(grid.front() == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK(grid.back() == doctest::Approx(1.0).epsilon(1e-9));
    // The decade points land exactly on 1e-3, 1e-2, 1e-1.
    CHECK(grid[24] == doctest::Approx(1e-2).epsilon(1e-12));
    for (std::size_t i = 1; i < grid.size(); ++i)
        CHECK(grid[i] / grid[i - 1] ==
              doctest::Approx(std::pow(10.0, 1.0 / 12.0)).epsilon(1e-9));
}

TEST_CASE("unknown fields are rejected with their full path") {
    CHECK(throws_containing([] { parse(R"({"name":"x","runn":{}})"); },
                            "$.runn: unknown field"));
    CHECK(throws_containing(
        [] { parse(R"({"name":"x","run":{"durations":2.0}})"); },
        "$.run.durations: unknown field"));
    CHECK(throws_containing(
        [] {
            parse(R"({"name":"x","noise":{"fiber_base":{"h":{"-5":1.0}}}})");
        },
        "$.noise.fiber_base.h.-5: unknown field"));
    CHECK(throws_containing(
        [] {
            parse(R"({"name":"x","detection":{"spd":{"effciency":0.1}}})");
        },
        "$.detection.spd.effciency: unknown field"));
}

TEST_CASE("type mismatches are rejected with their full path") {
    CHECK(throws_containing([] { parse(R"({"name":42})"); },
                            "$.name: expected a string"));
    CHECK(throws_containing([] { parse(R"({"name":"x","seed":-5})"); },
                            "$.seed: expected a non-negative integer"));
    CHECK(throws_containing([] { parse(R"({"name":"x","seed":1.5})"); },
                            "$.seed"));
    CHECK(throws_containing(
        [] { parse(R"({"name":"x","run":{"duration_s":"long"}})"); },
        "$.run.duration_s: expected a number"));
    CHECK(throws_containing(
        [] { parse(R"({"name":"x","run":{"stabilization":1}})"); },
        "$.run.stabilization: expected true or false"));
    CHECK(throws_containing(
        [] { parse(R"({"name":"x","run":{"fiber_loop":{"kind":"fuzzy"}}})"); },
        "$.run.fiber_loop.kind"));
    CHECK(throws_containing([] { parse(R"({"name":"x","noise":{"fiber_base":3}})"); },
                            "$.noise.fiber_base: expected an object"));
    CHECK(throws_containing(
        [] {
            parse(R"({"name":"x","analysis":{"points_per_decade":12.5}})");
        },
        "$.analysis.points_per_decade"));
}

TEST_CASE("semantic validation catches physics-level mistakes") {
    // A noise tone at or above Nyquist cannot be represented.
    CHECK(throws_containing(
        [] {
            parse(R"({"name":"x","noise":{"fiber_base":
                {"tones":[{"freq_hz":2.5e6,"amplitude_rad":0.1}]}}})");
        },
        "below f_s/2"));

    // The laser lock needs the full acquisition rate.
    CHECK(throws_containing(
        [] {
            parse(R"({"name":"x",
                "run":{"sample_rate_hz":1e6,"duration_s":1.0},
                "noise":{"slave_linewidth_hz":5000}})");
        },
        "run.sample_rate_hz"));

    // Loop bandwidth limited to f_s/10.
    CHECK(throws_containing(
        [] {
            parse(R"({"name":"x","run":{"fiber_loop":{"bandwidth_hz":6e5}}})");
        },
        "run.fiber_loop"));

    // Calibration target without any base noise shape to scale.
    CHECK(throws_containing(
        [] {
            parse(R"({"name":"x","noise":{"calibrate_drift_rad_per_ms":30.0}})");
        },
        "noise.fiber_base"));

    // Analysis grid must fit inside the run.
    CHECK(throws_containing(
        [] {
            parse(R"({"name":"x","run":{"duration_s":0.5},
                      "analysis":{"t_a_max_s":1.0}})");
        },
        "analysis.t_a_max_s"));

    CHECK(throws_containing([] { parse(R"({"name":""})"); }, "name"));
}

TEST_CASE("photodiode bandwidth 0 means unlimited") {
    auto sc = parse(R"({"name":"x","detection":{"photodiode":
        {"analog_bandwidth_hz":0}}})");
    CHECK(std::isinf(sc.detection.photodiode.analog_bandwidth_hz));
    // Canonical form encodes it back as 0, so the hash is stable.
    CHECK(scenario::canonical_json(sc).find("\"analog_bandwidth_hz\":0.0") !=
          std::string::npos);
}

TEST_CASE("scenario hash: semantic, not textual") {
    const std::string compact = R"({"name":"x","seed":7})";
    const std::string spaced = "{  \"seed\" : 7 ,\n  \"name\" : \"x\" }";
    CHECK(scenario::scenario_hash(parse(compact)) ==
          scenario::scenario_hash(parse(spaced)));

    // Changing any semantic field changes the hash.
    CHECK(scenario::scenario_hash(parse(R"({"name":"x","seed":8})")) !=
          scenario::scenario_hash(parse(compact)));
    CHECK(scenario::scenario_hash(parse(R"({"name":"y","seed":7})")) !=
          scenario::scenario_hash(parse(compact)));
    CHECK(scenario::scenario_hash(
              parse(R"({"name":"x","seed":7,"run":{"nu_mismatch":false}})")) !=
          scenario::scenario_hash(parse(compact)));

    // Defaults and their explicit spellings hash identically: the default
    // latency is two samples and the default corner is bandwidth/10.
    const std::string implicit_loop = R"({"name":"x"})";
    const std::string explicit_loop = R"({"name":"x","run":{"fiber_loop":
        {"latency_s":4e-7,"integral_corner_hz":5e3}}})";
    CHECK(scenario::scenario_hash(parse(implicit_loop)) ==
          scenario::scenario_hash(parse(explicit_loop)));

    const std::string other_latency = R"({"name":"x","run":{"fiber_loop":
        {"latency_s":6e-7}}})";
    CHECK(scenario::scenario_hash(parse(implicit_loop)) !=
          scenario::scenario_hash(parse(other_latency)));

    CHECK(scenario::scenario_hash(parse(compact)).rfind("fnv1a64:", 0) == 0);
    CHECK(scenario::scenario_hash(parse(compact)).size() ==
          std::string("fnv1a64:").size() + 16);
}

TEST_CASE("load_scenario reports the file in every failure") {
    CHECK(throws_containing(
        [] { scenario::load_scenario("no/such/scenario.json"); },
        "cannot open scenario file"));
    CHECK(throws_containing([] { scenario::parse_scenario("{oops", "broken.json"); },
                            "broken.json"));
    CHECK(throws_containing([] { scenario::parse_scenario("[1,2]", "arr.json"); },
                            "expected an object"));
}

TEST_CASE("shipped scenarios parse, validate, and hash reproducibly") {
    const char* dir = std::getenv("TFSIM_SCENARIO_DIR");
#ifdef TFSIM_SCENARIO_DIR
    if (dir == nullptr) dir = TFSIM_SCENARIO_DIR;
#endif
    REQUIRE_MESSAGE(dir != nullptr, "TFSIM_SCENARIO_DIR must point at scenarios/");

    const char* names[] = {"metro-stabilized.json", "metro-open-loop.json",
                           "quick.json"};
    std::string hashes[3];
    for (int i = 0; i < 3; ++i) {
        fs::path p = fs::path(dir) / names[i];
        CAPTURE(names[i]);
        scenario::Scenario sc = scenario::load_scenario(p);
        CHECK_NOTHROW(sc.validate());
        CHECK_FALSE(sc.name.empty());
        hashes[i] = scenario::scenario_hash(sc);
        // Loading again gives the same hash.
        CHECK(scenario::scenario_hash(scenario::load_scenario(p)) == hashes[i]);
    }
    CHECK(hashes[0] != hashes[1]);
    CHECK(hashes[0] != hashes[2]);
    CHECK(hashes[1] != hashes[2]);

    // The two metro scenarios differ only in stabilization and duration.
    auto stab = scenario::load_scenario(fs::path(dir) / "metro-stabilized.json");
    auto open = scenario::load_scenario(fs::path(dir) / "metro-open-loop.json");
    CHECK(stab.run.stabilization);
    CHECK_FALSE(open.run.stabilization);
    CHECK(stab.topology.unbalance_km() == doctest::Approx(44.0));
    CHECK(open.topology.unbalance_km() == doctest::Approx(44.0));
    // Their averaging grids must match so runs can be compared point-by-point.
    auto gs = stab.analysis.grid();
    auto go = open.analysis.grid();
    REQUIRE(gs.size() == go.size());
    for (std::size_t i = 0; i < gs.size(); ++i)
        CHECK(gs[i] == doctest::Approx(go[i]).epsilon(1e-12));
}
