#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "qbsde/errors.hpp"
#include "qbsde/experiments.hpp"

using namespace qbsde;
using nlohmann::json;

namespace fs = std::filesystem;

TEST_CASE("function parsing covers shorthands, tags, and nesting") {
    CHECK(evaluate(parse_function(json(0.75)), 123.0) == 0.75);
    CHECK(evaluate(parse_function(json::parse(R"({"kind":"constant","c":-1.5})")), 0.0) == -1.5);
    CHECK(evaluate(parse_function(json("cos")), 0.0) == 1.0);
    CHECK(evaluate(parse_function(json("id")), 2.5) == 2.5);
    CHECK(evaluate(parse_function(json("identity")), -2.5) == -2.5);

    const auto poly = parse_function(json::parse(R"({"kind":"polynomial","coeffs":[1,0,2]})"));
    CHECK(evaluate(poly, 1.5) == doctest::Approx(5.5));

    const auto ind = parse_function(json::parse(
        R"({"kind":"indicator_halfline","threshold":0,"left":0,"right":{"kind":"constant","c":1}})"));
    CHECK(evaluate(ind, 1.0) == 1.0);
    CHECK(evaluate(ind, -1.0) == 0.0);

    const auto clip = parse_function(json::parse(
        R"({"kind":"clip","part":{"kind":"identity"},"lo":-1,"hi":1})"));
    CHECK(evaluate(clip, 3.0) == 1.0);
    CHECK(evaluate(clip, -3.0) == -1.0);
    CHECK(evaluate(clip, 0.25) == 0.25);

    CHECK_THROWS_AS(parse_function(json("fancy")), ConfigError);
    CHECK_THROWS_AS(parse_function(json::parse(R"({"kind":"wavelet"})")), ConfigError);
}

TEST_CASE("process parsing") {
    const auto c = parse_process(json(0.25));
    CHECK(c.value(17.0) == 0.25);
    const auto pw = parse_process(json::parse(R"({"breakpoints":[0,0.5],"values":[1,2]})"));
    CHECK(pw.value(0.25) == 1.0);
    CHECK(pw.value(0.5) == 2.0);
    CHECK(pw.integral(0.0, 1.0) == doctest::Approx(1.5));
    CHECK_THROWS_AS(parse_process(json::parse(R"({"breakpoints":[0.5],"values":[1]})")),
                    ConfigError);
}

TEST_CASE("generator parsing") {
    const auto h = parse_generator(json::parse(R"({
        "terms": [
            {"kind": "alpha", "process": 0.3},
            {"kind": "beta_abs_y", "process": 0.2},
            {"kind": "f_zsq", "f": 0.5},
            {"kind": "theta_abs_z", "process": 0.1}
        ]})"));
    CHECK(evaluate(h, 0.3, -2.0, 3.0) == doctest::Approx(5.5));

    const auto tagged = parse_generator(json::parse(
        R"({"terms":[{"kind":"custom","tag":"y_log_abs_y","coef":2.0}],"negated":true})"));
    CHECK(evaluate(tagged, 0.0, -2.0, 0.0) ==
          doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-12));

    CHECK_THROWS_AS(parse_generator(json::parse(R"({"terms":[{"kind":"mystery"}]})")),
                    ConfigError);
}

TEST_CASE("config parsing applies defaults and rejects bad values") {
    auto j = json::parse(R"({
        "experiment": "pure-quadratic",
        "scenario": {"f": 0.5, "g": "id", "T": 1.0},
        "seed": 7,
        "out_dir": "out/x"
    })");
    const auto cfg = parse_config(j);
    CHECK(cfg.experiment == "pure-quadratic");
    CHECK(cfg.M == 100000);
    CHECK(cfg.N == 50);
    CHECK(cfg.nx == 401);
    CHECK(cfg.seed == 7);
    CHECK(cfg.tol.mc == 2e-2);
    REQUIRE(cfg.f.has_value());
    CHECK(evaluate(*cfg.f, 0.0) == 0.5);

    j["numerics"] = {{"n", 8}};
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j["numerics"] = {{"M", 0}};
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    j["numerics"] = {{"M", 1000}};
    j["tolerances"] = {{"mc", 0.5}};
    const auto cfg2 = parse_config(j);
    CHECK(cfg2.M == 1000);
    CHECK(cfg2.tol.mc == 0.5);

    j["experiment"] = "does-not-exist";
    CHECK_THROWS_AS(parse_config(j), ConfigError);
}

TEST_CASE("missing config file is a config error") {
    CHECK_THROWS_AS(load_config_file("/nonexistent/qbsde.json"), ConfigError);
}

TEST_CASE("transform check experiment runs end to end") {
    const fs::path dir = fs::temp_directory_path() / "qbsde_test_transform_check";
    fs::remove_all(dir);

    ExperimentConfig cfg;
    cfg.experiment = "transform-check";
    cfg.f = ScalarFunctionSpec::indicator_halfline(0.0, 0.0, 1.0);
    cfg.R = 3.0;
    cfg.n = 2048;
    cfg.seed = 31;
    cfg.out_dir = dir.string();

    CHECK(run(cfg) == 0);
    CHECK(fs::exists(dir / "report.txt"));
    CHECK(fs::exists(dir / "manifest.csv"));

    std::ifstream in(dir / "report.txt");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("[PASS]") != std::string::npos);
    CHECK(text.find("[FAIL]") == std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("assumption experiment propagates the divergence verdict") {
    const fs::path dir = fs::temp_directory_path() / "qbsde_test_assumptions_divergent";
    fs::remove_all(dir);

    ExperimentConfig cfg;
    cfg.experiment = "assumptions";
    cfg.f = ScalarFunctionSpec::make_constant(0.5);
    cfg.g = ScalarFunctionSpec::polynomial({0.0, 0.0, 1.0});
    cfg.M = 100000;
    cfg.p = 2.0;
    cfg.seed = 13;
    cfg.out_dir = dir.string();

    CHECK(run(cfg) == 2);
    CHECK(fs::exists(dir / "report.txt"));
    fs::remove_all(dir);
}
