#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"
#include "qbsde/function_model.hpp"
#include "qbsde/scenario.hpp"

namespace qbsde {

// Per-check tolerances, overridable from the config's "tolerances" object.
struct Tolerances {
    double roundtrip = 1e-8;   // u_inverse(u(y)) vs y
    double ode = 1e-4;         // transform ODE residual away from breakpoints
    double value = 1e-6;       // closed-form anchor values
    double quad = 1e-6;        // quadrature solver vs ground truth
    double pde = 1e-3;         // finite-difference deltas
    double mc = 2e-2;          // Monte Carlo deltas
    double residual = 1e-2;    // mapped-surface discrete residual
    double excess = 1e-8;      // comparison positive excess
    double containment = 1e-3; // envelope containment slack
    double clamp_fraction = 0.01;
};

struct ExperimentConfig {
    std::string experiment;

    std::optional<ScalarFunctionSpec> f;
    std::optional<ScalarFunctionSpec> g;
    double T = 1.0;
    DeterministicProcessSpec alpha;
    DeterministicProcessSpec beta;
    DeterministicProcessSpec theta;
    std::optional<GeneratorSpec> generator;

    double R = 0.0;      // transform radius; 0 sizes it from the scenario
    std::size_t n = 2048; // transform nodes
    std::size_t M = 100000;
    int N = 50;
    std::size_t K = 0;   // regression bins; 0 picks ceil(M^{1/3})
    int nx = 401;
    int nt = 0;          // 0 picks the smallest stable count
    int gh_order = 64;
    double X = 6.0;      // PDE half-width
    std::optional<double> p;
    int nsub = 4;        // control sub-intervals / moment partition
    std::size_t pairs = 20;     // comparison experiment
    std::size_t scenarios = 10; // domination-solve randomized scenarios

    std::uint64_t seed = 424243;
    std::string out_dir = "out";
    Tolerances tol;
};

// Tagged function records, e.g. {"kind":"constant","c":0.5}; a bare number is
// shorthand for a constant.
ScalarFunctionSpec parse_function(const nlohmann::json& j);

// A bare number is a constant process; otherwise {"breakpoints":[0,...],
// "values":[...]} with breakpoints[0] == 0.
DeterministicProcessSpec parse_process(const nlohmann::json& j);

// {"terms":[{"kind":"alpha","process":...}, {"kind":"f_zsq","f":...,
// "sign":1,"abs_arg":false}, {"kind":"custom","tag":"sin_y_zsq",
// "coef":0.25}, ...], "negated":false}
GeneratorSpec parse_generator(const nlohmann::json& j);

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config_file(const std::string& path);

// Executes the named experiment, writing report.txt, manifest.csv and the
// experiment's CSVs under cfg.out_dir.  Returns the process exit status:
// 0 pass, 2 tolerance or divergence failure, 1 configuration or
// integrability error (diagnostic on stderr).
int run(const ExperimentConfig& cfg);

} // namespace qbsde
