#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "qbsde/envelope.hpp"
#include "qbsde/gauss_hermite.hpp"
#include "qbsde/mc_engine.hpp"
#include "qbsde/pde_oracle.hpp"
#include "qbsde/scenario.hpp"
#include "qbsde/transforms.hpp"

namespace qbsde {

struct ValueDeriv {
    double y = 0.0;
    double z = 0.0;
};

// Conditional-expectation solution of the driverless equation:
// Y(t, x) = E[g(W_T) | W_t = x], Z by the differentiated quadrature identity
// E[phi'(x + s S)] = E[phi(x + s S) S] / s, which needs no smoothness of g.
ValueDeriv solve_zero_generator(const TerminalSpec& ts, double t, double x,
                                const QuadratureOptions& opts = {});

// Solution of the purely quadratic equation through the increasing primitive:
// Y = u^{-1}(E[u(g(W_T)) | W_t = x]) and Z = dE/dx / u'(Y).  Throws
// EnlargeRadius when the quadrature wants g-values outside the table.
ValueDeriv solve_pure_quadratic(const ZvonkinTransform& u, const TerminalSpec& ts, double t,
                                double x, const QuadratureOptions& opts = {});

// Rebuild-and-retry wrapper for the radius signal.
template <class Fn>
auto with_transform_retry(const ScalarFunctionSpec& f, double R0, std::size_t n, Fn&& fn) {
    double R = std::max(R0, 1.0);
    for (int attempt = 0;; ++attempt) {
        const ZvonkinTransform u = build_u(f, R, n);
        try {
            return fn(u);
        } catch (const EnlargeRadius& e) {
            if (attempt >= 3)
                throw;
            R = std::max(e.required, 2.0 * R);
        }
    }
}

// Radius large enough to evaluate the transform on every inflated-terminal
// value the envelope machinery can request over the state range.
double envelope_radius(const TerminalSpec& ts, const DeterministicProcessSpec& alpha,
                       const DeterministicProcessSpec& beta, double x_lo, double x_hi);

// A-priori solution bounds on a time/state lattice:
//   U(t,x) = e^{-B(t)} u^{-1}(E[u(xi_plus) | W_t = x]) - A(t)
//   L(t,x) = -e^{-B(t)} u^{-1}(E[u(xi_minus) | W_t = x]) + A(t)
// with A, B the running integrals of alpha, beta; at t = T they collapse to
// the positive/negative parts of the terminal data exactly.
EnvelopeBounds envelope_bounds(const ZvonkinTransform& u, const TerminalSpec& ts,
                               const DeterministicProcessSpec& alpha,
                               const DeterministicProcessSpec& beta,
                               const std::vector<double>& times, const std::vector<double>& states,
                               const QuadratureOptions& opts = {});

// Control-family representation of the driver theta(t)|z|: the candidate
// value is the largest reweighted expectation sup_pi E[Gamma^pi g(W_T)] over
// piecewise-constant sign controls, compared against a finite-difference
// reference for the same equation.
struct ControlEstimate {
    std::size_t id = 0;
    std::string pattern;
    double estimate = 0.0;
    double stderr_ = 0.0;
};
struct ThetaLinearResult {
    std::vector<ControlEstimate> table;
    double best = 0.0;
    double best_stderr = 0.0;
    std::size_t best_control = 0;
    double plain_expectation = 0.0; // the all-zero control row
    double pde_reference = 0.0;
};
ThetaLinearResult solve_theta_linear(const DeterministicProcessSpec& theta, const TerminalSpec& ts,
                                     const std::vector<GirsanovControl>& family,
                                     const PathBundle& bundle, const PdeGrid& pde_grid);

// Bijection between the quadratic-driver solution and its exponential image:
// forward maps (y, z) to (e^{gamma y}, gamma e^{gamma y} z).
enum class MapDirection { forward, inverse };
SolutionSurface quadratic_log_map(const SolutionSurface& s, double gamma, MapDirection dir);

// ln(1+Y) change of variable for non-negative solutions, with the transformed
// driver (a + b x + c x|ln x|)/(1+x) + z^2/2 at x = e^y - 1.
struct Ln1pResult {
    SolutionSurface surface;
    double a = 0.0, b = 0.0, c = 0.0;
};
Ln1pResult log_transform_ln1p(const SolutionSurface& s, double a, double b, double c);

double hbar_driver(double a, double b, double c, double y, double z);

// Driver of the exponential image e^{gamma Y}: the Ito expansion cancels the
// quadratic z-term exactly and |Y| = |ln y|/gamma turns beta|Y| into
// beta y |ln y|, leaving gamma alpha y + beta y |ln y| and no z dependence.
GeneratorSpec log_mapped_generator(double gamma, double alpha0, double beta0);

struct BoundCheck {
    std::size_t violations = 0;
    std::size_t samples = 0;
    double worst = 0.0;
    double at_y = 0.0, at_z = 0.0;
};
// 0 <= hbar <= a + b + c + c y + z^2/2 on [0, y_max] x [-z_max, z_max]
BoundCheck check_hbar_bounds(double a, double b, double c, double y_max, double z_max,
                             std::size_t n_target);
// x |ln x| / (1 + x) <= 1 + |ln(1 + x)| on (0, x_max], log-spaced samples
BoundCheck check_scalar_log_bound(double x_max, std::size_t n);

// Monotonicity of the purely quadratic solution in (f, g): solves both
// scenarios on the lattice and reports the largest positive excess of the
// first over the second.  Preconditions f1 <= f2 and g1 <= g2 are verified
// by sampling; violations raise ConfigError.
struct ComparisonReport {
    double max_excess = 0.0;
    double t_at = 0.0, x_at = 0.0;
    std::size_t points = 0;
};
ComparisonReport comparison_check(const ScalarFunctionSpec& f1, const TerminalSpec& ts1,
                                  const ScalarFunctionSpec& f2, const TerminalSpec& ts2,
                                  const std::vector<double>& times,
                                  const std::vector<double>& states, std::size_t n_nodes,
                                  const QuadratureOptions& opts = {});

} // namespace qbsde
