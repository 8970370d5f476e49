#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace qbsde {

enum class FnKind {
    constant,
    polynomial,
    exp_affine,
    indicator_halfline,
    log_growth,
    trig,
    piecewise_linear,
    sum,
    max_of,
    min_of,
    scale,
};

enum class Monotone { none, increasing, decreasing };

// Closed, serializable description of a scalar function of one variable.
// Composite kinds hold their operands in `parts`.
struct ScalarFunctionSpec {
    FnKind kind = FnKind::constant;
    double c = 0.0;                      // constant value / scale factor
    std::vector<double> coeffs;          // polynomial, ascending powers
    double a = 0.0;                      // exp_affine a*e^{b y}; log_growth a + b|y| + c_|y||ln|y||
    double b = 0.0;                      //   trig: a*cos(b y + c)
    double threshold = 0.0;              // indicator split point, right branch closed
    std::vector<ScalarFunctionSpec> parts;
    std::vector<double> xs, ys;          // piecewise_linear knots, constant beyond the ends
    bool continuous = true;
    Monotone monotone = Monotone::none;

    static ScalarFunctionSpec make_constant(double v);
    static ScalarFunctionSpec polynomial(std::vector<double> coeffs);
    static ScalarFunctionSpec identity();
    static ScalarFunctionSpec exp_affine(double a, double b);
    static ScalarFunctionSpec indicator_halfline(double threshold, ScalarFunctionSpec left,
                                                 ScalarFunctionSpec right);
    static ScalarFunctionSpec indicator_halfline(double threshold, double left, double right);
    static ScalarFunctionSpec log_growth(double a, double b, double c);
    static ScalarFunctionSpec trig(double amplitude, double frequency, double phase);
    static ScalarFunctionSpec piecewise_linear(std::vector<double> xs, std::vector<double> ys);
    static ScalarFunctionSpec sum(std::vector<ScalarFunctionSpec> parts);
    static ScalarFunctionSpec max_of(std::vector<ScalarFunctionSpec> parts);
    static ScalarFunctionSpec min_of(std::vector<ScalarFunctionSpec> parts);
    static ScalarFunctionSpec scale(double factor, ScalarFunctionSpec part);
    static ScalarFunctionSpec clipped(ScalarFunctionSpec part, double lo, double hi);
};

double evaluate(const ScalarFunctionSpec& f, double y);

// Points in [lo, hi] where f may be non-smooth, sorted and deduplicated.
std::vector<double> breakpoints_in(const ScalarFunctionSpec& f, double lo, double hi);

// L1 norm of f over [-R, R], splitting the domain at breakpoints so jumps do
// not degrade the quadrature.  Relative accuracy around 1e-9.
double integrate_abs(const ScalarFunctionSpec& f, double R);

// Smallest non-decreasing function >= f on [0, R], tabulated on an n-point
// grid (plus breakpoints) by a running maximum; spikes strictly between grid
// points are not seen.  Result is piecewise linear, flagged increasing,
// constant beyond [0, R].
ScalarFunctionSpec increasing_majorant(const ScalarFunctionSpec& f, double R, std::size_t n);

struct FlagCheck {
    bool ok = true;
    double worst_x = 0.0;
    std::string what;
};

// Sample-based verification of the continuity/monotonicity flags on [-R, R].
FlagCheck check_flags(const ScalarFunctionSpec& f, double R, std::size_t n = 10000);

// Non-negative piecewise-constant deterministic process on [0, infinity),
// right-open segments.  First breakpoint is always 0.
struct DeterministicProcessSpec {
    std::vector<double> breakpoints{0.0};
    std::vector<double> values{0.0};

    static DeterministicProcessSpec make_constant(double v);
    static DeterministicProcessSpec piecewise(std::vector<double> breakpoints,
                                              std::vector<double> values);

    double value(double t) const;
    // Exact integral over [s, t] (sum of rectangles), s <= t required.
    double integral(double s, double t) const;
    double max_value() const;
    bool is_zero() const;
};

} // namespace qbsde
