#pragma once

#include <cstddef>
#include <vector>

#include "qbsde/function_model.hpp"

namespace qbsde {

// Tabulated primitive u(y) = int_0^y exp(2 int_0^x f) dx on [-R, R] with
// u(0) = 0, u'(0) = 1.  Strictly increasing; solves (1/2)u'' - f u' = 0.
// c is the limit of u at -infinity when f is non-negative and the tail
// converges, else -infinity (c_finite false).
struct ZvonkinTransform {
    double radius = 0.0;
    std::vector<double> nodes;
    std::vector<double> u;
    std::vector<double> du;
    double l1_norm = 0.0; // int_{-R}^{R} |f|
    bool c_finite = false;
    double c = 0.0;
};

// Companion table for the auxiliary primitives: val/dval at the same nodes.
struct AuxTable {
    double radius = 0.0;
    std::vector<double> nodes;
    std::vector<double> val;
    std::vector<double> dval;
};

// n is the uniform node count on [-R, R]; 0 and the breakpoints of f are
// inserted on top of the uniform grid.
ZvonkinTransform build_u(const ScalarFunctionSpec& f, double R, std::size_t n);

// v solves (1/2)v'' - f v' = 1/2 with v(0) = v'(0) = 0,
// v(y) = int_0^y K(x) e^{2F(x)} dx, K(x) = int_0^x e^{-2F}.
AuxTable build_v(const ScalarFunctionSpec& f, double R, std::size_t n);

// w solves (1/2)w'' - f w' = f/2 with w(0) = w'(0) = 0,
// w(y) = int_0^y G(x) e^{2F(x)} dx, G(x) = int_0^x f e^{-2F}.
AuxTable build_w(const ScalarFunctionSpec& f, double R, std::size_t n);

// Monotone cubic interpolation between nodes; exact values and derivatives at
// the nodes themselves.
double eval_u(const ZvonkinTransform& t, double x);
double eval_u_prime(const ZvonkinTransform& t, double x);
double eval_aux(const AuxTable& t, double x);

// Inverse map with |u(u^{-1}(v)) - v| <= 1e-10 * max(1, |v|).  Throws
// RangeError outside the tabulated value range.
double eval_u_inverse(const ZvonkinTransform& t, double v);

// u - c; requires a finite lower limit.
double eval_u_shifted(const ZvonkinTransform& t, double x);

struct OdeResidualReport {
    double max_residual = 0.0;
    double argmax = 0.0;
    std::size_t checked = 0;
};

// Scaled residual of the defining ODE at interior grid nodes, skipping
// neighbourhoods of breakpoints and locally non-uniform stencils.  Second
// derivatives come from a five-point stencil on the tabulated first
// derivatives (on their logarithm where that is better conditioned); the
// residual is scaled by max(1, |first derivative|).
OdeResidualReport ode_residual(const ZvonkinTransform& t, const ScalarFunctionSpec& f);
OdeResidualReport ode_residual_v(const AuxTable& v, const ScalarFunctionSpec& f);
OdeResidualReport ode_residual_w(const AuxTable& w, const ScalarFunctionSpec& f);

} // namespace qbsde
