#pragma once

#include <functional>
#include <vector>

namespace qbsde {

// Physicists' Gauss-Hermite rule: int e^{-x^2} p(x) dx = sum w_i p(x_i).
struct GaussHermiteRule {
    int order = 0;
    std::vector<double> x;
    std::vector<double> w;
};

// Golub-Welsch eigen construction; cached per order.
const GaussHermiteRule& gauss_hermite(int order);

struct QuadratureOptions {
    int order0 = 64;
    int max_order = 512;
    double tol = 1e-9;
};

struct GhResult {
    double value = 0.0;
    int order = 0;
    double last_diff = 0.0;
};

// E[h(Z)] for standard normal Z, doubling the order until the change is below
// tol (relative to max(1, |value|)).  Two safeguards against non-integrable
// integrands: a tail-dominance test (the outermost nodes may not carry a
// macroscopic share of the largest contribution) and, at the order cap, a
// growth test on the partial values.  Both throw IntegrabilityError.
GhResult gh_expectation(const std::function<double(double)>& h, const QuadratureOptions& opts = {});

} // namespace qbsde
