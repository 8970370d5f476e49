#include "qbsde/quad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qbsde/errors.hpp"

namespace qbsde {

namespace {

double checked_eval(const std::function<double(double)>& g, double x) {
    const double v = g(x);
    if (!std::isfinite(v))
        throw DomainError("non-finite integrand value at x = " + std::to_string(x));
    return v;
}

double simpson_step(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double simpson_rec(const std::function<double(double)>& g, double a, double fa, double b,
                   double fb, double m, double fm, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = checked_eval(g, lm);
    const double frm = checked_eval(g, rm);
    const double left = simpson_step(a, m, fa, flm, fm);
    const double right = simpson_step(m, b, fm, frm, fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_rec(g, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           simpson_rec(g, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

} // namespace

double nudge_inward(double x, double width) {
    const double eps = std::max(std::abs(width) * 1e-12,
                                (std::abs(x) + 1.0) * 8.0 * std::numeric_limits<double>::epsilon());
    return width > 0 ? x + eps : x - eps;
}

double adaptive_simpson(const std::function<double(double)>& g, double a, double b, double tol) {
    if (!(a < b))
        return 0.0;
    const double w = b - a;
    const double aa = nudge_inward(a, w);
    const double bb = nudge_inward(b, -w);
    const double m = 0.5 * (a + b);
    const double fa = checked_eval(g, aa);
    const double fb = checked_eval(g, bb);
    const double fm = checked_eval(g, m);
    const double whole = simpson_step(a, b, fa, fm, fb);
    const double floor_tol = std::max(tol, 1e-17 * (std::abs(whole) + 1.0));
    return simpson_rec(g, a, fa, b, fb, m, fm, whole, floor_tol, 40);
}

double integrate_with_cuts(const std::function<double(double)>& g, double a, double b,
                           const std::vector<double>& cuts, double tol) {
    if (!(a < b))
        return 0.0;
    std::vector<double> edges;
    edges.push_back(a);
    for (double c : cuts)
        if (c > a && c < b)
            edges.push_back(c);
    edges.push_back(b);
    std::sort(edges.begin(), edges.end());
    double total = 0.0;
    const double span = b - a;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double w = edges[i + 1] - edges[i];
        if (w <= 0.0)
            continue;
        total += adaptive_simpson(g, edges[i], edges[i + 1], tol * std::max(w / span, 1e-3));
    }
    return total;
}

} // namespace qbsde
