#include "qbsde/closed_form.hpp"

#include <cmath>

#include "qbsde/errors.hpp"

namespace qbsde {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488016887242097;
constexpr double kTauFloor = 1e-14;

ValueDeriv terminal_slice(const ScalarFunctionSpec& g, double x) {
    ValueDeriv r;
    r.y = evaluate(g, x);
    const double eps = 1e-6 * (1.0 + std::abs(x));
    r.z = (evaluate(g, x + eps) - evaluate(g, x - eps)) / (2.0 * eps);
    return r;
}

// fixed-order expectation of h(S) * S / sqrt(tau): the state derivative
double stein_derivative(const std::function<double(double)>& h, int order, double sqrt_tau) {
    constexpr double kSqrtPi = 1.7724538509055160272981674833411;
    const auto& rule = gauss_hermite(order);
    double sum = 0.0;
    for (int i = 0; i < order; ++i) {
        const double s = kSqrt2 * rule.x[static_cast<std::size_t>(i)];
        sum += rule.w[static_cast<std::size_t>(i)] * h(s) * s / kSqrtPi;
    }
    return sum / sqrt_tau;
}

} // namespace

ValueDeriv solve_zero_generator(const TerminalSpec& ts, double t, double x,
                                const QuadratureOptions& opts) {
    if (t < 0.0 || t > ts.T + kTauFloor)
        throw ConfigError("time outside [0, T]");
    const double tau = ts.T - t;
    if (tau <= kTauFloor)
        return terminal_slice(ts.g, x);
    const double st = std::sqrt(tau);
    const auto h = [&](double s) { return evaluate(ts.g, x + st * s); };
    const auto res = gh_expectation(h, opts);
    ValueDeriv r;
    r.y = res.value;
    r.z = stein_derivative(h, res.order, st);
    return r;
}

ValueDeriv solve_pure_quadratic(const ZvonkinTransform& u, const TerminalSpec& ts, double t,
                                double x, const QuadratureOptions& opts) {
    if (t < 0.0 || t > ts.T + kTauFloor)
        throw ConfigError("time outside [0, T]");
    const double tau = ts.T - t;
    if (tau <= kTauFloor)
        return terminal_slice(ts.g, x);
    const double st = std::sqrt(tau);
    const auto h = [&](double s) {
        const double gx = evaluate(ts.g, x + st * s);
        if (std::abs(gx) > u.radius)
            throw EnlargeRadius(1.05 * std::abs(gx));
        return eval_u(u, gx);
    };
    const auto res = gh_expectation(h, opts);
    ValueDeriv r;
    r.y = eval_u_inverse(u, res.value);
    r.z = stein_derivative(h, res.order, st) / eval_u_prime(u, r.y);
    return r;
}

double envelope_radius(const TerminalSpec& ts, const DeterministicProcessSpec& alpha,
                       const DeterministicProcessSpec& beta, double x_lo, double x_hi) {
    // widest Brownian argument the quadrature can request at the largest rule
    const double span = std::sqrt(2.0 * ts.T) * 46.0;
    const double lo = x_lo - span;
    const double hi = x_hi + span;
    double gmax = 0.0;
    const std::size_t n = 4097;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        gmax = std::max(gmax, std::abs(evaluate(ts.g, x)));
    }
    for (double b : breakpoints_in(ts.g, lo, hi))
        gmax = std::max(gmax, std::abs(evaluate(ts.g, b)));
    const double inflated =
        (gmax + alpha.integral(0.0, ts.T)) * std::exp(beta.integral(0.0, ts.T));
    return 1.05 * std::max(inflated, 1.0);
}

EnvelopeBounds envelope_bounds(const ZvonkinTransform& u, const TerminalSpec& ts,
                               const DeterministicProcessSpec& alpha,
                               const DeterministicProcessSpec& beta,
                               const std::vector<double>& times, const std::vector<double>& states,
                               const QuadratureOptions& opts) {
    if (times.empty() || states.empty())
        throw ConfigError("envelope lattice must not be empty");
    EnvelopeBounds env;
    env.times = times;
    env.states = states;
    env.lower.assign(times.size(), std::vector<double>(states.size(), 0.0));
    env.upper.assign(times.size(), std::vector<double>(states.size(), 0.0));
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        if (t < -kTauFloor || t > ts.T + kTauFloor)
            throw ConfigError("envelope time outside [0, T]");
        const double A_t = alpha.integral(0.0, std::min(std::max(t, 0.0), ts.T));
        const double B_t = beta.integral(0.0, std::min(std::max(t, 0.0), ts.T));
        const double shrink = std::exp(-B_t);
        const double tau = ts.T - t;
        for (std::size_t j = 0; j < states.size(); ++j) {
            const double x = states[j];
            double up, lo;
            if (tau <= kTauFloor) {
                up = shrink * xi_alpha_beta(ts, alpha, beta, x, XiPart::plus) - A_t;
                lo = -shrink * xi_alpha_beta(ts, alpha, beta, x, XiPart::minus) + A_t;
            } else {
                const double st = std::sqrt(tau);
                const auto hp = [&](double s) {
                    const double xi = xi_alpha_beta(ts, alpha, beta, x + st * s, XiPart::plus);
                    if (xi > u.radius)
                        throw EnlargeRadius(1.05 * xi);
                    return eval_u(u, xi);
                };
                const auto hm = [&](double s) {
                    const double xi = xi_alpha_beta(ts, alpha, beta, x + st * s, XiPart::minus);
                    if (xi > u.radius)
                        throw EnlargeRadius(1.05 * xi);
                    return eval_u(u, xi);
                };
                up = shrink * eval_u_inverse(u, gh_expectation(hp, opts).value) - A_t;
                lo = -shrink * eval_u_inverse(u, gh_expectation(hm, opts).value) + A_t;
            }
            if (lo > up)
                lo = up;
            env.upper[i][j] = up;
            env.lower[i][j] = lo;
        }
    }
    return env;
}

ThetaLinearResult solve_theta_linear(const DeterministicProcessSpec& theta, const TerminalSpec& ts,
                                     const std::vector<GirsanovControl>& family,
                                     const PathBundle& bundle, const PdeGrid& pde_grid) {
    if (family.empty())
        throw ConfigError("control family must not be empty");
    const std::size_t N = static_cast<std::size_t>(bundle.grid.N);
    const std::size_t M = bundle.M;
    if (std::abs(bundle.grid.T - ts.T) > 1e-12 * (1.0 + ts.T))
        throw ConfigError("path grid horizon disagrees with the terminal horizon");

    std::vector<double> w_T(M, 0.0);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < M; ++j)
            w_T[j] += bundle.dW[i][j];
    for (std::size_t j = 0; j < M; ++j) {
        const double zeta = evaluate(ts.g, w_T[j]);
        if (zeta < 0.0)
            throw ConfigError("terminal payoff must be non-negative for the control "
                              "representation; sampled g = " +
                              std::to_string(zeta) + " at W_T = " + std::to_string(w_T[j]));
    }

    ThetaLinearResult out;
    const double dt = bundle.grid.h();
    std::vector<double> weighted(M);
    for (std::size_t ci = 0; ci < family.size(); ++ci) {
        const auto& ctrl = family[ci];
        bool is_zero_ctrl = true;
        for (int v : ctrl.pattern)
            is_zero_ctrl = is_zero_ctrl && v == 0;
        // the tilt of a deterministic control is an exact measure shift:
        // E[Gamma^pi g(W_T)] = E[g(W_T + int theta pi dt)], step by step for
        // the discrete Gaussian increments as well, so evaluating at shifted
        // endpoints targets the same quantity with every control sharing one
        // noise realization
        double shift = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double tk = bundle.grid.t(static_cast<int>(i));
            shift += theta.value(tk) * ctrl.value(tk, ts.T) * dt;
        }
        for (std::size_t j = 0; j < M; ++j)
            weighted[j] = evaluate(ts.g, w_T[j] + shift);
        double mean = 0.0;
        for (double v : weighted)
            mean += v;
        mean /= static_cast<double>(M);
        double var = 0.0;
        for (double v : weighted)
            var += (v - mean) * (v - mean);
        var /= static_cast<double>(M > 1 ? M - 1 : 1);
        const double se = std::sqrt(var / static_cast<double>(M));
        out.table.push_back({ci, ctrl.label(), mean, se});
        if (ci == 0 || mean > out.best) {
            out.best = mean;
            out.best_stderr = se;
            out.best_control = ci;
        }
        if (is_zero_ctrl)
            out.plain_expectation = mean;
    }

    GeneratorSpec h;
    h.terms.push_back(GeneratorTerm::theta_abs_z(theta));
    out.pde_reference = origin_value(solve_pde(h, ts, pde_grid));
    return out;
}

SolutionSurface quadratic_log_map(const SolutionSurface& s, double gamma, MapDirection dir) {
    if (gamma == 0.0)
        throw ConfigError("log map needs gamma != 0");
    SolutionSurface out = s;
    for (std::size_t i = 0; i < s.y.size(); ++i)
        for (std::size_t j = 0; j < s.y[i].size(); ++j) {
            const double y = s.y[i][j];
            const double z = s.z[i][j];
            if (dir == MapDirection::forward) {
                const double ey = std::exp(gamma * y);
                out.y[i][j] = ey;
                out.z[i][j] = gamma * ey * z;
            } else {
                if (!(y > 0.0))
                    throw DomainError("inverse log map needs positive values");
                out.y[i][j] = std::log(y) / gamma;
                out.z[i][j] = z / (gamma * y);
            }
        }
    return out;
}

double hbar_driver(double a, double b, double c, double y, double z) {
    const double ey = std::exp(y);
    const double x = ey - 1.0;
    const double xlog = x > 0.0 ? x * std::abs(std::log(x)) : 0.0;
    return (a + b * x + c * xlog) / ey + 0.5 * z * z;
}

Ln1pResult log_transform_ln1p(const SolutionSurface& s, double a, double b, double c) {
    if (a < 0.0 || b < 0.0 || c < 0.0)
        throw ConfigError("ln1p transform needs non-negative driver coefficients");
    Ln1pResult out;
    out.a = a;
    out.b = b;
    out.c = c;
    out.surface = s;
    for (std::size_t i = 0; i < s.y.size(); ++i)
        for (std::size_t j = 0; j < s.y[i].size(); ++j) {
            const double y = s.y[i][j];
            if (y < 0.0)
                throw DomainError("ln1p transform needs a non-negative solution; got " +
                                  std::to_string(y));
            out.surface.y[i][j] = std::log1p(y);
            out.surface.z[i][j] = s.z[i][j] / (1.0 + y);
        }
    return out;
}

GeneratorSpec log_mapped_generator(double gamma, double alpha0, double beta0) {
    GeneratorSpec g;
    g.terms.push_back(GeneratorTerm::custom(CustomTag::lin_y, gamma * alpha0));
    g.terms.push_back(GeneratorTerm::custom(CustomTag::y_log_abs_y, beta0));
    return g;
}

BoundCheck check_hbar_bounds(double a, double b, double c, double y_max, double z_max,
                             std::size_t n_target) {
    if (a < 0.0 || b < 0.0 || c < 0.0)
        throw ConfigError("bound check needs non-negative coefficients");
    BoundCheck rep;
    std::size_t k = 3;
    while (k * k < n_target)
        k += 2;
    for (std::size_t iy = 0; iy < k; ++iy) {
        const double y = y_max * static_cast<double>(iy) / static_cast<double>(k - 1);
        for (std::size_t iz = 0; iz < k; ++iz) {
            const double z =
                -z_max + 2.0 * z_max * static_cast<double>(iz) / static_cast<double>(k - 1);
            const double hv = hbar_driver(a, b, c, y, z);
            const double upper = a + b + c + c * y + 0.5 * z * z;
            const double excess = std::max(-hv, hv - upper);
            ++rep.samples;
            if (excess > 0.0) {
                ++rep.violations;
                if (excess > rep.worst) {
                    rep.worst = excess;
                    rep.at_y = y;
                    rep.at_z = z;
                }
            }
        }
    }
    return rep;
}

BoundCheck check_scalar_log_bound(double x_max, std::size_t n) {
    BoundCheck rep;
    if (n < 2)
        n = 2;
    const double lo_exp = -9.0;
    const double hi_exp = std::log10(x_max);
    for (std::size_t i = 0; i < n; ++i) {
        const double e =
            lo_exp + (hi_exp - lo_exp) * static_cast<double>(i) / static_cast<double>(n - 1);
        const double x = std::pow(10.0, e);
        const double lhs = x * std::abs(std::log(x)) / (1.0 + x);
        const double rhs = 1.0 + std::abs(std::log1p(x));
        ++rep.samples;
        const double excess = lhs - rhs;
        if (excess > 0.0) {
            ++rep.violations;
            if (excess > rep.worst) {
                rep.worst = excess;
                rep.at_y = x;
            }
        }
    }
    return rep;
}

ComparisonReport comparison_check(const ScalarFunctionSpec& f1, const TerminalSpec& ts1,
                                  const ScalarFunctionSpec& f2, const TerminalSpec& ts2,
                                  const std::vector<double>& times,
                                  const std::vector<double>& states, std::size_t n_nodes,
                                  const QuadratureOptions& opts) {
    if (std::abs(ts1.T - ts2.T) > 1e-12 * (1.0 + ts1.T))
        throw ConfigError("comparison needs a common horizon");
    if (times.empty() || states.empty())
        throw ConfigError("comparison lattice must not be empty");

    const double span = std::sqrt(2.0 * ts1.T) * 46.0;
    const double x_lo = *std::min_element(states.begin(), states.end()) - span;
    const double x_hi = *std::max_element(states.begin(), states.end()) + span;
    double g_need = 1.0;
    for (std::size_t i = 0; i < 2049; ++i) {
        const double x = x_lo + (x_hi - x_lo) * static_cast<double>(i) / 2048.0;
        const double g1 = evaluate(ts1.g, x);
        const double g2 = evaluate(ts2.g, x);
        if (g1 > g2 + 1e-12 * (1.0 + std::abs(g2)))
            throw ConfigError("scenario rejected: terminal ordering fails at x = " +
                              std::to_string(x));
        g_need = std::max({g_need, std::abs(g1), std::abs(g2)});
    }
    const double R = 1.1 * g_need;
    for (std::size_t i = 0; i < 2049; ++i) {
        const double y = -R + 2.0 * R * static_cast<double>(i) / 2048.0;
        const double v1 = evaluate(f1, y);
        const double v2 = evaluate(f2, y);
        if (v1 > v2 + 1e-12 * (1.0 + std::abs(v2)))
            throw ConfigError("scenario rejected: driver ordering fails at y = " +
                              std::to_string(y));
    }

    const ZvonkinTransform u1 = build_u(f1, R, n_nodes);
    const ZvonkinTransform u2 = build_u(f2, R, n_nodes);
    ComparisonReport rep;
    for (double t : times)
        for (double x : states) {
            const double y1 = solve_pure_quadratic(u1, ts1, t, x, opts).y;
            const double y2 = solve_pure_quadratic(u2, ts2, t, x, opts).y;
            ++rep.points;
            const double excess = y1 - y2;
            if (excess > rep.max_excess) {
                rep.max_excess = excess;
                rep.t_at = t;
                rep.x_at = x;
            }
        }
    return rep;
}

} // namespace qbsde
