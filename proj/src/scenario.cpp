#include "qbsde/scenario.hpp"

#include <algorithm>
#include <cmath>

#include "qbsde/errors.hpp"
#include "qbsde/rng.hpp"

namespace qbsde {

GeneratorTerm GeneratorTerm::alpha(DeterministicProcessSpec p) {
    GeneratorTerm t;
    t.kind = TermKind::alpha;
    t.proc = std::move(p);
    return t;
}

GeneratorTerm GeneratorTerm::beta_abs_y(DeterministicProcessSpec p) {
    GeneratorTerm t;
    t.kind = TermKind::beta_abs_y;
    t.proc = std::move(p);
    return t;
}

GeneratorTerm GeneratorTerm::theta_abs_z(DeterministicProcessSpec p) {
    GeneratorTerm t;
    t.kind = TermKind::theta_abs_z;
    t.proc = std::move(p);
    return t;
}

GeneratorTerm GeneratorTerm::f_zsq(ScalarFunctionSpec f, double sign, bool abs_arg) {
    GeneratorTerm t;
    t.kind = TermKind::f_zsq;
    t.fn = std::move(f);
    t.sign = sign;
    t.abs_arg = abs_arg;
    return t;
}

GeneratorTerm GeneratorTerm::custom(CustomTag tag, double coef) {
    GeneratorTerm t;
    t.kind = TermKind::custom;
    t.tag = tag;
    t.coef = coef;
    return t;
}

double evaluate(const GeneratorSpec& h, double t, double y, double z) {
    double v = 0.0;
    for (const auto& term : h.terms) {
        switch (term.kind) {
        case TermKind::alpha:
            v += term.proc.value(t);
            break;
        case TermKind::beta_abs_y:
            v += term.proc.value(t) * std::abs(y);
            break;
        case TermKind::theta_abs_z:
            v += term.proc.value(t) * std::abs(z);
            break;
        case TermKind::f_zsq:
            v += term.sign * evaluate(term.fn, term.abs_arg ? std::abs(y) : y) * z * z;
            break;
        case TermKind::custom:
            switch (term.tag) {
            case CustomTag::sin_y_zsq:
                v += term.coef * std::sin(y) * z * z;
                break;
            case CustomTag::y_abs_z:
                v += term.coef * y * std::abs(z);
                break;
            case CustomTag::lin_y:
                v += term.coef * y;
                break;
            case CustomTag::y_log_abs_y:
                v += (y != 0.0) ? term.coef * y * std::abs(std::log(std::abs(y))) : 0.0;
                break;
            }
            break;
        }
    }
    return h.negated ? -v : v;
}

double xi_alpha_beta(const TerminalSpec& ts, const DeterministicProcessSpec& alpha,
                     const DeterministicProcessSpec& beta, double w_T, XiPart part) {
    const double g = evaluate(ts.g, w_T);
    double base = 0.0;
    switch (part) {
    case XiPart::abs:
        base = std::abs(g);
        break;
    case XiPart::plus:
        base = std::max(g, 0.0);
        break;
    case XiPart::minus:
        base = std::max(-g, 0.0);
        break;
    }
    return (base + alpha.integral(0.0, ts.T)) * std::exp(beta.integral(0.0, ts.T));
}

EnvelopeGenerators build_envelope_generators(const DeterministicProcessSpec& alpha,
                                             const DeterministicProcessSpec& beta,
                                             const DeterministicProcessSpec& theta,
                                             const ScalarFunctionSpec& f) {
    if (f.monotone != Monotone::increasing)
        throw ConfigError(
            "envelope generators need an increasing quadratic weight; wrap it with "
            "increasing_majorant first");
    EnvelopeGenerators e;
    e.g_env.terms.push_back(GeneratorTerm::alpha(alpha));
    e.g_env.terms.push_back(GeneratorTerm::beta_abs_y(beta));
    e.g_env.terms.push_back(GeneratorTerm::f_zsq(f, 1.0, true));
    e.h_env = e.g_env;
    e.h_env.terms.push_back(GeneratorTerm::theta_abs_z(theta));
    return e;
}

namespace {

// odd per-axis lattice size so corners, edge midpoints and the centre are hit
std::size_t lattice_side(std::size_t n_target) {
    std::size_t k = 3;
    while (k * k * k < n_target)
        k += 2;
    return k;
}

template <class Fn>
void scan_box(const SampleBox& box, std::size_t n_target, Fn&& visit) {
    const std::size_t k = lattice_side(n_target);
    for (std::size_t it = 0; it < k; ++it) {
        const double t =
            box.t_lo + (box.t_hi - box.t_lo) * static_cast<double>(it) / static_cast<double>(k - 1);
        for (std::size_t iy = 0; iy < k; ++iy) {
            const double y = box.y_lo + (box.y_hi - box.y_lo) * static_cast<double>(iy) /
                                            static_cast<double>(k - 1);
            for (std::size_t iz = 0; iz < k; ++iz) {
                const double z = box.z_lo + (box.z_hi - box.z_lo) * static_cast<double>(iz) /
                                                static_cast<double>(k - 1);
                visit(t, y, z);
            }
        }
    }
}

} // namespace

DominationReport check_domination(const GeneratorSpec& h, const GeneratorSpec& upper,
                                  const SampleBox& box, std::size_t n_target) {
    DominationReport rep;
    scan_box(box, n_target, [&](double t, double y, double z) {
        const double hv = evaluate(h, t, y, z);
        const double up = evaluate(upper, t, y, z);
        ++rep.samples;
        const double above = hv - up;
        if (above > rep.excess_above) {
            rep.excess_above = above;
            rep.t_above = t;
            rep.y_above = y;
            rep.z_above = z;
        }
        const double below = -up - hv;
        if (below > rep.excess_below) {
            rep.excess_below = below;
            rep.t_below = t;
            rep.y_below = y;
            rep.z_below = z;
        }
    });
    rep.pass = rep.excess_above <= 0.0 && rep.excess_below <= 0.0;
    rep.excess_above = std::max(rep.excess_above, 0.0);
    rep.excess_below = std::max(rep.excess_below, 0.0);
    return rep;
}

QuadFormReport check_quadratic_form(const GeneratorSpec& h, const DeterministicProcessSpec& eta,
                                    double C, const SampleBox& box, std::size_t n_target) {
    QuadFormReport rep;
    scan_box(box, n_target, [&](double t, double y, double z) {
        const double bound = eta.value(t) + C * z * z;
        const double excess = std::abs(evaluate(h, t, y, z)) - bound;
        ++rep.samples;
        if (excess > rep.excess) {
            rep.excess = excess;
            rep.t_at = t;
            rep.y_at = y;
            rep.z_at = z;
        }
    });
    rep.pass = rep.excess <= 0.0;
    rep.excess = std::max(rep.excess, 0.0);
    return rep;
}

namespace {

ViolationReport check_growth(const GeneratorSpec& h, const GeneratorSpec& envelope,
                             const SampleBox& box, std::size_t n_target) {
    ViolationReport rep;
    scan_box(box, n_target, [&](double t, double y, double z) {
        const double excess = std::abs(evaluate(h, t, y, z)) - evaluate(envelope, t, y, z);
        if (excess > rep.worst) {
            rep.worst = excess;
            rep.t_at = t;
            rep.y_at = y;
            rep.z_at = z;
        }
    });
    rep.ok = rep.worst <= 0.0;
    rep.worst = std::max(rep.worst, 0.0);
    return rep;
}

} // namespace

ViolationReport check_A1(const GeneratorSpec& h, const DeterministicProcessSpec& alpha,
                         const DeterministicProcessSpec& beta, const ScalarFunctionSpec& f,
                         const SampleBox& box, std::size_t n_target) {
    const auto env = build_envelope_generators(alpha, beta, DeterministicProcessSpec(), f);
    return check_growth(h, env.g_env, box, n_target);
}

ViolationReport check_A3(const GeneratorSpec& h, const DeterministicProcessSpec& alpha,
                         const DeterministicProcessSpec& beta,
                         const DeterministicProcessSpec& theta, const ScalarFunctionSpec& f,
                         const SampleBox& box, std::size_t n_target) {
    const auto env = build_envelope_generators(alpha, beta, theta, f);
    return check_growth(h, env.h_env, box, n_target);
}

std::string GirsanovControl::label() const {
    std::string s;
    for (int v : pattern)
        s += (v < 0 ? '-' : (v > 0 ? '+' : '0'));
    return s;
}

double GirsanovControl::value(double t, double T) const {
    if (pattern.empty())
        return 0.0;
    const double frac = std::min(std::max(t / T, 0.0), 1.0);
    std::size_t i = static_cast<std::size_t>(frac * static_cast<double>(pattern.size()));
    if (i >= pattern.size())
        i = pattern.size() - 1;
    return static_cast<double>(pattern[i]);
}

std::vector<GirsanovControl> all_sign_patterns(int k) {
    if (k < 1 || k > 10)
        throw ConfigError("sign-pattern family needs 1 <= k <= 10");
    std::size_t total = 1;
    for (int i = 0; i < k; ++i)
        total *= 3;
    std::vector<GirsanovControl> out;
    out.reserve(total);
    for (std::size_t code = 0; code < total; ++code) {
        GirsanovControl c;
        c.pattern.resize(static_cast<std::size_t>(k));
        std::size_t rem = code;
        for (int i = 0; i < k; ++i) {
            c.pattern[static_cast<std::size_t>(i)] = static_cast<int>(rem % 3) - 1;
            rem /= 3;
        }
        out.push_back(std::move(c));
    }
    return out;
}

namespace {

// shared Brownian partition for moment estimates: uniform nsub plus theta's
// interior breakpoints, so a vanishing theta changes nothing
std::vector<double> moment_partition(double T, int nsub, const DeterministicProcessSpec& theta) {
    std::vector<double> edges;
    for (int i = 0; i <= nsub; ++i)
        edges.push_back(T * static_cast<double>(i) / static_cast<double>(nsub));
    for (double b : theta.breakpoints)
        if (b > 0.0 && b < T)
            edges.push_back(b);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [T](double p, double q) { return q - p <= T * 1e-14; }),
                edges.end());
    return edges;
}

bool doubling_divergence(const std::vector<double>& values) {
    if (values.size() < 64)
        return false;
    std::vector<std::size_t> sizes{values.size()};
    while (sizes.back() / 2 >= 32)
        sizes.push_back(sizes.back() / 2);
    std::reverse(sizes.begin(), sizes.end());
    double prev_mean = 0.0;
    bool have_prev = false;
    int growths = 0;
    double acc = 0.0;
    std::size_t done = 0;
    for (std::size_t s : sizes) {
        for (; done < s; ++done)
            acc += values[done];
        const double mean = acc / static_cast<double>(s);
        if (have_prev && prev_mean > 0.0 && mean >= 2.0 * prev_mean)
            ++growths;
        prev_mean = mean;
        have_prev = true;
    }
    return growths >= 2;
}

AssumptionEstimate summarize(const std::vector<double>& values) {
    AssumptionEstimate e;
    e.count = values.size();
    double acc = 0.0;
    for (double v : values)
        acc += v;
    e.mean = acc / static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values)
        var += (v - e.mean) * (v - e.mean);
    var /= static_cast<double>(values.size() > 1 ? values.size() - 1 : 1);
    e.stderr_ = std::sqrt(var / static_cast<double>(values.size()));
    e.divergence_flag = doubling_divergence(values);
    return e;
}

struct MomentDraws {
    std::vector<double> edges;              // partition of [0, T]
    std::vector<std::vector<double>> dW;    // [sample][segment]
    std::vector<double> w_T;
    std::vector<double> xi;                 // inflated terminal per sample
};

MomentDraws draw_moment_samples(const ScalarFunctionSpec&, const TerminalSpec& ts,
                                const DeterministicProcessSpec& alpha,
                                const DeterministicProcessSpec& beta, std::size_t m,
                                std::uint64_t seed, int nsub,
                                const DeterministicProcessSpec& theta) {
    if (m < 64)
        throw ConfigError("moment estimate needs at least 64 samples");
    MomentDraws d;
    d.edges = moment_partition(ts.T, nsub, theta);
    const std::size_t L = d.edges.size() - 1;
    d.dW.assign(m, std::vector<double>(L, 0.0));
    d.w_T.resize(m);
    d.xi.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        NormalStream stream(seed, j);
        double w = 0.0;
        for (std::size_t k = 0; k < L; ++k) {
            const double h = d.edges[k + 1] - d.edges[k];
            d.dW[j][k] = std::sqrt(h) * stream.next();
            w += d.dW[j][k];
        }
        d.w_T[j] = w;
        d.xi[j] = xi_alpha_beta(ts, alpha, beta, w, XiPart::abs);
    }
    return d;
}

ZvonkinTransform transform_for_draws(const ScalarFunctionSpec& f, const MomentDraws& d,
                                     const MomentOptions& opts) {
    double need = 1.0;
    for (double x : d.xi)
        need = std::max(need, std::abs(x));
    double R = opts.radius > 0.0 ? opts.radius : 1.05 * need;
    if (R < need)
        throw EnlargeRadius(1.05 * need);
    return build_u(f, R, opts.n_nodes);
}

} // namespace

A2Report estimate_A2(const ScalarFunctionSpec& f, const TerminalSpec& ts,
                     const DeterministicProcessSpec& alpha, const DeterministicProcessSpec& beta,
                     std::size_t m, std::uint64_t seed, const MomentOptions& opts) {
    const auto d = draw_moment_samples(f, ts, alpha, beta, m, seed, opts.nsub,
                                       DeterministicProcessSpec());
    const auto u = transform_for_draws(f, d, opts);
    std::vector<double> vals(m);
    for (std::size_t j = 0; j < m; ++j)
        vals[j] = eval_u(u, d.xi[j]);
    A2Report rep;
    rep.estimate = summarize(vals);
    rep.radius_used = u.radius;
    if (opts.p) {
        double acc = 0.0;
        for (double v : vals)
            acc += std::pow(v, *opts.p);
        rep.p_moment = acc / static_cast<double>(m);
    }
    return rep;
}

A4Report estimate_A4(const ScalarFunctionSpec& f, const TerminalSpec& ts,
                     const DeterministicProcessSpec& alpha, const DeterministicProcessSpec& beta,
                     const DeterministicProcessSpec& theta,
                     const std::vector<GirsanovControl>& family, std::size_t m,
                     std::uint64_t seed, const MomentOptions& opts) {
    if (family.empty())
        throw ConfigError("control family must not be empty");
    const auto d = draw_moment_samples(f, ts, alpha, beta, m, seed, opts.nsub, theta);
    const auto u = transform_for_draws(f, d, opts);
    std::vector<double> base(m);
    for (std::size_t j = 0; j < m; ++j)
        base[j] = eval_u(u, d.xi[j]);

    const std::size_t L = d.edges.size() - 1;
    A4Report rep;
    rep.radius_used = u.radius;
    std::vector<double> weighted(m);
    std::vector<double> best_vals;
    for (std::size_t ci = 0; ci < family.size(); ++ci) {
        const auto& ctrl = family[ci];
        for (std::size_t j = 0; j < m; ++j) {
            double log_gamma = 0.0;
            for (std::size_t k = 0; k < L; ++k) {
                const double tk = d.edges[k];
                const double h = d.edges[k + 1] - d.edges[k];
                const double tp = theta.value(tk) * ctrl.value(tk, ts.T);
                log_gamma += tp * d.dW[j][k] - 0.5 * tp * tp * h;
            }
            weighted[j] = std::exp(log_gamma) * base[j];
        }
        const auto est = summarize(weighted);
        double gm = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            double log_gamma = 0.0;
            for (std::size_t k = 0; k < L; ++k) {
                const double tk = d.edges[k];
                const double h = d.edges[k + 1] - d.edges[k];
                const double tp = theta.value(tk) * ctrl.value(tk, ts.T);
                log_gamma += tp * d.dW[j][k] - 0.5 * tp * tp * h;
            }
            gm += std::exp(log_gamma);
        }
        gm /= static_cast<double>(m);
        rep.table.push_back({ci, ctrl.label(), est.mean, est.stderr_, gm});
        if (ci == 0 || est.mean > rep.best.mean) {
            rep.best = est;
            rep.best_control = ci;
            best_vals = weighted;
        }
    }
    rep.best.divergence_flag = doubling_divergence(best_vals);
    return rep;
}

} // namespace qbsde
