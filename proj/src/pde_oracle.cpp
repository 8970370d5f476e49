#include "qbsde/pde_oracle.hpp"

#include <algorithm>
#include <cmath>

#include "qbsde/errors.hpp"

namespace qbsde {

namespace {

double grid_hx(const PdeGrid& g) { return 2.0 * g.X / static_cast<double>(g.nx - 1); }

double max_terminal_gradient(const ScalarFunctionSpec& g, double X, int nx) {
    const double hx = 2.0 * X / static_cast<double>(nx - 1);
    double worst = 0.0;
    double prev = evaluate(g, -X);
    for (int j = 1; j < nx; ++j) {
        const double x = -X + hx * static_cast<double>(j);
        const double v = evaluate(g, x);
        worst = std::max(worst, std::abs(v - prev) / hx);
        prev = v;
    }
    return worst;
}

int nt_from_bound(double T, double hx, double C, double ux_scale) {
    const double bound = hx * hx / (1.0 + C * ux_scale * hx);
    return static_cast<int>(std::ceil(1.05 * T / bound));
}

} // namespace

int stable_nt(double T, double X, int nx, double C, double ux_scale) {
    if (nx < 3 || !(X > 0.0) || !(T > 0.0))
        throw ConfigError("stable_nt needs nx >= 3, X > 0, T > 0");
    const double hx = 2.0 * X / static_cast<double>(nx - 1);
    return nt_from_bound(T, hx, C, ux_scale);
}

SolutionSurface solve_pde(const GeneratorSpec& h, const TerminalSpec& ts, const PdeGrid& grid,
                          double quad_C, const EnvelopeBounds* env) {
    if (grid.nx < 3 || !(grid.X > 0.0))
        throw ConfigError("solve_pde needs nx >= 3 and X > 0");
    const double hx = grid_hx(grid);
    const double ux0 = max_terminal_gradient(ts.g, grid.X, grid.nx);
    const int nt_min = nt_from_bound(ts.T, hx, quad_C, ux0);
    int nt = grid.nt > 0 ? grid.nt : nt_min;
    if (nt < nt_min)
        throw StabilityError("time step violates the explicit stability bound", nt_min);
    const double ht = ts.T / static_cast<double>(nt);

    const bool use_env = grid.boundary == PdeGrid::Boundary::dirichlet_from_envelope;
    if (use_env) {
        if (env == nullptr)
            throw ConfigError("dirichlet_from_envelope needs envelope bounds");
        if (env->times.size() != static_cast<std::size_t>(nt) + 1)
            throw ConfigError("envelope grid does not match the pde time lattice");
    }

    SolutionSurface s;
    s.kind = SolutionSurface::Kind::state_indexed;
    s.grid = TimeGrid{ts.T, nt};
    s.states.resize(static_cast<std::size_t>(grid.nx));
    for (int j = 0; j < grid.nx; ++j)
        s.states[static_cast<std::size_t>(j)] = -grid.X + hx * static_cast<double>(j);

    const std::size_t NX = s.states.size();
    s.y.assign(static_cast<std::size_t>(nt) + 1, std::vector<double>(NX, 0.0));
    s.z.assign(static_cast<std::size_t>(nt) + 1, std::vector<double>(NX, 0.0));

    double scale0 = 1.0;
    for (std::size_t j = 0; j < NX; ++j) {
        s.y[static_cast<std::size_t>(nt)][j] = evaluate(ts.g, s.states[j]);
        scale0 = std::max(scale0, std::abs(s.y[static_cast<std::size_t>(nt)][j]));
    }

    for (int i = nt; i-- > 0;) {
        const auto& up = s.y[static_cast<std::size_t>(i) + 1];
        auto& cur = s.y[static_cast<std::size_t>(i)];
        const double t_up = ts.T * static_cast<double>(i + 1) / static_cast<double>(nt);
        double worst_ux = 0.0;
        for (std::size_t j = 0; j < NX; ++j) {
            double lap, dz;
            if (j == 0) {
                lap = 0.0;
                dz = (up[1] - up[0]) / hx;
            } else if (j + 1 == NX) {
                lap = 0.0;
                dz = (up[NX - 1] - up[NX - 2]) / hx;
            } else {
                lap = (up[j + 1] - 2.0 * up[j] + up[j - 1]) / (hx * hx);
                dz = (up[j + 1] - up[j - 1]) / (2.0 * hx);
            }
            worst_ux = std::max(worst_ux, std::abs(dz));
            cur[j] = up[j] + ht * (0.5 * lap + evaluate(h, t_up, up[j], dz));
        }
        if (use_env)
            for (std::size_t j = 0; j < NX; ++j) {
                const double lo = env->eval_lower(static_cast<std::size_t>(i), s.states[j]);
                const double hi = env->eval_upper(static_cast<std::size_t>(i), s.states[j]);
                cur[j] = std::min(std::max(cur[j], lo), hi);
            }
        double worst = 0.0;
        for (double v : cur)
            worst = std::max(worst, std::abs(v));
        if (!(worst <= 1e6 * scale0)) {
            const int suggested = std::max(2 * nt, nt_from_bound(ts.T, hx, quad_C, worst_ux));
            throw StabilityError("explicit scheme is blowing up", suggested);
        }
    }

    for (std::size_t i = 0; i <= static_cast<std::size_t>(nt); ++i) {
        const auto& row = s.y[i];
        auto& zr = s.z[i];
        zr[0] = (row[1] - row[0]) / hx;
        zr[NX - 1] = (row[NX - 1] - row[NX - 2]) / hx;
        for (std::size_t j = 1; j + 1 < NX; ++j)
            zr[j] = (row[j + 1] - row[j - 1]) / (2.0 * hx);
    }
    return s;
}

double discrete_residual(const SolutionSurface& s, const GeneratorSpec& h) {
    if (s.kind != SolutionSurface::Kind::state_indexed)
        throw ConfigError("discrete residual needs a state-indexed surface");
    const std::size_t nt = s.y.size() - 1;
    const std::size_t NX = s.states.size();
    const double ht = s.grid.T / static_cast<double>(nt);
    const double hx = s.states[1] - s.states[0];
    double worst = 0.0;
    for (std::size_t i = 0; i < nt; ++i) {
        const auto& up = s.y[i + 1];
        const auto& cur = s.y[i];
        const double t_up = s.grid.T * static_cast<double>(i + 1) / static_cast<double>(nt);
        for (std::size_t j = 1; j + 1 < NX; ++j) {
            const double lap = (up[j + 1] - 2.0 * up[j] + up[j - 1]) / (hx * hx);
            const double dz = (up[j + 1] - up[j - 1]) / (2.0 * hx);
            const double resid =
                (cur[j] - up[j]) / ht - 0.5 * lap - evaluate(h, t_up, up[j], dz);
            worst = std::max(worst, std::abs(resid));
        }
    }
    return worst;
}

namespace {

double surface_at(const SolutionSurface& s, double t, double x, bool& outside) {
    const std::size_t nt = s.y.size() - 1;
    const double ht = s.grid.T / static_cast<double>(nt);
    double fi = t / ht;
    std::size_t i0 = static_cast<std::size_t>(std::floor(fi));
    if (i0 >= nt)
        i0 = nt - (nt > 0 ? 1 : 0);
    const double wt = std::min(std::max(fi - static_cast<double>(i0), 0.0), 1.0);
    const auto& xs = s.states;
    if (x < xs.front() || x > xs.back()) {
        outside = true;
        return 0.0;
    }
    outside = false;
    std::size_t lo = 0, hi = xs.size() - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        (xs[mid] <= x ? lo : hi) = mid;
    }
    const double wx = (x - xs[lo]) / (xs[lo + 1] - xs[lo]);
    const double v0 = s.y[i0][lo] * (1.0 - wx) + s.y[i0][lo + 1] * wx;
    const double v1 = s.y[i0 + 1][lo] * (1.0 - wx) + s.y[i0 + 1][lo + 1] * wx;
    return v0 * (1.0 - wt) + v1 * wt;
}

} // namespace

double surface_value(const SolutionSurface& s, double t, double x) {
    if (s.kind != SolutionSurface::Kind::state_indexed)
        throw ConfigError("surface_value needs a state-indexed surface");
    bool outside = false;
    const double v = surface_at(s, t, x, outside);
    if (outside)
        throw RangeError("surface queried outside its state range", s.states.front(),
                         s.states.back());
    return v;
}

CompareReport compare(const SolutionSurface& a, const SolutionSurface& b, CompareNorm norm) {
    CompareReport rep;
    if (std::abs(a.grid.T - b.grid.T) > 1e-12 * (1.0 + a.grid.T))
        throw ConfigError("compared surfaces must share the horizon");
    if (norm == CompareNorm::sup_at_origin) {
        rep.error = std::abs(origin_value(a) - origin_value(b));
        rep.points = 1;
        return rep;
    }
    if (a.kind != SolutionSurface::Kind::state_indexed ||
        b.kind != SolutionSurface::Kind::state_indexed)
        throw ConfigError("sup_lattice comparison needs state-indexed surfaces");
    const std::size_t nt = a.y.size() - 1;
    for (std::size_t i = 0; i <= nt; ++i) {
        const double t = a.grid.T * static_cast<double>(i) / static_cast<double>(nt);
        for (std::size_t j = 0; j < a.states.size(); ++j) {
            bool outside = false;
            const double bv = surface_at(b, t, a.states[j], outside);
            if (outside) {
                ++rep.skipped;
                continue;
            }
            ++rep.points;
            rep.error = std::max(rep.error, std::abs(a.y[i][j] - bv));
        }
    }
    return rep;
}

} // namespace qbsde
