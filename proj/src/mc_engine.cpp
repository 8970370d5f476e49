#include "qbsde/mc_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qbsde/errors.hpp"
#include "qbsde/rng.hpp"

namespace qbsde {

PathBundle simulate_paths(std::uint64_t seed, std::size_t M, const TimeGrid& grid,
                          bool antithetic) {
    if (M == 0)
        throw ConfigError("simulate_paths needs M >= 1");
    if (grid.N < 1 || !(grid.T > 0.0))
        throw ConfigError("simulate_paths needs N >= 1 and T > 0");
    if (antithetic && M % 2 != 0)
        throw ConfigError("antithetic sampling needs an even path count");
    PathBundle b;
    b.grid = grid;
    b.M = M;
    b.master_seed = seed;
    b.antithetic = antithetic;
    const double sh = std::sqrt(grid.h());
    b.dW.assign(static_cast<std::size_t>(grid.N), std::vector<double>(M, 0.0));
    for (std::size_t j = 0; j < M; ++j) {
        if (antithetic && j % 2 == 1) {
            for (int i = 0; i < grid.N; ++i)
                b.dW[static_cast<std::size_t>(i)][j] = -b.dW[static_cast<std::size_t>(i)][j - 1];
            continue;
        }
        NormalStream stream(seed, antithetic ? j / 2 : j);
        for (int i = 0; i < grid.N; ++i)
            b.dW[static_cast<std::size_t>(i)][j] = sh * stream.next();
    }
    return b;
}

std::vector<std::vector<double>> brownian_values(const PathBundle& bundle) {
    const std::size_t N = static_cast<std::size_t>(bundle.grid.N);
    std::vector<std::vector<double>> w(N + 1, std::vector<double>(bundle.M, 0.0));
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < bundle.M; ++j)
            w[i + 1][j] = w[i][j] + bundle.dW[i][j];
    return w;
}

std::vector<double> regress_conditional(const std::vector<double>& values,
                                        const std::vector<double>& states,
                                        const RegressionBasis& basis) {
    const std::size_t M = values.size();
    if (M == 0 || states.size() != M)
        throw ConfigError("regression needs matching non-empty values/states");
    std::size_t K = basis.bins;
    if (K == 0)
        K = static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(M))));
    K = std::max<std::size_t>(1, std::min(K, M));

    std::vector<std::size_t> order(M);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&states](std::size_t a, std::size_t b) {
        return states[a] < states[b];
    });

    // equiprobable bin edges on the sorted order, merging bins that would
    // fall under the minimum occupancy
    std::vector<std::size_t> edges;
    edges.push_back(0);
    for (std::size_t k = 1; k < K; ++k) {
        const std::size_t e = k * M / K;
        if (e - edges.back() >= std::max<std::size_t>(1, basis.min_bin))
            edges.push_back(e);
    }
    while (edges.size() > 1 && M - edges.back() < std::max<std::size_t>(1, basis.min_bin))
        edges.pop_back();
    edges.push_back(M);

    std::vector<double> out(M, 0.0);
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
        const std::size_t lo = edges[b];
        const std::size_t hi = edges[b + 1];
        const double n = static_cast<double>(hi - lo);
        double sx = 0.0, sv = 0.0;
        for (std::size_t r = lo; r < hi; ++r) {
            sx += states[order[r]];
            sv += values[order[r]];
        }
        const double mx = sx / n;
        const double mv = sv / n;
        double cxx = 0.0, cxv = 0.0;
        for (std::size_t r = lo; r < hi; ++r) {
            const double dx = states[order[r]] - mx;
            cxx += dx * dx;
            cxv += dx * (values[order[r]] - mv);
        }
        const double slope = (cxx > 1e-28 * n * (1.0 + mx * mx)) ? cxv / cxx : 0.0;
        for (std::size_t r = lo; r < hi; ++r)
            out[order[r]] = mv + slope * (states[order[r]] - mx);
    }
    return out;
}

double origin_value(const SolutionSurface& s) {
    if (s.kind == SolutionSurface::Kind::path_indexed)
        return s.y.front().front();
    const auto& xs = s.states;
    const auto& row = s.y.front();
    if (xs.front() > 0.0 || xs.back() < 0.0)
        throw RangeError("surface does not cover the origin", xs.front(), xs.back());
    std::size_t lo = 0, hi = xs.size() - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        (xs[mid] <= 0.0 ? lo : hi) = mid;
    }
    const double t = (0.0 - xs[lo]) / (xs[lo + 1] - xs[lo]);
    return row[lo] + t * (row[lo + 1] - row[lo]);
}

SolutionSurface lsmc_solve(const GeneratorSpec& h, const TerminalSpec& ts,
                           const EnvelopeBounds& env, const PathBundle& bundle,
                           const RegressionBasis& basis) {
    const std::size_t N = static_cast<std::size_t>(bundle.grid.N);
    const std::size_t M = bundle.M;
    if (std::abs(bundle.grid.T - ts.T) > 1e-12 * (1.0 + ts.T))
        throw ConfigError("path grid horizon disagrees with the terminal horizon");
    if (env.times.size() != N + 1)
        throw ConfigError("envelope grid does not match the path grid");
    for (std::size_t i = 0; i <= N; ++i)
        if (std::abs(env.times[i] - bundle.grid.t(static_cast<int>(i))) > 1e-10 * (1.0 + ts.T))
            throw ConfigError("envelope grid does not match the path grid");

    SolutionSurface s;
    s.kind = SolutionSurface::Kind::path_indexed;
    s.grid = bundle.grid;
    s.seed = bundle.master_seed;
    s.w = brownian_values(bundle);

    double wmin = 0.0, wmax = 0.0;
    for (const auto& row : s.w)
        for (double x : row) {
            wmin = std::min(wmin, x);
            wmax = std::max(wmax, x);
        }
    if (wmin < env.states.front() || wmax > env.states.back())
        throw ConfigError("envelope state range [" + std::to_string(env.states.front()) + ", " +
                          std::to_string(env.states.back()) + "] does not cover the sampled paths [" +
                          std::to_string(wmin) + ", " + std::to_string(wmax) + "]");

    s.y.assign(N + 1, std::vector<double>(M, 0.0));
    s.z.assign(N + 1, std::vector<double>(M, 0.0));
    for (std::size_t j = 0; j < M; ++j)
        s.y[N][j] = evaluate(ts.g, s.w[N][j]);

    const double dt = bundle.grid.h();
    std::size_t clamped = 0;
    std::vector<double> target(M), covar(M);
    for (std::size_t i = N; i-- > 0;) {
        for (std::size_t j = 0; j < M; ++j)
            target[j] = s.y[i + 1][j];
        const auto cond = regress_conditional(target, s.w[i], basis);
        // centering by the fitted mean leaves the covariance estimate unbiased
        // (the increment is independent of W_i) and strips the dominant
        // mean^2 * dt term from its variance
        for (std::size_t j = 0; j < M; ++j)
            covar[j] = (target[j] - cond[j]) * bundle.dW[i][j];
        const auto zraw = regress_conditional(covar, s.w[i], basis);
        const double t_i = bundle.grid.t(static_cast<int>(i));
        for (std::size_t j = 0; j < M; ++j) {
            const double zi = zraw[j] / dt;
            const double cand = cond[j] + dt * evaluate(h, t_i, cond[j], zi);
            const double lo = env.eval_lower(i, s.w[i][j]);
            const double hi = env.eval_upper(i, s.w[i][j]);
            double yi = cand;
            if (cand < lo) {
                yi = lo;
                ++clamped;
            } else if (cand > hi) {
                yi = hi;
                ++clamped;
            }
            s.y[i][j] = yi;
            s.z[i][j] = zi;
        }
        if (i == 0) {
            double mean = 0.0;
            for (double v : target)
                mean += v;
            mean /= static_cast<double>(M);
            double var = 0.0;
            for (double v : target)
                var += (v - mean) * (v - mean);
            var /= static_cast<double>(M > 1 ? M - 1 : 1);
            s.y0_stderr = std::sqrt(var / static_cast<double>(M));
        }
    }
    s.z[N] = s.z[N - 1];
    s.clamp_fraction = static_cast<double>(clamped) / static_cast<double>(M * N);
    return s;
}

} // namespace qbsde
