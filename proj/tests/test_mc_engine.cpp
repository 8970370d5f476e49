#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "qbsde/closed_form.hpp"
#include "qbsde/errors.hpp"
#include "qbsde/mc_engine.hpp"
#include "qbsde/rng.hpp"

using namespace qbsde;

TEST_CASE("path simulation is deterministic in the seed") {
    const TimeGrid grid{1.0, 10};
    const auto a = simulate_paths(123, 64, grid);
    const auto b = simulate_paths(123, 64, grid);
    REQUIRE(a.dW.size() == b.dW.size());
    for (std::size_t i = 0; i < a.dW.size(); ++i)
        for (std::size_t j = 0; j < 64; ++j)
            CHECK(a.dW[i][j] == b.dW[i][j]);

    const auto c = simulate_paths(124, 64, grid);
    bool differs = false;
    for (std::size_t i = 0; i < a.dW.size() && !differs; ++i)
        for (std::size_t j = 0; j < 64 && !differs; ++j)
            differs = a.dW[i][j] != c.dW[i][j];
    CHECK(differs);
}

TEST_CASE("antithetic pairing mirrors the even path exactly") {
    const TimeGrid grid{1.0, 8};
    const auto b = simulate_paths(5, 16, grid, true);
    for (std::size_t i = 0; i < b.dW.size(); ++i)
        for (std::size_t j = 1; j < 16; j += 2)
            CHECK(b.dW[i][j] == -b.dW[i][j - 1]);
    CHECK_THROWS_AS(simulate_paths(5, 15, grid, true), ConfigError);
}

TEST_CASE("brownian values cumulate the increments from zero") {
    const TimeGrid grid{2.0, 5};
    const auto b = simulate_paths(9, 7, grid);
    const auto w = brownian_values(b);
    REQUIRE(w.size() == 6);
    for (std::size_t j = 0; j < 7; ++j) {
        CHECK(w[0][j] == 0.0);
        for (std::size_t i = 0; i < 5; ++i)
            CHECK(w[i + 1][j] == doctest::Approx(w[i][j] + b.dW[i][j]).epsilon(1e-15));
    }
}

TEST_CASE("path streams are mean-centered and uncorrelated across neighbours") {
    // regression guard: stream states linear in the path index made adjacent
    // paths near-copies of each other and inflated the effective stderr
    const std::size_t M = 40000;
    const TimeGrid grid{1.0, 1};
    for (std::uint64_t seed : {11ull, 17ull, 99ull}) {
        const auto b = simulate_paths(seed, M, grid);
        const auto& x = b.dW[0];
        double mean = 0.0;
        for (double v : x)
            mean += v;
        mean /= static_cast<double>(M);
        CHECK(std::abs(mean) <= 4.0 / std::sqrt(static_cast<double>(M)));

        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j + 1 < M; ++j)
            num += (x[j] - mean) * (x[j + 1] - mean);
        for (double v : x)
            den += (v - mean) * (v - mean);
        CHECK(std::abs(num / den) <= 4.0 / std::sqrt(static_cast<double>(M)));
    }
}

TEST_CASE("binned regression reproduces affine and constant targets") {
    const std::size_t M = 5000;
    std::vector<double> states(M), values(M);
    NormalStream rng(31, 0);
    for (std::size_t j = 0; j < M; ++j) {
        states[j] = -2.0 + 4.0 * rng.uniform();
        values[j] = 3.0 * states[j] - 1.0;
    }
    const auto fit = regress_conditional(values, states, {});
    for (std::size_t j = 0; j < M; ++j)
        CHECK(fit[j] == doctest::Approx(values[j]).epsilon(1e-9));

    std::vector<double> flat(M, 2.5);
    const auto cfit = regress_conditional(flat, states, {});
    for (std::size_t j = 0; j < M; ++j)
        CHECK(cfit[j] == doctest::Approx(2.5).epsilon(1e-12));

    CHECK_THROWS_AS(regress_conditional(values, std::vector<double>(M - 1, 0.0), {}), ConfigError);
}

namespace {

EnvelopeBounds envelope_for(const ScalarFunctionSpec& f, const TerminalSpec& ts,
                            const TimeGrid& grid, double X) {
    const auto zero = DeterministicProcessSpec::make_constant(0.0);
    const double R = envelope_radius(ts, zero, zero, -X, X);
    const auto u = build_u(f, R, 4096);
    std::vector<double> times(static_cast<std::size_t>(grid.N) + 1);
    for (int i = 0; i <= grid.N; ++i)
        times[static_cast<std::size_t>(i)] = grid.t(i);
    std::vector<double> states;
    const std::size_t n = 241;
    for (std::size_t k = 0; k < n; ++k)
        states.push_back(-X + 2.0 * X * static_cast<double>(k) / static_cast<double>(n - 1));
    return envelope_bounds(u, ts, zero, zero, times, states);
}

} // namespace

TEST_CASE("backward scheme without a driver recovers the martingale") {
    const TimeGrid grid{1.0, 25};
    const TerminalSpec ts{ScalarFunctionSpec::identity(), 1.0};
    const auto env = envelope_for(ScalarFunctionSpec::make_constant(0.0), ts, grid, 7.0);
    const auto bundle = simulate_paths(2024, 20000, grid, true);

    const auto s = lsmc_solve(GeneratorSpec{}, ts, env, bundle);
    REQUIRE(s.kind == SolutionSurface::Kind::path_indexed);
    CHECK(std::abs(origin_value(s)) <= 1e-2);
    CHECK(s.y0_stderr > 0.0);
    CHECK(s.clamp_fraction >= 0.0);
    CHECK(s.clamp_fraction <= 1.0);

    // interior values are clamped into the envelope by construction
    const std::size_t N = static_cast<std::size_t>(grid.N);
    for (std::size_t i = 0; i < N; i += 6)
        for (std::size_t j = 0; j < bundle.M; j += 997) {
            CHECK(s.y[i][j] >= env.eval_lower(i, s.w[i][j]) - 1e-12);
            CHECK(s.y[i][j] <= env.eval_upper(i, s.w[i][j]) + 1e-12);
        }
}

TEST_CASE("backward scheme with the quadratic driver hits the known origin value") {
    const TimeGrid grid{1.0, 25};
    const TerminalSpec ts{ScalarFunctionSpec::identity(), 1.0};
    const auto env = envelope_for(ScalarFunctionSpec::make_constant(0.5), ts, grid, 7.0);
    const auto bundle = simulate_paths(77, 20000, grid, true);

    GeneratorSpec h;
    h.terms.push_back(GeneratorTerm::f_zsq(ScalarFunctionSpec::make_constant(0.5)));
    const auto s = lsmc_solve(h, ts, env, bundle);
    CHECK(origin_value(s) == doctest::Approx(0.5).epsilon(6e-2));
}

TEST_CASE("grid and coverage guards") {
    const TimeGrid grid{1.0, 25};
    const TerminalSpec ts{ScalarFunctionSpec::identity(), 1.0};
    auto env = envelope_for(ScalarFunctionSpec::make_constant(0.0), ts, grid, 7.0);
    const auto bundle = simulate_paths(2024, 2000, grid, true);

    auto wrong_times = env;
    wrong_times.times.pop_back();
    wrong_times.lower.pop_back();
    wrong_times.upper.pop_back();
    CHECK_THROWS_AS(lsmc_solve(GeneratorSpec{}, ts, wrong_times, bundle), ConfigError);

    const TerminalSpec other{ScalarFunctionSpec::identity(), 2.0};
    CHECK_THROWS_AS(lsmc_solve(GeneratorSpec{}, other, env, bundle), ConfigError);

    const auto narrow = envelope_for(ScalarFunctionSpec::make_constant(0.0),
                                     TerminalSpec{ScalarFunctionSpec::identity(), 1.0}, grid, 0.5);
    CHECK_THROWS_AS(lsmc_solve(GeneratorSpec{}, ts, narrow, bundle), ConfigError);
}

TEST_CASE("origin lookup on state surfaces") {
    SolutionSurface s;
    s.kind = SolutionSurface::Kind::state_indexed;
    s.states = {-1.0, 1.0};
    s.y = {{0.0, 2.0}};
    CHECK(origin_value(s) == doctest::Approx(1.0));

    s.states = {1.0, 2.0};
    s.y = {{0.0, 2.0}};
    CHECK_THROWS_AS(origin_value(s), RangeError);
}
