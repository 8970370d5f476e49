#include <cmath>
#include <vector>

#include "doctest.h"
#include "qbsde/errors.hpp"
#include "qbsde/function_model.hpp"

using namespace qbsde;

TEST_CASE("evaluation of the primitive kinds") {
    CHECK(evaluate(ScalarFunctionSpec::make_constant(0.5), 7.0) == 0.5);
    CHECK(evaluate(ScalarFunctionSpec::polynomial({1.0, 0.0, 2.0}), 1.5) ==
          doctest::Approx(5.5).epsilon(1e-15));
    CHECK(evaluate(ScalarFunctionSpec::identity(), -2.25) == -2.25);
    CHECK(evaluate(ScalarFunctionSpec::exp_affine(2.0, -1.0), 1.0) ==
          doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-15));
    CHECK(evaluate(ScalarFunctionSpec::trig(2.0, 3.0, 0.5), 0.25) ==
          doctest::Approx(2.0 * std::cos(3.0 * 0.25 + 0.5)).epsilon(1e-15));
    // a + b|y| + c|y||ln|y||
    CHECK(evaluate(ScalarFunctionSpec::log_growth(0.1, 0.2, 0.3), -2.0) ==
          doctest::Approx(0.1 + 0.4 + 0.6 * std::log(2.0)).epsilon(1e-14));
    CHECK(evaluate(ScalarFunctionSpec::log_growth(0.1, 0.2, 0.3), 0.0) == doctest::Approx(0.1));
}

TEST_CASE("indicator halfline closes the right branch at the threshold") {
    const auto f = ScalarFunctionSpec::indicator_halfline(0.0, 0.0, 1.0);
    CHECK(evaluate(f, -1e-12) == 0.0);
    CHECK(evaluate(f, 0.0) == 1.0);
    CHECK(evaluate(f, 2.0) == 1.0);
    CHECK_FALSE(f.continuous);
}

TEST_CASE("piecewise linear interpolates and holds beyond the knots") {
    const auto f = ScalarFunctionSpec::piecewise_linear({0.0, 1.0, 3.0}, {0.0, 2.0, 1.0});
    CHECK(evaluate(f, 0.5) == doctest::Approx(1.0));
    CHECK(evaluate(f, 2.0) == doctest::Approx(1.5));
    CHECK(evaluate(f, -4.0) == 0.0);
    CHECK(evaluate(f, 9.0) == 1.0);
    CHECK_THROWS_AS(ScalarFunctionSpec::piecewise_linear({1.0, 1.0}, {0.0, 0.0}), ConfigError);
}

TEST_CASE("composite kinds nest") {
    const auto s = ScalarFunctionSpec::sum(
        {ScalarFunctionSpec::make_constant(1.0), ScalarFunctionSpec::identity()});
    CHECK(evaluate(s, 2.0) == doctest::Approx(3.0));
    const auto m = ScalarFunctionSpec::max_of({s, ScalarFunctionSpec::make_constant(2.5)});
    CHECK(evaluate(m, 2.0) == doctest::Approx(3.0));
    CHECK(evaluate(m, 0.0) == doctest::Approx(2.5));
    const auto n = ScalarFunctionSpec::min_of({s, ScalarFunctionSpec::make_constant(2.5)});
    CHECK(evaluate(n, 2.0) == doctest::Approx(2.5));
    CHECK(evaluate(ScalarFunctionSpec::scale(-2.0, s), 2.0) == doctest::Approx(-6.0));
    const auto clipped = ScalarFunctionSpec::clipped(ScalarFunctionSpec::identity(), -1.0, 2.0);
    CHECK(evaluate(clipped, -5.0) == -1.0);
    CHECK(evaluate(clipped, 0.5) == 0.5);
    CHECK(evaluate(clipped, 5.0) == 2.0);
}

TEST_CASE("integrate_abs matches closed forms") {
    CHECK(integrate_abs(ScalarFunctionSpec::exp_affine(1.0, 1.0), 1.0) ==
          doctest::Approx(2.3504023872876028).epsilon(1e-9)); // e - 1/e
    CHECK(integrate_abs(ScalarFunctionSpec::make_constant(0.5), 2.0) ==
          doctest::Approx(2.0).epsilon(1e-10));
    CHECK(integrate_abs(ScalarFunctionSpec::indicator_halfline(0.0, 0.0, 1.0), 3.0) ==
          doctest::Approx(3.0).epsilon(1e-9));
    // sign change inside the range: int_{-1}^{1} |y| dy
    CHECK(integrate_abs(ScalarFunctionSpec::identity(), 1.0) ==
          doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("breakpoints collect discontinuity candidates in range") {
    const auto f = ScalarFunctionSpec::indicator_halfline(0.5, 0.0, 1.0);
    const auto bp = breakpoints_in(f, -1.0, 1.0);
    REQUIRE(bp.size() == 1);
    CHECK(bp[0] == 0.5);
    CHECK(breakpoints_in(f, 0.6, 1.0).empty());
}

TEST_CASE("increasing majorant dominates and never decreases") {
    const auto f = ScalarFunctionSpec::trig(1.0, 1.0, 0.0); // cos
    const auto maj = increasing_majorant(f, 6.0, 512);
    CHECK(maj.monotone == Monotone::increasing);
    double prev = evaluate(maj, 0.0);
    for (int i = 0; i <= 600; ++i) {
        const double x = 6.0 * i / 600.0;
        const double m = evaluate(maj, x);
        CHECK(m >= evaluate(f, x) - 1e-12);
        CHECK(m >= prev - 1e-12);
        prev = m;
    }
    // cos majorant is flat 1 after the first crest
    CHECK(evaluate(maj, 4.0) == doctest::Approx(1.0).epsilon(1e-10));
    // constant beyond R
    CHECK(evaluate(maj, 50.0) == doctest::Approx(evaluate(maj, 6.0)).epsilon(1e-12));
}

TEST_CASE("flag checker catches wrong monotonicity claims") {
    auto lying = ScalarFunctionSpec::trig(1.0, 1.0, 0.0);
    lying.monotone = Monotone::increasing;
    CHECK_FALSE(check_flags(lying, 3.0).ok);
    CHECK(check_flags(ScalarFunctionSpec::identity(), 3.0).ok);
    // a jump flagged continuous is caught
    auto jump = ScalarFunctionSpec::indicator_halfline(0.0, 0.0, 1.0);
    jump.continuous = true;
    CHECK_FALSE(check_flags(jump, 1.0).ok);
}

TEST_CASE("deterministic process evaluates right-open segments") {
    const auto p = DeterministicProcessSpec::piecewise({0.0, 0.5}, {1.0, 2.0});
    CHECK(p.value(0.25) == 1.0);
    CHECK(p.value(0.5) == 2.0);
    CHECK(p.value(7.0) == 2.0);
    CHECK(p.integral(0.0, 1.0) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(p.integral(0.25, 0.75) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(p.max_value() == 2.0);
    CHECK_FALSE(p.is_zero());
    CHECK(DeterministicProcessSpec::make_constant(0.0).is_zero());
    CHECK(DeterministicProcessSpec::make_constant(0.3).integral(1.0, 3.0) ==
          doctest::Approx(0.6).epsilon(1e-15));
}
