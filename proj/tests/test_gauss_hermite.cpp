#include <cmath>

#include "doctest.h"
#include "qbsde/errors.hpp"
#include "qbsde/gauss_hermite.hpp"

using namespace qbsde;

namespace {
constexpr double kSqrtPi = 1.7724538509055160272981674833411;
}

TEST_CASE("rule invariants across the escalation ladder") {
    for (int n : {4, 8, 16, 32, 64, 128, 256, 512}) {
        CAPTURE(n);
        const auto& r = gauss_hermite(n);
        REQUIRE(r.x.size() == static_cast<std::size_t>(n));
        double sw = 0.0, m2 = 0.0;
        for (int i = 0; i < n; ++i) {
            sw += r.w[i];
            m2 += r.w[i] * r.x[i] * r.x[i];
            if (i > 0)
                CHECK(r.x[i] > r.x[i - 1]); // distinct, sorted
            CHECK(r.x[i] == -r.x[n - 1 - i]); // exact symmetry
            CHECK(r.w[i] == r.w[n - 1 - i]);
        }
        CHECK(sw == doctest::Approx(kSqrtPi).epsilon(1e-13));
        CHECK(m2 == doctest::Approx(kSqrtPi / 2.0).epsilon(1e-12));
    }
}

TEST_CASE("order-8 rule matches the published table") {
    const auto& r = gauss_hermite(8);
    CHECK(r.x[4] == doctest::Approx(0.38118699020732212).epsilon(1e-13));
    CHECK(r.x[5] == doctest::Approx(1.1571937124467802).epsilon(1e-13));
    CHECK(r.x[6] == doctest::Approx(1.9816567566958429).epsilon(1e-13));
    CHECK(r.x[7] == doctest::Approx(2.9306374202572440).epsilon(1e-13));
    CHECK(r.w[4] == doctest::Approx(0.66114701255824129).epsilon(1e-12));
    CHECK(r.w[7] == doctest::Approx(1.9960407221136762e-4).epsilon(1e-11));
}

TEST_CASE("gh_expectation reproduces Gaussian moments") {
    QuadratureOptions opts;
    CHECK(gh_expectation([](double s) { return s * s; }, opts).value ==
          doctest::Approx(1.0).epsilon(1e-13));
    CHECK(gh_expectation([](double s) { return s * s * s * s; }, opts).value ==
          doctest::Approx(3.0).epsilon(1e-13));
    CHECK(gh_expectation([](double s) { return std::cos(s); }, opts).value ==
          doctest::Approx(std::exp(-0.5)).epsilon(1e-13));
    CHECK(gh_expectation([](double s) { return std::exp(s); }, opts).value ==
          doctest::Approx(std::exp(0.5)).epsilon(1e-13));
}

TEST_CASE("order escalates until the doubling test settles") {
    QuadratureOptions opts;
    opts.order0 = 8;
    const auto res = gh_expectation([](double s) { return std::cos(4.0 * s); }, opts);
    CHECK(res.order > 8);
    CHECK(res.value == doctest::Approx(std::exp(-8.0)).epsilon(1e-6));
}

TEST_CASE("non-integrable integrands trip the tail safeguards") {
    QuadratureOptions opts;
    // e^{s^2} beats the Gaussian weight outright
    CHECK_THROWS_AS(gh_expectation([](double s) { return std::exp(s * s); }, opts),
                    IntegrabilityError);
    // e^{0.6 s^2} diverges more slowly but still has no finite mean
    CHECK_THROWS_AS(gh_expectation([](double s) { return std::exp(0.6 * s * s); }, opts),
                    IntegrabilityError);
}

TEST_CASE("order floor is enforced") {
    CHECK_THROWS_AS(gauss_hermite(1), ConfigError);
}
