#include <cmath>

#include "doctest.h"
#include "qbsde/scenario.hpp"

using namespace qbsde;

namespace {

GeneratorSpec entropic_like() {
    GeneratorSpec h;
    h.terms.push_back(GeneratorTerm::alpha(DeterministicProcessSpec::make_constant(0.3)));
    h.terms.push_back(GeneratorTerm::beta_abs_y(DeterministicProcessSpec::make_constant(0.2)));
    h.terms.push_back(GeneratorTerm::f_zsq(ScalarFunctionSpec::make_constant(0.5)));
    h.terms.push_back(GeneratorTerm::theta_abs_z(DeterministicProcessSpec::make_constant(0.1)));
    return h;
}

} // namespace

TEST_CASE("generator terms compose additively") {
    const auto h = entropic_like();
    // 0.3 + 0.2*2 + 0.5*9 + 0.1*3 = 5.5
    CHECK(evaluate(h, 0.3, -2.0, 3.0) == doctest::Approx(5.5).epsilon(1e-12));

    auto neg = h;
    neg.negated = true;
    CHECK(evaluate(neg, 0.3, -2.0, 3.0) == doctest::Approx(-5.5).epsilon(1e-12));

    GeneratorSpec tagged;
    tagged.terms.push_back(GeneratorTerm::custom(CustomTag::y_log_abs_y, 2.0));
    CHECK(evaluate(tagged, 0.0, 0.0, 1.0) == 0.0); // continuous extension at the origin
    CHECK(evaluate(tagged, 0.0, -2.0, 1.0) ==
          doctest::Approx(-4.0 * std::log(2.0)).epsilon(1e-12));

    GeneratorSpec signed_f;
    signed_f.terms.push_back(
        GeneratorTerm::f_zsq(ScalarFunctionSpec::identity(), -1.0, /*abs_arg=*/true));
    CHECK(evaluate(signed_f, 0.0, -2.0, 3.0) == doctest::Approx(-18.0).epsilon(1e-12));
}

TEST_CASE("terminal inflation by the horizon integrals") {
    TerminalSpec ts{ScalarFunctionSpec::identity(), 1.0};
    const auto alpha = DeterministicProcessSpec::make_constant(1.0);
    const auto beta = DeterministicProcessSpec::make_constant(std::log(2.0));
    // (|-1| + 1) * e^{ln 2} = 4;  ((-1)^+ + 1) * 2 = 2;  ((-1)^- + 1) * 2 = 4
    CHECK(xi_alpha_beta(ts, alpha, beta, -1.0, XiPart::abs) == doctest::Approx(4.0));
    CHECK(xi_alpha_beta(ts, alpha, beta, -1.0, XiPart::plus) == doctest::Approx(2.0));
    CHECK(xi_alpha_beta(ts, alpha, beta, -1.0, XiPart::minus) == doctest::Approx(4.0));
}

TEST_CASE("envelope generators add the quadratic and slope pieces") {
    const auto alpha = DeterministicProcessSpec::make_constant(1.0);
    const auto beta = DeterministicProcessSpec::make_constant(2.0);
    const auto theta = DeterministicProcessSpec::make_constant(0.5);
    const auto env = build_envelope_generators(alpha, beta, theta,
                                               ScalarFunctionSpec::make_constant(0.5));
    // g_env(0, -1, 2) = 1 + 2*1 + 0.5*4 = 5;  h_env adds 0.5*|2| = 1
    CHECK(evaluate(env.g_env, 0.0, -1.0, 2.0) == doctest::Approx(5.0));
    CHECK(evaluate(env.h_env, 0.0, -1.0, 2.0) == doctest::Approx(6.0));
}

TEST_CASE("domination lattice check reports the exact worst excess") {
    SampleBox box;
    box.z_lo = -1.0;
    box.z_hi = 1.0;

    GeneratorSpec h;
    h.terms.push_back(GeneratorTerm::f_zsq(ScalarFunctionSpec::make_constant(1.0)));
    GeneratorSpec upper;
    upper.terms.push_back(GeneratorTerm::f_zsq(ScalarFunctionSpec::make_constant(0.25)));

    const auto bad = check_domination(h, upper, box, 4000);
    CHECK_FALSE(bad.pass);
    // worst offender is |z| = 1 where z^2 - z^2/4 = 3/4, independent of t, y
    CHECK(bad.excess_above == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(std::abs(bad.z_above) == doctest::Approx(1.0));
    CHECK(bad.excess_below == 0.0); // z^2 >= -z^2/4 everywhere
    CHECK(bad.samples > 0);

    const auto good = check_domination(upper, h, box, 4000);
    CHECK(good.pass);
    CHECK(good.excess_above == 0.0);
    CHECK(good.excess_below == 0.0);
}

TEST_CASE("quadratic-constant form check") {
    SampleBox box;
    GeneratorSpec h;
    h.terms.push_back(GeneratorTerm::alpha(DeterministicProcessSpec::make_constant(0.4)));
    h.terms.push_back(GeneratorTerm::f_zsq(ScalarFunctionSpec::make_constant(0.5)));

    const auto eta = DeterministicProcessSpec::make_constant(0.4);
    CHECK(check_quadratic_form(h, eta, 0.5, box, 4000).pass);

    const auto tight = check_quadratic_form(h, DeterministicProcessSpec::make_constant(0.1), 0.5,
                                            box, 4000);
    CHECK_FALSE(tight.pass);
    CHECK(tight.excess == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("growth envelope samplers accept equality and flag violations") {
    SampleBox box;
    const auto alpha = DeterministicProcessSpec::make_constant(0.3);
    const auto beta = DeterministicProcessSpec::make_constant(0.2);
    const auto theta = DeterministicProcessSpec::make_constant(0.1);
    const auto f = ScalarFunctionSpec::make_constant(0.5);

    GeneratorSpec flat; // exactly the envelope without the slope piece
    flat.terms.push_back(GeneratorTerm::alpha(DeterministicProcessSpec::make_constant(0.3)));
    flat.terms.push_back(GeneratorTerm::beta_abs_y(DeterministicProcessSpec::make_constant(0.2)));
    flat.terms.push_back(GeneratorTerm::f_zsq(f));
    CHECK(check_A1(flat, alpha, beta, f, box, 4000).ok);

    const auto h = entropic_like(); // adds 0.1 |z| on top
    CHECK(check_A3(h, alpha, beta, theta, f, box, 4000).ok);
    const auto a1 = check_A1(h, alpha, beta, f, box, 4000);
    CHECK_FALSE(a1.ok);
    CHECK(a1.worst == doctest::Approx(0.1).epsilon(1e-9)); // theta sup |z| on the box
}

TEST_CASE("sign-pattern control family") {
    const auto fam = all_sign_patterns(2);
    REQUIRE(fam.size() == 9);
    bool seen_zero = false;
    for (const auto& ctrl : fam) {
        REQUIRE(ctrl.pattern.size() == 2);
        if (ctrl.pattern[0] == 0 && ctrl.pattern[1] == 0)
            seen_zero = true;
    }
    CHECK(seen_zero);

    GirsanovControl ctrl;
    ctrl.pattern = {1, -1};
    CHECK(ctrl.value(0.2, 1.0) == 1.0);
    CHECK(ctrl.value(0.7, 1.0) == -1.0);
    CHECK(ctrl.value(1.0, 1.0) == -1.0); // closed at the horizon
    CHECK(ctrl.label() == "+-");
}

TEST_CASE("plain moment estimate matches the folded normal mean") {
    // f = 0 keeps u the identity, so the moment is E[|W_1|] = sqrt(2/pi)
    TerminalSpec ts{ScalarFunctionSpec::identity(), 1.0};
    const auto zero = DeterministicProcessSpec::make_constant(0.0);
    const auto rep = estimate_A2(ScalarFunctionSpec::make_constant(0.0), ts, zero, zero, 20000,
                                 99);
    CHECK_FALSE(rep.estimate.divergence_flag);
    CHECK(rep.estimate.count == 20000);
    CHECK(rep.estimate.stderr_ > 0.0);
    const double exact = 0.7978845608028654;
    CHECK(std::abs(rep.estimate.mean - exact) <= 5.0 * rep.estimate.stderr_);
}

TEST_CASE("divergence heuristic trips on the quadratic payoff, not the linear one") {
    const auto f = ScalarFunctionSpec::make_constant(0.5);
    const auto zero = DeterministicProcessSpec::make_constant(0.0);
    TerminalSpec quad{ScalarFunctionSpec::polynomial({0.0, 0.0, 1.0}), 1.0};
    TerminalSpec lin{ScalarFunctionSpec::identity(), 1.0};
    CHECK(estimate_A2(f, quad, zero, zero, 100000, 13).estimate.divergence_flag);
    CHECK_FALSE(estimate_A2(f, lin, zero, zero, 100000, 13).estimate.divergence_flag);
}

TEST_CASE("girsanov moment with zero slope reduces bit-exactly to the plain one") {
    const auto f = ScalarFunctionSpec::make_constant(0.5);
    const auto zero = DeterministicProcessSpec::make_constant(0.0);
    TerminalSpec ts{ScalarFunctionSpec::identity(), 1.0};

    const auto plain = estimate_A2(f, ts, zero, zero, 20000, 424242);
    const auto tilted = estimate_A4(f, ts, zero, zero, zero, all_sign_patterns(2), 20000, 424242);
    CHECK(tilted.best.mean == plain.estimate.mean);
    CHECK(tilted.best.stderr_ == plain.estimate.stderr_);
    CHECK(tilted.best.count == plain.estimate.count);
    for (const auto& row : tilted.table)
        CHECK(row.gamma_mean == 1.0);
}

TEST_CASE("girsanov weights average to one under a genuine slope") {
    const auto f = ScalarFunctionSpec::make_constant(0.5);
    const auto zero = DeterministicProcessSpec::make_constant(0.0);
    const auto theta = DeterministicProcessSpec::make_constant(0.3);
    TerminalSpec ts{ScalarFunctionSpec::identity(), 1.0};

    const auto rep = estimate_A4(f, ts, zero, zero, theta, all_sign_patterns(2), 40000, 5);
    REQUIRE(rep.table.size() == 9);
    for (const auto& row : rep.table)
        CHECK(row.gamma_mean == doctest::Approx(1.0).epsilon(0.05));
    CHECK(rep.best_control < rep.table.size());
    // the best tilt can only improve on the zero control
    double zero_est = 0.0;
    for (const auto& row : rep.table)
        if (row.pattern == "00")
            zero_est = row.estimate;
    CHECK(rep.best.mean >= zero_est - 1e-12);
}
