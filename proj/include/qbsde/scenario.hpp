#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qbsde/function_model.hpp"
#include "qbsde/transforms.hpp"

namespace qbsde {

// Terminal payoff g(W_T) at horizon T.
struct TerminalSpec {
    ScalarFunctionSpec g;
    double T = 1.0;
};

enum class TermKind {
    alpha,        // alpha(t)
    beta_abs_y,   // beta(t) |y|
    theta_abs_z,  // theta(t) |z|
    f_zsq,        // sign * f(y) z^2, or f(|y|) z^2 when abs_arg
    custom,       // tagged closed forms below
};

enum class CustomTag {
    sin_y_zsq,    // coef * sin(y) z^2
    y_abs_z,      // coef * y |z|
    lin_y,        // coef * y
    y_log_abs_y,  // coef * y |ln|y||, value 0 at y = 0
};

struct GeneratorTerm {
    TermKind kind = TermKind::alpha;
    DeterministicProcessSpec proc; // alpha / beta_abs_y / theta_abs_z
    ScalarFunctionSpec fn;         // f_zsq
    double sign = 1.0;             // f_zsq
    bool abs_arg = false;          // f_zsq: evaluate fn at |y|
    CustomTag tag = CustomTag::sin_y_zsq;
    double coef = 0.0;             // custom

    static GeneratorTerm alpha(DeterministicProcessSpec p);
    static GeneratorTerm beta_abs_y(DeterministicProcessSpec p);
    static GeneratorTerm theta_abs_z(DeterministicProcessSpec p);
    static GeneratorTerm f_zsq(ScalarFunctionSpec f, double sign = 1.0, bool abs_arg = false);
    static GeneratorTerm custom(CustomTag tag, double coef);
};

// Driver H(t, y, z) as a sum of terms, optionally negated as a whole.
struct GeneratorSpec {
    std::vector<GeneratorTerm> terms;
    bool negated = false;
};

double evaluate(const GeneratorSpec& h, double t, double y, double z);

// Terminal data inflated by the horizon integrals of alpha and beta:
// (part(g(w)) + int_0^T alpha) * exp(int_0^T beta).
enum class XiPart { abs, plus, minus };
double xi_alpha_beta(const TerminalSpec& ts, const DeterministicProcessSpec& alpha,
                     const DeterministicProcessSpec& beta, double w_T, XiPart part = XiPart::abs);

// Envelope pair (g_env, h_env): g_env = alpha + beta |y| + f(|y|) z^2 and
// h_env = g_env + theta |z|.  Requires the increasing flag on f (wrap with
// increasing_majorant first otherwise).
struct EnvelopeGenerators {
    GeneratorSpec g_env;
    GeneratorSpec h_env;
};
EnvelopeGenerators build_envelope_generators(const DeterministicProcessSpec& alpha,
                                             const DeterministicProcessSpec& beta,
                                             const DeterministicProcessSpec& theta,
                                             const ScalarFunctionSpec& f);

struct SampleBox {
    double t_lo = 0.0, t_hi = 1.0;
    double y_lo = -1.0, y_hi = 1.0;
    double z_lo = -1.0, z_hi = 1.0;
};

// Deterministic lattice check of -lower <= H <= upper on the box, including
// endpoints and midlines.  Also reports the best constant-form bound
// |H| <= eta + C z^2 violation for eta = sup alpha-type level and C.
struct DominationReport {
    bool pass = true;
    double excess_above = 0.0; // max (H - upper)^+
    double excess_below = 0.0; // max (-lower - H)^+  i.e. H below the mirror envelope
    double t_above = 0.0, y_above = 0.0, z_above = 0.0;
    double t_below = 0.0, y_below = 0.0, z_below = 0.0;
    std::size_t samples = 0;
};
DominationReport check_domination(const GeneratorSpec& h, const GeneratorSpec& upper,
                                  const SampleBox& box, std::size_t n_target);

// Quadratic-constant form |H| <= eta(t) + C z^2 on the box.
struct QuadFormReport {
    bool pass = true;
    double excess = 0.0;
    double t_at = 0.0, y_at = 0.0, z_at = 0.0;
    std::size_t samples = 0;
};
QuadFormReport check_quadratic_form(const GeneratorSpec& h, const DeterministicProcessSpec& eta,
                                    double C, const SampleBox& box, std::size_t n_target);

// Sampled verification of the growth envelopes on a box.
struct ViolationReport {
    bool ok = true;
    double worst = 0.0;
    double t_at = 0.0, y_at = 0.0, z_at = 0.0;
};
ViolationReport check_A1(const GeneratorSpec& h, const DeterministicProcessSpec& alpha,
                         const DeterministicProcessSpec& beta, const ScalarFunctionSpec& f,
                         const SampleBox& box, std::size_t n_target);
ViolationReport check_A3(const GeneratorSpec& h, const DeterministicProcessSpec& alpha,
                         const DeterministicProcessSpec& beta,
                         const DeterministicProcessSpec& theta, const ScalarFunctionSpec& f,
                         const SampleBox& box, std::size_t n_target);

// Piecewise-constant control with values in {-1, 0, +1} on equal sub-intervals.
struct GirsanovControl {
    std::vector<int> pattern;
    std::string label() const;
    double value(double t, double T) const;
};
std::vector<GirsanovControl> all_sign_patterns(int k);

struct AssumptionEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t count = 0;
    bool divergence_flag = false;
};

struct MomentOptions {
    int nsub = 4;          // uniform sub-intervals for the Brownian draw
    double radius = 0.0;   // 0: sized from the draws with 5% headroom
    std::size_t n_nodes = 1025;
    std::optional<double> p; // also estimate E[u(xi)^p]
};

// Monte Carlo moment of the transformed inflated terminal, E[u_f(xi)].
// The divergence flag trips when the running mean grows by a factor >= 2
// between consecutive doubling prefixes twice.
struct A2Report {
    AssumptionEstimate estimate;
    std::optional<double> p_moment;
    double radius_used = 0.0;
};
A2Report estimate_A2(const ScalarFunctionSpec& f, const TerminalSpec& ts,
                     const DeterministicProcessSpec& alpha, const DeterministicProcessSpec& beta,
                     std::size_t m, std::uint64_t seed, const MomentOptions& opts = {});

// Girsanov-weighted version over a finite control family; theta == 0 reduces
// bit-exactly to the plain moment.
struct A4ControlRow {
    std::size_t id = 0;
    std::string pattern;
    double estimate = 0.0;
    double stderr_ = 0.0;
    double gamma_mean = 0.0;
};
struct A4Report {
    AssumptionEstimate best;
    std::size_t best_control = 0;
    std::vector<A4ControlRow> table;
    double radius_used = 0.0;
};
A4Report estimate_A4(const ScalarFunctionSpec& f, const TerminalSpec& ts,
                     const DeterministicProcessSpec& alpha, const DeterministicProcessSpec& beta,
                     const DeterministicProcessSpec& theta,
                     const std::vector<GirsanovControl>& family, std::size_t m,
                     std::uint64_t seed, const MomentOptions& opts = {});

} // namespace qbsde
