#pragma once

#include <cstdint>
#include <vector>

#include "qbsde/envelope.hpp"
#include "qbsde/scenario.hpp"

namespace qbsde {

struct TimeGrid {
    double T = 1.0;
    int N = 50;
    double h() const { return T / static_cast<double>(N); }
    double t(int i) const { return T * static_cast<double>(i) / static_cast<double>(N); }
};

// Brownian increments, one independent substream per path.  With antithetic
// on, odd paths mirror the draws of their even neighbour (M must be even).
struct PathBundle {
    TimeGrid grid;
    std::size_t M = 0;
    std::uint64_t master_seed = 0;
    bool antithetic = false;
    std::vector<std::vector<double>> dW; // [step][path]
};

PathBundle simulate_paths(std::uint64_t seed, std::size_t M, const TimeGrid& grid,
                          bool antithetic = false);

// Cumulative Brownian values W[i][j] for step i, path j (W[0] = 0).
std::vector<std::vector<double>> brownian_values(const PathBundle& bundle);

// Piecewise-affine conditional expectation in equiprobable state bins.
struct RegressionBasis {
    std::size_t bins = 0;    // 0: ceil(M^{1/3})
    std::size_t min_bin = 10;
};
std::vector<double> regress_conditional(const std::vector<double>& values,
                                        const std::vector<double>& states,
                                        const RegressionBasis& basis);

// Either a per-path backward solution or a state-lattice solution.
struct SolutionSurface {
    enum class Kind { path_indexed, state_indexed };
    Kind kind = Kind::state_indexed;
    TimeGrid grid;
    std::vector<double> states;             // state_indexed only
    std::vector<std::vector<double>> w;     // path_indexed: [step][path]
    std::vector<std::vector<double>> y;     // [step][path or state]
    std::vector<std::vector<double>> z;
    std::uint64_t seed = 0;
    double clamp_fraction = 0.0;
    double y0_stderr = 0.0;
};

// Value at t = 0, state 0.
double origin_value(const SolutionSurface& s);

// Backward least-squares scheme with an explicit driver step and envelope
// clamping: Y_i = clamp(E_i + h H(t_i, E_i, Z_i), [L_i, U_i]) evaluated at
// the path state.  The envelope must be tabulated on the bundle's time grid
// and cover the sampled state range.
SolutionSurface lsmc_solve(const GeneratorSpec& h, const TerminalSpec& ts,
                           const EnvelopeBounds& env, const PathBundle& bundle,
                           const RegressionBasis& basis = {});

} // namespace qbsde
