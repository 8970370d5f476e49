#pragma once

#include <cstddef>

#include "qbsde/envelope.hpp"
#include "qbsde/mc_engine.hpp"
#include "qbsde/scenario.hpp"

namespace qbsde {

// Explicit backward finite-difference solver for
//   dY/dt + (1/2) d2Y/dx2 + H(t, Y, dY/dx) = 0,  Y(T, x) = g(x)
// on [-X, X].  linear_extrapolation imposes a vanishing second derivative at
// the edges; dirichlet_from_envelope additionally clamps every slice into
// supplied a-priori bounds.
struct PdeGrid {
    double X = 6.0;
    int nx = 401;
    int nt = 0; // 0: smallest stable count
    enum class Boundary { linear_extrapolation, dirichlet_from_envelope };
    Boundary boundary = Boundary::linear_extrapolation;
};

// Smallest time-step count satisfying h_t <= h_x^2 / (1 + C ux_scale h_x)
// with a 5% safety margin; C is the quadratic growth constant of the driver
// and ux_scale an estimate of the largest gradient.
int stable_nt(double T, double X, int nx, double C, double ux_scale);

// env is required for dirichlet_from_envelope and must be tabulated on the
// solver's own time lattice; quad_C feeds the stability bound.
SolutionSurface solve_pde(const GeneratorSpec& h, const TerminalSpec& ts, const PdeGrid& grid,
                          double quad_C = 0.0, const EnvelopeBounds* env = nullptr);

// Largest absolute defect of a state surface under this solver's own
// discretization of the equation; zero (up to rounding) on an unclamped
// solve_pde output, and a map-consistency measure for transformed surfaces.
double discrete_residual(const SolutionSurface& s, const GeneratorSpec& h);

// Bilinear value of a state-indexed surface at (t, x); range-checked in x.
double surface_value(const SolutionSurface& s, double t, double x);

enum class CompareNorm { sup_at_origin, sup_lattice };

struct CompareReport {
    double error = 0.0;
    std::size_t points = 0;
    std::size_t skipped = 0; // lattice points outside the other surface's range
};

// sup_lattice walks a's lattice and interpolates b (linear in t and x);
// both surfaces must share the horizon.
CompareReport compare(const SolutionSurface& a, const SolutionSurface& b, CompareNorm norm);

} // namespace qbsde
