#pragma once

#include <functional>
#include <vector>

namespace qbsde {

// Adaptive Simpson on [a, b] with absolute tolerance tol.  The endpoints are
// evaluated slightly inside the interval, so panel edges may sit directly on
// jump discontinuities and the rule still sees one-sided limits.
double adaptive_simpson(const std::function<double(double)>& g, double a, double b, double tol);

// Integrate over [a, b] split at the interior cut points (sorted, may fall
// outside [a, b]; those are ignored).  Tolerance is divided between panels by
// length share.
double integrate_with_cuts(const std::function<double(double)>& g, double a, double b,
                           const std::vector<double>& cuts, double tol);

// Nudge x off an interval endpoint toward the interior by an amount that is
// negligible for quadrature but strictly larger than one ulp.
double nudge_inward(double x, double width);

} // namespace qbsde
