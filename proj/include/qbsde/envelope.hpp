#pragma once

#include <vector>

#include "qbsde/errors.hpp"

namespace qbsde {

// Lower/upper a-priori bounds for the solution, tabulated on a time x state
// lattice.  Linear interpolation in the state; time is addressed by index so
// the consumer's grid must match the builder's.
struct EnvelopeBounds {
    std::vector<double> times;
    std::vector<double> states;
    std::vector<std::vector<double>> lower; // [time][state]
    std::vector<std::vector<double>> upper;

    double eval(bool up, std::size_t time_index, double x) const {
        const auto& row = up ? upper[time_index] : lower[time_index];
        if (x < states.front() || x > states.back())
            throw RangeError("envelope queried outside its state range", states.front(),
                             states.back());
        if (x <= states.front())
            return row.front();
        std::size_t lo = 0, hi = states.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            (states[mid] <= x ? lo : hi) = mid;
        }
        const double t = (x - states[lo]) / (states[lo + 1] - states[lo]);
        return row[lo] + t * (row[lo + 1] - row[lo]);
    }
    double eval_lower(std::size_t time_index, double x) const { return eval(false, time_index, x); }
    double eval_upper(std::size_t time_index, double x) const { return eval(true, time_index, x); }
};

} // namespace qbsde
