#pragma once

#include <stdexcept>
#include <string>

namespace qbsde {

// Non-finite evaluation or an argument outside a function's mathematical domain.
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Query outside a tabulated range; carries the valid interval.
struct RangeError : std::out_of_range {
    double lo;
    double hi;
    RangeError(const std::string& what, double lo_, double hi_)
        : std::out_of_range(what + " (valid interval [" + std::to_string(lo_) + ", " +
                            std::to_string(hi_) + "])"),
          lo(lo_), hi(hi_) {}
};

// A transform was built on too small a radius for the requested computation.
struct EnlargeRadius : std::runtime_error {
    double required;
    explicit EnlargeRadius(double required_)
        : std::runtime_error("transform radius too small, rebuild with R >= " +
                             std::to_string(required_)),
          required(required_) {}
};

// The quadrature tail test or a moment estimate indicates a non-integrable quantity.
struct IntegrabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Explicit scheme blow-up; carries a step count that satisfies the stability bound.
struct StabilityError : std::runtime_error {
    int suggested_nt;
    StabilityError(const std::string& what, int suggested)
        : std::runtime_error(what + "; suggested nt >= " + std::to_string(suggested)),
          suggested_nt(suggested) {}
};

// Invalid configuration or inconsistent inputs detected before computation.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace qbsde
