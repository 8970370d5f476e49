#pragma once

#include <cmath>
#include <cstdint>

namespace qbsde {

// splitmix64 finalizer: bijective full-avalanche mix.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// splitmix64 step; small state, good mixing, trivially seedable.
inline std::uint64_t splitmix64_next(std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ull;
    return mix64(s);
}

// Independent normal stream keyed by (master seed, stream index).  Stream k
// always produces the same draws regardless of how many other streams exist,
// so per-path noise is reproducible under any scheduling.  The initial state
// hashes seed and index separately; deriving it linearly in the index would
// make neighbouring streams shifted copies of each other, since the walk
// advances by the same golden-ratio constant.
class NormalStream {
  public:
    NormalStream(std::uint64_t master_seed, std::uint64_t stream_index) {
        state_ = mix64(mix64(master_seed) ^ mix64(stream_index + 0x5851f42d4c957f2dull));
    }

    // uniform on (0, 1]
    double uniform() {
        const std::uint64_t bits = splitmix64_next(state_);
        return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
    }

    // standard normal via Box-Muller
    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::uint64_t state_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace qbsde
