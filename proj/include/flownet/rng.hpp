#ifndef FLOWNET_RNG_HPP
#define FLOWNET_RNG_HPP

#include <cmath>
#include <cstdint>

namespace flownet {

// Counter-based generator: every (seed, stream, counter) triple maps to a
// fixed value, so realizations are reproducible under any execution order
// and independent of the standard library's distributions.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : base_(mix(mix(seed) ^ mix(stream ^ 0x9e3779b97f4a7c15ull))) {}

    // uniform in (0, 1); never returns 0
    double uniform() {
        std::uint64_t z = mix(base_ ^ counter_++);
        return (static_cast<double>(z >> 11) + 0.5) * 0x1.0p-53;
    }

    // standard normal via Box-Muller
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {  // splitmix64 finalizer
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t base_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace flownet

#endif
