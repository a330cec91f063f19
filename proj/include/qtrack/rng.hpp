#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace qtrack {

// Stateless 64-bit mix (splitmix64 finalizer). Used to derive independent
// stream seeds from a master seed so results do not depend on run order.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                                 std::uint64_t index = 0) {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a over the stream tag
    for (char c : stream) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return mix64(master ^ mix64(h) ^ mix64(index * 0x9e3779b97f4a7c15ull + 1));
}

// mt19937_64 with platform-independent draws. The standard distributions are
// implementation-defined, so uniforms and normals are produced by hand.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t raw() { return gen_(); }

    // uniform in [0, 1) with 53-bit resolution
    double u01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    // uniform integer in [0, n), n >= 1
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(gen_()) * n) >> 64);
    }

    // standard normal via Box-Muller, second value cached
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = u01();
        while (u1 <= 0.0) u1 = u01();
        const double u2 = u01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.28318530717958647692 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    template <typename T>
    void shuffle(T first, T last) {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            std::swap(first[i - 1], first[below(i)]);
        }
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace qtrack
