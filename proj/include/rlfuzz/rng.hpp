#pragma once

#include <cstdint>
#include <cmath>
#include <random>
#include <vector>

namespace rlfuzz {

// Seeded random source with hand-rolled distributions so that seeded output
// is identical across standard library implementations. All golden fixtures
// in the test suite depend on this mapping staying fixed.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // uniform integer in [0, n)
    uint64_t uniform(uint64_t n) {
        // modulo with rejection to avoid bias
        if (n == 0) return 0;
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

    int64_t uniform_range(int64_t lo, int64_t hi) {  // inclusive bounds
        return lo + static_cast<int64_t>(uniform(static_cast<uint64_t>(hi - lo + 1)));
    }

    // uniform double in [0, 1)
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    bool chance(double p) { return uniform01() < p; }

    // standard normal via Box-Muller
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(uniform(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // derive an independent stream (for per-thread / per-episode use)
    Rng split() { return Rng(gen_() ^ 0x9e3779b97f4a7c15ULL); }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace rlfuzz
