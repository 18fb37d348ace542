#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace snowshr {

// Deterministic random source. All distribution mappings are written out
// here instead of using std::*_distribution, so identical seeds give
// identical streams regardless of the standard library build.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(static_cast<std::uint32_t>(seed ^ (seed >> 32))) {}

    std::uint32_t next_u32() { return gen_(); }

    std::uint64_t next_u64() {
        std::uint64_t hi = gen_();
        std::uint64_t lo = gen_();
        return (hi << 32) | lo;
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    float uniformf(float lo, float hi) { return static_cast<float>(uniform(lo, hi)); }

    // Inclusive integer range.
    int uniform_int(int lo, int hi) {
        std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
        return lo + static_cast<int>(next_u64() % span);
    }

    // Box-Muller; second value cached.
    double normal(double mean = 0.0, double stddev = 1.0) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + stddev * spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return mean + stddev * r * std::cos(theta);
    }

    float normalf(float mean = 0.0f, float stddev = 1.0f) {
        return static_cast<float>(normal(mean, stddev));
    }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(0, static_cast<int>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Independent stream for a named purpose; keeps draw order stable when
    // one component adds draws without disturbing another.
    Rng fork(std::uint64_t salt) {
        std::uint64_t x = next_u64() ^ (salt * 0x9e3779b97f4a7c15ull);
        // splitmix64 finalizer
        x ^= x >> 30;
        x *= 0xbf58476d1ce4e5b9ull;
        x ^= x >> 27;
        x *= 0x94d049bb133111ebull;
        x ^= x >> 31;
        return Rng(x);
    }

  private:
    std::mt19937 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace snowshr
