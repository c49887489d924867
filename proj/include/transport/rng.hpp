#ifndef TRANSPORT_RNG_HPP
#define TRANSPORT_RNG_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace transport {

// xoshiro256++ with splitmix64 seeding. Hand-rolled so that trajectories are
// bit-identical across platforms and standard-library versions; the library
// guarantees replay from (seed, replica) alone.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
        have_gauss_ = false;
    }

    // Independent stream for replica r of a run seeded with `base`.
    static Rng for_replica(std::uint64_t base, std::uint64_t replica) {
        return Rng(base ^ (0x9E3779B97F4A7C15ULL * (replica + 1)));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in (0,1); never returns 0 so log() is always safe.
    double uniform() {
        const std::uint64_t bits = next_u64() >> 11;  // 53 bits
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    std::uint64_t uniform_index(std::uint64_t n) {
        // Lemire-style rejection; unbiased for any n.
        std::uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t threshold = (-n) % n;
            while (lo < threshold) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    double normal() {
        if (have_gauss_) {
            have_gauss_ = false;
            return gauss_;
        }
        // polar Box-Muller
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        gauss_ = v * f;
        have_gauss_ = true;
        return u * f;
    }

    // Marsaglia-Tsang; valid for any shape > 0.
    double gamma(double shape, double scale) {
        if (shape < 1.0) {
            const double u = uniform();
            return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
        }
    }

    double beta(double a, double b) {
        const double x = gamma(a, 1.0);
        const double y = gamma(b, 1.0);
        return x / (x + y);
    }

    // Index sampled proportionally to weights (linear scan; callers keep
    // weight vectors short or use DiscreteCdf below).
    std::size_t weighted_index(std::span<const double> weights, double total) {
        double target = uniform() * total;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            target -= weights[i];
            if (target <= 0.0) return i;
        }
        return weights.size() - 1;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_[4]{};
    double gauss_ = 0.0;
    bool have_gauss_ = false;
};

// Precomputed inverse-CDF table for a finite discrete distribution.
class DiscreteCdf {
  public:
    DiscreteCdf() = default;
    explicit DiscreteCdf(std::span<const double> pmf) : cdf_(pmf.begin(), pmf.end()) {
        double acc = 0.0;
        for (auto& c : cdf_) {
            acc += c;
            c = acc;
        }
        if (!cdf_.empty()) cdf_.back() = 1.0;  // guard against rounding
    }

    int sample(Rng& rng) const {
        const double u = rng.uniform();
        // binary search for first cdf >= u
        std::size_t lo = 0, hi = cdf_.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (cdf_[mid] < u)
                lo = mid + 1;
            else
                hi = mid;
        }
        return static_cast<int>(lo);
    }

    bool empty() const { return cdf_.empty(); }

  private:
    std::vector<double> cdf_;
};

}  // namespace transport

#endif
