#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "twedge/errors.hpp"

namespace twedge {

namespace detail {

// SplitMix64 mixing step (Steele, Lea, Flood 2014). Used only to derive
// substream seeds; the draws themselves come from mt19937_64.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace detail

// One reproducible random stream. The substream for (master_seed, stream_index)
// is a pure function of both values: the same pair always produces the same
// draw sequence, no matter which thread or process consumes it. Experiments
// assign stream_index = replicate id, which is what makes results independent
// of the worker count.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
        : master_seed_(master_seed), stream_index_(stream_index),
          engine_(derive_seed(master_seed, stream_index)) {}

    std::uint64_t master_seed() const noexcept { return master_seed_; }
    std::uint64_t stream_index() const noexcept { return stream_index_; }

    // Uniform on [0,1) with 53-bit resolution.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0,1]; safe as a log() argument.
    double uniform01_pos() {
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller. Consumes exactly two engine draws; no
    // cached spare, so the stream state stays a simple function of call count.
    double normal() {
        double u1 = uniform01_pos();
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Gamma(shape, scale). Marsaglia-Tsang squeeze for shape >= 1, boosted
    // draw for shape < 1.
    double gamma(double shape, double scale) {
        require(shape > 0 && scale > 0, "InvalidLaw", "gamma parameters must be positive");
        if (shape < 1.0) {
            double g = gamma(shape + 1.0, scale);
            return g * std::pow(uniform01_pos(), 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double t = 1.0 + c * x;
            if (t <= 0.0) continue;
            double v = t * t * t;
            double u = uniform01_pos();
            double x2 = x * x;
            if (u < 1.0 - 0.0331 * x2 * x2) return d * v * scale;
            if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v * scale;
        }
    }

    double chi_squared(double dof) { return gamma(0.5 * dof, 2.0); }

    double beta(double a, double b) {
        double ga = gamma(a, 1.0);
        double gb = gamma(b, 1.0);
        return ga / (ga + gb);
    }

    // Index draw from a finite distribution given cumulative weights
    // (cum.back() == 1 within rounding).
    std::size_t categorical(const std::vector<double>& cum) {
        double u = uniform01();
        std::size_t lo = 0, hi = cum.size() - 1;
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (u < cum[mid]) hi = mid; else lo = mid + 1;
        }
        return lo;
    }

private:
    static std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
        std::uint64_t s = master;
        std::uint64_t a = detail::splitmix64(s);
        std::uint64_t t = a ^ (0x9E3779B97F4A7C15ULL * (index + 1));
        return detail::splitmix64(t);
    }

    std::uint64_t master_seed_;
    std::uint64_t stream_index_;
    std::mt19937_64 engine_;
};

} // namespace twedge
