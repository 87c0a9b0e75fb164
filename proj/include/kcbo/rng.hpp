#pragma once

#include <cstdint>
#include <vector>

#include "kcbo/types.hpp"

namespace kcbo {

namespace detail {

struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

}  // namespace detail

// Deterministic per-(seed, stream_id) random stream. Each replica owns one,
// so parallel and serial schedules consume identical sequences.
// xoshiro256** core, Gaussians by Marsaglia's polar method.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id) {
        detail::SplitMix64 sm(seed ^ (0xA3C59AC2ED9B7F25ULL * (stream_id + 1)));
        for (auto& w : s_) w = sm.next();
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5ULL, 7) * 9ULL;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on (0, 1); never returns 0.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Uniform on (-1, 1).
    double uniform_sym() { return 2.0 * uniform() - 1.0; }

    // Standard normal. Polar rejection, one spare cached.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = uniform_sym();
            v = uniform_sym();
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double k = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * k;
        has_spare_ = true;
        return u * k;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4];
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// J x d Brownian increments over a step of length dt: i.i.d. N(0, dt).
inline std::vector<double> gaussian_increments(RngStream& stream, int J, int d, double dt) {
    if (J < 1 || d < 1) throw DimensionError("gaussian_increments: J and d must be >= 1");
    std::vector<double> out(static_cast<std::size_t>(J) * d);
    if (dt == 0.0) return out;  // zero-variance Gaussian
    const double scale = std::sqrt(dt);
    for (auto& w : out) w = scale * stream.gaussian();
    return out;
}

inline void fill_gaussian_increments(RngStream& stream, double dt, std::span<double> out) {
    if (dt == 0.0) {
        for (auto& w : out) w = 0.0;
        return;
    }
    const double scale = std::sqrt(dt);
    for (auto& w : out) w = scale * stream.gaussian();
}

}  // namespace kcbo
