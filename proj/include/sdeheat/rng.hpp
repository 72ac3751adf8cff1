#pragma once

// Per-path Gaussian increment streams. Stream k depends only on
// (base_seed, k), so Monte Carlo results do not depend on how paths are
// distributed over threads.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <random>
#include <vector>

namespace sdeheat {

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of path `index`: splitmix64(base_seed ^ splitmix64(index)).
constexpr std::uint64_t path_seed(std::uint64_t base_seed, std::uint64_t index) noexcept {
    return splitmix64(base_seed ^ splitmix64(index));
}

template <typename N>
concept NoiseSource = requires(N n, double dt) {
    { n.increment(dt) } -> std::convertible_to<double>;
};

/// Brownian increments ~ Normal(0, dt), drawn in call order.
class GaussianIncrements {
public:
    explicit GaussianIncrements(std::uint64_t seed) : engine_(seed) {}
    GaussianIncrements(std::uint64_t base_seed, std::uint64_t path_index)
        : engine_(path_seed(base_seed, path_index)) {}

    double increment(double dt) { return std::sqrt(dt) * normal_(engine_); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// dW = 0: turns Euler-Maruyama into explicit Euler.
struct ZeroNoise {
    double increment(double) const noexcept { return 0.0; }
};

/// Replays a fixed sequence of increments, each coarse step summing `stride`
/// consecutive fine increments. Used to compare step sizes on one Brownian path.
class ReplayedIncrements {
public:
    ReplayedIncrements(const std::vector<double>& fine, std::size_t stride)
        : fine_(&fine), stride_(stride) {}

    double increment(double) {
        double s = 0.0;
        for (std::size_t j = 0; j < stride_; ++j) s += (*fine_)[pos_++];
        return s;
    }

private:
    const std::vector<double>* fine_;
    std::size_t stride_;
    std::size_t pos_ = 0;
};

}  // namespace sdeheat
