#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "sdeheat/errors.hpp"

namespace sdeheat {

/// Sampled function on a strictly increasing grid covering [0, 1].
struct GridFunction {
    std::vector<double> xs;
    std::vector<double> values;

    [[nodiscard]] std::size_t size() const noexcept { return xs.size(); }

    bool operator==(const GridFunction&) const = default;
};

/// Uniform grid of `points` nodes on [0, 1], both endpoints included.
inline std::vector<double> uniform_grid(std::size_t points) {
    if (points < 2) throw DomainError("uniform grid needs at least 2 points");
    std::vector<double> xs(points);
    const double h = 1.0 / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) xs[i] = static_cast<double>(i) * h;
    xs.back() = 1.0;
    return xs;
}

template <typename F>
GridFunction sample(F&& f, std::vector<double> xs) {
    GridFunction g{std::move(xs), {}};
    g.values.reserve(g.xs.size());
    for (double x : g.xs) g.values.push_back(f(x));
    return g;
}

/// Empty string when `g` is a valid grid function, otherwise the violated rule.
inline std::string grid_violation(const GridFunction& g, std::size_t min_points = 2) {
    if (g.xs.size() != g.values.size()) return "xs and values differ in length";
    if (g.xs.size() < min_points)
        return "needs at least " + std::to_string(min_points) + " points";
    if (g.xs.front() != 0.0) return "grid must start at x = 0";
    if (g.xs.back() != 1.0) return "grid must end at x = 1";
    for (std::size_t i = 1; i < g.xs.size(); ++i)
        if (!(g.xs[i] > g.xs[i - 1])) return "grid must be strictly increasing";
    for (double v : g.values)
        if (!std::isfinite(v)) return "values must be finite";
    return {};
}

/// Piecewise-linear interpolation; `x` is clamped to [0, 1].
inline double interpolate(const GridFunction& g, double x) {
    if (x <= g.xs.front()) return g.values.front();
    if (x >= g.xs.back()) return g.values.back();
    std::size_t lo = 0;
    std::size_t hi = g.xs.size() - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (g.xs[mid] <= x) lo = mid;
        else hi = mid;
    }
    const double w = (x - g.xs[lo]) / (g.xs[hi] - g.xs[lo]);
    return (1.0 - w) * g.values[lo] + w * g.values[hi];
}

}  // namespace sdeheat
