#include "zzaloha/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "zzaloha/errors.hpp"

namespace zzaloha {

std::vector<double> maximize_grid(const MaximizeOptions& options) {
    if (!(options.lower < options.upper) || !(options.grid_step > 0.0)) {
        throw ValidationError("maximization requires lower < upper and a positive grid step");
    }
    std::vector<double> grid{options.lower};
    const long first = static_cast<long>(std::floor(options.lower / options.grid_step)) + 1;
    for (long k = first;; ++k) {
        const double x = static_cast<double>(k) * options.grid_step;
        if (x >= options.upper - 1e-12) break;
        if (x > options.lower + 1e-12) grid.push_back(x);
    }
    grid.push_back(options.upper);
    return grid;
}

namespace {

struct Probe {
    double x;
    double f;
};

Probe golden_section(const std::function<double(double)>& f, double a, double b, double tol) {
    constexpr double inv_phi = 0.6180339887498948482;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return fc >= fd ? Probe{c, fc} : Probe{d, fd};
}

bool better(const Probe& cand, const Probe& best) {
    return cand.f > best.f || (cand.f == best.f && cand.x < best.x);
}

}  // namespace

ScalarMaximum maximize_scalar(const std::function<double(double)>& objective, const MaximizeOptions& options) {
    const auto grid = maximize_grid(options);
    std::vector<double> values(grid.size());
    std::transform(grid.begin(), grid.end(), values.begin(), objective);

    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    if (*hi_it - *lo_it < options.flat_tolerance) {
        // Every grid point is a maximizer; report the smallest.
        const auto best = std::max_element(values.begin(), values.end());
        return {grid.front(), *best, true};
    }

    std::vector<std::size_t> order(grid.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });

    Probe best{grid[order.front()], values[order.front()]};
    const auto starts = std::min<std::size_t>(static_cast<std::size_t>(std::max(options.starts, 1)), grid.size());
    for (std::size_t s = 0; s < starts; ++s) {
        const std::size_t k = order[s];
        const double a = grid[k == 0 ? 0 : k - 1];
        const double b = grid[std::min(k + 1, grid.size() - 1)];
        const Probe refined = golden_section(objective, a, b, options.tolerance);
        if (better(refined, best)) best = refined;
    }
    return {best.x, best.f, false};
}

}  // namespace zzaloha
