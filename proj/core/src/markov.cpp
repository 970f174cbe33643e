#include "zzaloha/markov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "zzaloha/errors.hpp"
#include "zzaloha/format.hpp"

namespace zzaloha {

TransitionMatrix::TransitionMatrix(std::size_t dimension, std::vector<std::string> labels)
    : n_(dimension), entries_(dimension * dimension, 0.0), labels_(std::move(labels)) {
    if (labels_.empty()) {
        labels_.reserve(n_);
        for (std::size_t i = 0; i < n_; ++i) labels_.push_back(std::to_string(i));
    }
    if (labels_.size() != n_) throw ValidationError("label count does not match matrix dimension");
}

std::vector<RowDefect> validate_rows(const TransitionMatrix& p, double tolerance) {
    std::vector<RowDefect> defects;
    for (std::size_t i = 0; i < p.dimension(); ++i) {
        const auto r = p.row(i);
        const double sum = std::accumulate(r.begin(), r.end(), 0.0);
        if (std::abs(1.0 - sum) > tolerance || !std::isfinite(sum)) defects.push_back({i, 1.0 - sum});
    }
    return defects;
}

double stationary_residual(const TransitionMatrix& p, std::span<const double> pi) {
    const std::size_t n = p.dimension();
    std::vector<double> next(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (pi[i] == 0.0) continue;
        const auto r = p.row(i);
        for (std::size_t j = 0; j < n; ++j) next[j] += pi[i] * r[j];
    }
    double worst = 0.0;
    for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, std::abs(next[j] - pi[j]));
    return worst;
}

namespace {

void require_stochastic(const TransitionMatrix& p, const EngineOptions& options) {
    if (p.dimension() == 0) throw ValidationError("empty transition matrix");
    for (std::size_t i = 0; i < p.dimension(); ++i) {
        for (double v : p.row(i)) {
            // Accumulated entries may exceed 1 by round-off.
            if (!(v >= 0.0 && v <= 1.0 + options.row_tolerance)) {
                throw ValidationError("transition entry outside [0, 1] in row " + std::to_string(i));
            }
        }
    }
    const auto defects = validate_rows(p, options.row_tolerance);
    if (!defects.empty()) {
        throw ValidationError("row " + std::to_string(defects.front().row) + " sums to " +
                              format_number(1.0 - defects.front().deviation) + ", not 1 (" +
                              std::to_string(defects.size()) + " defective rows)");
    }
}

// Clip round-off negatives and renormalize. Returns false if a negative
// entry is too large to be round-off.
bool clean_distribution(std::vector<double>& pi) {
    double sum = 0.0;
    for (double& v : pi) {
        if (v < 0.0) {
            if (v < -1e-12) return false;
            v = 0.0;
        }
        sum += v;
    }
    if (!(sum > 0.0)) return false;
    for (double& v : pi) v /= sum;
    return true;
}

// Solves (P^T - I) x = 0 with the last equation replaced by sum(x) = 1.
// Returns false when a pivot falls below the singularity threshold.
bool direct_solve(const TransitionMatrix& p, double singular_pivot, std::vector<double>& x) {
    const std::size_t n = p.dimension();
    std::vector<double> a(n * n);
    std::vector<double> b(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) a[i * n + j] = p(j, i) - (i == j ? 1.0 : 0.0);
    }
    for (std::size_t j = 0; j < n; ++j) a[(n - 1) * n + j] = 1.0;
    b[n - 1] = 1.0;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        double best = std::abs(a[col * n + col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double v = std::abs(a[r * n + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best < singular_pivot) return false;
        if (pivot != col) {
            std::swap_ranges(a.begin() + static_cast<std::ptrdiff_t>(col * n),
                             a.begin() + static_cast<std::ptrdiff_t>((col + 1) * n),
                             a.begin() + static_cast<std::ptrdiff_t>(pivot * n));
            std::swap(b[col], b[pivot]);
        }
        const double diag = a[col * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = a[r * n + col] / diag;
            if (factor == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r * n + c] -= factor * a[col * n + c];
            b[r] -= factor * b[col];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= a[i * n + c] * x[c];
        x[i] = s / a[i * n + i];
    }
    return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

StationaryDist solve_stationary_direct(const TransitionMatrix& p, const EngineOptions& options) {
    require_stochastic(p, options);
    StationaryDist out;
    out.method = SolveMethod::Direct;
    if (!direct_solve(p, options.singular_pivot, out.probabilities) || !clean_distribution(out.probabilities)) {
        throw ConvergenceError("balance system is numerically singular", std::nan(""));
    }
    out.residual = stationary_residual(p, out.probabilities);
    if (!(out.residual < options.residual_tolerance)) {
        throw ConvergenceError("direct stationary solve residual " + format_number(out.residual) +
                                   " exceeds tolerance",
                               out.residual);
    }
    return out;
}

StationaryDist solve_stationary_power(const TransitionMatrix& p, const EngineOptions& options, std::size_t start) {
    require_stochastic(p, options);
    const std::size_t n = p.dimension();
    if (start >= n) throw ValidationError("power iteration start state out of range");

    std::vector<double> pi(n, 0.0);
    std::vector<double> next(n);
    pi[start] = 1.0;
    double change = 1.0;
    long iter = 0;
    while (iter < options.max_power_iterations) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (pi[i] == 0.0) continue;
            const auto r = p.row(i);
            for (std::size_t j = 0; j < n; ++j) next[j] += pi[i] * r[j];
        }
        change = 0.0;
        for (std::size_t j = 0; j < n; ++j) change = std::max(change, std::abs(next[j] - pi[j]));
        pi.swap(next);
        ++iter;
        if (change < options.power_tolerance) break;
    }
    clean_distribution(pi);
    StationaryDist out{std::move(pi), 0.0, SolveMethod::PowerIteration, iter};
    out.residual = stationary_residual(p, out.probabilities);
    if (change >= options.power_tolerance || !(out.residual < options.residual_tolerance)) {
        throw ConvergenceError("power iteration did not converge after " + std::to_string(iter) +
                                   " iterations (residual " + format_number(out.residual) + ")",
                               out.residual);
    }
    return out;
}

StationaryDist solve_stationary(const TransitionMatrix& p, const EngineOptions& options) {
    require_stochastic(p, options);
    StationaryDist out;
    if (direct_solve(p, options.singular_pivot, out.probabilities) && clean_distribution(out.probabilities)) {
        out.residual = stationary_residual(p, out.probabilities);
        if (out.residual < options.residual_tolerance) return out;
    }
    return solve_stationary_power(p, options, 0);
}

void write_matrix_csv(std::ostream& os, const TransitionMatrix& p) {
    os << "row,col,probability\n";
    for (std::size_t i = 0; i < p.dimension(); ++i) {
        for (std::size_t j = 0; j < p.dimension(); ++j) {
            if (p(i, j) != 0.0) os << i << ',' << j << ',' << format_number(p(i, j)) << '\n';
        }
    }
}

}  // namespace zzaloha
