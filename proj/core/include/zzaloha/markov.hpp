#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace zzaloha {

/// Dense square matrix of transition probabilities, row-indexed by source
/// state. Construction does not enforce stochasticity: use validate_rows()
/// or let solve_stationary() reject it.
class TransitionMatrix {
public:
    TransitionMatrix() = default;
    explicit TransitionMatrix(std::size_t dimension, std::vector<std::string> labels = {});

    std::size_t dimension() const noexcept { return n_; }

    double operator()(std::size_t from, std::size_t to) const noexcept { return entries_[from * n_ + to]; }
    double& operator()(std::size_t from, std::size_t to) noexcept { return entries_[from * n_ + to]; }

    std::span<const double> row(std::size_t from) const noexcept { return {entries_.data() + from * n_, n_}; }
    std::span<double> row(std::size_t from) noexcept { return {entries_.data() + from * n_, n_}; }

    const std::vector<std::string>& labels() const noexcept { return labels_; }
    const std::string& label(std::size_t state) const { return labels_.at(state); }

private:
    std::size_t n_ = 0;
    std::vector<double> entries_;
    std::vector<std::string> labels_;
};

struct EngineOptions {
    double row_tolerance = 1e-10;
    double residual_tolerance = 1e-9;
    double power_tolerance = 1e-12;
    long max_power_iterations = 1'000'000;
    /// Relative pivot magnitude under which the direct system is singular.
    double singular_pivot = 1e-13;
};

enum class SolveMethod { Direct, PowerIteration };

struct StationaryDist {
    std::vector<double> probabilities;
    /// max_j |(pi P)_j - pi_j|
    double residual = 0.0;
    SolveMethod method = SolveMethod::Direct;
    long iterations = 0;

    double operator[](std::size_t i) const { return probabilities[i]; }
    std::size_t size() const noexcept { return probabilities.size(); }
};

struct RowDefect {
    std::size_t row;
    /// 1 - (row sum); positive when mass is missing.
    double deviation;
};

/// Rows whose sum differs from 1 by more than `tolerance`, with signed deviation.
std::vector<RowDefect> validate_rows(const TransitionMatrix& p, double tolerance = 1e-10);

/// max_j |(pi P)_j - pi_j|
double stationary_residual(const TransitionMatrix& p, std::span<const double> pi);

/// Stationary distribution of a row-stochastic matrix.
///
/// One balance equation is replaced by the normalization constraint and the
/// system is solved by Gaussian elimination with partial pivoting. When that
/// system is singular (several closed classes) the result is the
/// power-iteration limit started from state 0.
///
/// Throws ValidationError for a non-stochastic input and ConvergenceError
/// when neither route reaches the residual tolerance.
StationaryDist solve_stationary(const TransitionMatrix& p, const EngineOptions& options = {});

/// Direct route only; throws ConvergenceError if the system is singular.
StationaryDist solve_stationary_direct(const TransitionMatrix& p, const EngineOptions& options = {});

/// Power iteration from the point mass on `start`.
StationaryDist solve_stationary_power(const TransitionMatrix& p, const EngineOptions& options = {},
                                      std::size_t start = 0);

/// "row,col,probability" CSV with header; zero entries are skipped.
void write_matrix_csv(std::ostream& os, const TransitionMatrix& p);

}  // namespace zzaloha
