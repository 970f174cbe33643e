#pragma once

// Parameter sweeps, figure reproduction and the invariant validation suite
// behind the zzaloha command-line tool.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "zzaloha/model.hpp"

namespace zzaloha {

/// Bad command-line or experiment specification.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// One sweep axis: a scalar, a comma list, or an inclusive start:stop:step range.
class Axis {
public:
    Axis() = default;
    explicit Axis(double scalar) : values_{scalar} {}
    explicit Axis(std::vector<double> values);

    /// Throws UsageError on malformed text, step <= 0 or an empty range.
    static Axis parse(std::string_view text);

    const std::vector<double>& values() const noexcept { return values_; }
    bool swept() const noexcept { return values_.size() > 1; }
    double front() const { return values_.at(0); }
    std::string text() const { return text_; }

private:
    std::vector<double> values_;
    std::string text_;
};

enum class Mode { Team, Game, BestResponse, Equilibrium, Optimize, Simulate, Figure };
enum class Normalization { Frame, Slot };
enum class FigureId { Fig3, Fig4, Fig5, Fig6, Fig7, Fig8, Fig9, Fig10 };

std::string_view to_string(Mode mode);
std::string_view to_string(FigureId id);
/// "fig3".."fig10"; throws UsageError otherwise.
FigureId parse_figure(std::string_view name);

struct ExperimentSpec {
    Mode mode = Mode::Team;
    Axis num_users{5};
    Axis arrival_prob{0.3};
    Axis retransmit_prob{0.5};
    std::optional<Axis> tagged_retransmit;
    std::vector<ChannelKind> channels{ChannelKind::ZigZag, ChannelKind::Classic};
    Normalization normalization = Normalization::Frame;
    std::uint64_t seed = 20140601;
    long frames = 1'000'000;
    long warmup = 10'000;
    unsigned workers = 0;  // 0: hardware concurrency
    std::optional<FigureId> figure;
    /// Figure mode: evaluate at this fixed q_r instead of the per-point
    /// equilibrium (game figures) or team optimum (team figures).
    bool fixed_retransmit = false;

    void validate() const;
};

/// The sweep bound to a figure, before any user overrides.
ExperimentSpec figure_spec(FigureId id);

struct ExperimentTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::size_t failed_rows = 0;
    /// Defaults and choices not visible in the table, for the sidecar.
    std::vector<std::pair<std::string, std::string>> notes;
};

/// Marker for a quantity that is undefined at a point (e.g. a delay with
/// zero throughput).
inline constexpr std::string_view kUndefined = "undefined";
/// Marker for a metric whose evaluation failed.
inline constexpr std::string_view kError = "error";

/// Evaluates the spec at every grid point. Rows come back in grid order.
ExperimentTable run_experiment(const ExperimentSpec& spec);

/// figure_spec(id) evaluated with run_experiment.
ExperimentTable reproduce_figure(FigureId id);

void write_csv(std::ostream& os, const ExperimentTable& table);
void write_json(std::ostream& os, const ExperimentTable& table);
/// Spec, tool version, timing and table notes as a JSON object.
std::string sidecar_json(const ExperimentSpec& spec, const ExperimentTable& table, double elapsed_seconds);

struct ValidationGrid {
    std::vector<int> num_users{1, 2, 3, 5, 10, 12};
    std::vector<double> arrival_probs{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<double> retransmit_probs{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    bool include_literal = false;
    long sim_frames = 1'000'000;
    std::uint64_t seed = 20140601;
};

struct CheckResult {
    std::string name;
    bool passed = true;
    std::size_t cases = 0;
    std::string detail;
    /// Expected failure (negative control); does not affect the exit status.
    bool known_discrepancy = false;
};

struct ValidationSummary {
    std::vector<CheckResult> checks;

    bool ok() const;
};

/// Runs the invariant suite over the grid. Throws UsageError on an empty grid.
ValidationSummary validate_all(const ValidationGrid& grid);

void print_summary(std::ostream& os, const ValidationSummary& summary);

std::string_view tool_version();

}  // namespace zzaloha
