#pragma once

// Frame-level Monte Carlo simulation of slotted Aloha with an optional
// ZigZag receiver. It shares only the outcome rules (classify_outcome,
// backlog_delta) with the analytic chains and serves as their oracle.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "zzaloha/game.hpp"
#include "zzaloha/model.hpp"
#include "zzaloha/team.hpp"

namespace zzaloha {

struct SimConfig {
    SystemParams params;
    ChannelModel channel;
    long horizon_frames = 1'000'000;
    long warmup_frames = 10'000;
    std::uint64_t seed = 1;
    int batches = 50;
    /// When set, a tagged user M+1 with this retransmission probability is
    /// added and occupancy is tracked over (N, a) like the game chain.
    std::optional<double> tagged_retransmit;

    /// Throws ValidationError unless horizon > warmup >= 0, batches >= 2 and
    /// every batch holds at least one frame.
    void validate() const;
};

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
};

struct SimReport {
    std::string generator;
    std::uint64_t seed = 0;
    int batches = 0;
    long measured_frames = 0;
    long measured_slots = 0;

    Estimate throughput_per_frame;
    Estimate throughput_per_slot;
    Estimate avg_backlog;           // backlogged users among 1..M at frame start
    Estimate delay_frames;          // first attempt through delivery, inclusive
    Estimate backlog_delay_frames;  // same, packets that were ever backlogged
    std::optional<Estimate> tagged_throughput;
    std::optional<Estimate> tagged_backlog_prob;
    /// Empirical distribution over chain states (N, or 2N + a with a tagged user).
    std::vector<Estimate> state_occupancy;

    // Whole-run counters, warmup included.
    long arrivals = 0;
    long deliveries = 0;
    long final_backlog = 0;
    long collisions = 0;
    long zigzag_frames = 0;
};

/// Runs the simulation. With a non-null `trace`, writes one CSV line per
/// frame: frame,slots_elapsed,attempts,outcome,backlog.
SimReport run_sim(const SimConfig& config, std::ostream* trace = nullptr);

std::string to_json(const SimReport& report);

struct Discrepancy {
    std::string metric;
    double simulated = 0.0;
    double analytic = 0.0;
    double std_error = 0.0;
    double z = 0.0;
};

struct DiscrepancyReport {
    std::vector<Discrepancy> entries;
    double threshold = 3.0;
    bool pass = true;

    double max_z() const;
};

/// Per-metric z-scores |sim - analytic| / SE. With SE = 0, z is 0 when the
/// values agree to 1e-9 (relative above 1) and infinite otherwise.
/// Standard errors of throughput, backlog and occupancy are floored at the
/// i.i.d. value sqrt(Var / frames) implied by the chain, so a run that never
/// left a nearly absorbing state does not report a zero error.
/// Delays are compared only when the chain predicts at least 100 matching
/// deliveries per batch.
/// Throws ValidationError when the report and the metrics describe
/// different populations, channels or state spaces.
DiscrepancyReport compare_to_chain(const SimConfig& config, const SimReport& report, const TeamMetrics& metrics,
                                   double threshold = 3.0);
DiscrepancyReport compare_to_chain(const SimConfig& config, const SimReport& report, const TaggedMetrics& metrics,
                                   double threshold = 3.0);

/// Runs the simulation for `config`, then compares.
DiscrepancyReport compare_to_chain(const SimConfig& config, const TeamMetrics& metrics, double threshold = 3.0);
DiscrepancyReport compare_to_chain(const SimConfig& config, const TaggedMetrics& metrics, double threshold = 3.0);

}  // namespace zzaloha
