#pragma once

// Cooperative (team) model: a Markov chain over the number N of backlogged
// users, with all users sharing one retransmission probability.

#include <optional>
#include <vector>

#include "zzaloha/markov.hpp"
#include "zzaloha/model.hpp"
#include "zzaloha/optimize.hpp"

namespace zzaloha {

/// Stationary per-frame metrics of the team chain. Delays are in frames.
struct TeamMetrics {
    int num_users = 0;
    ChannelKind channel = ChannelKind::ZigZag;

    double throughput = 0.0;             // p_a (M - S_B)
    double event_throughput = 0.0;       // sum_N pi_N E[delivered | N]
    double avg_backlog = 0.0;            // S_B
    std::optional<double> delay;         // 1 + S_B / Th, absent when Th == 0
    double new_throughput = 0.0;         // T
    double backlog_throughput = 0.0;     // T-bar
    std::optional<double> backlog_delay; // 1 + S_B / T-bar, absent when T-bar vanishes
    double two_attempt_prob = 0.0;       // sum_N pi_N P(total = 2 | N) under ZigZag, 0 under Classic
    double expected_frame_len = 1.0;     // slots per frame
    double throughput_per_slot = 0.0;

    std::vector<double> stationary;      // pi over N = 0..M
};

/// Backlog throughput below this is treated as zero when forming the
/// backlogged-packet delay.
inline constexpr double kNegligibleThroughput = 1e-12;

/// Transition matrix over N = 0..M generated by enumerating every
/// (new attempts, retransmissions) pair and applying the outcome rules.
TransitionMatrix build_team_chain(const SystemParams& params, ChannelModel channel);

/// The ZigZag backlog chain exactly as its piecewise formula is usually
/// printed. It misplaces three terms and is not row-stochastic; it exists
/// to document that discrepancy and must not be used for metrics.
TransitionMatrix build_team_chain_printed(const SystemParams& params);

TeamMetrics team_metrics(const SystemParams& params, ChannelModel channel, const EngineOptions& options = {});

struct TeamOptimum {
    double retransmit_prob = 0.0;
    double throughput = 0.0;
    bool flat = false;
};

/// Maximizes the team throughput over the common retransmission
/// probability over [options.lower, options.upper].
TeamOptimum optimize_team(int num_users, double arrival_prob, ChannelModel channel,
                          const MaximizeOptions& options = {});

}  // namespace zzaloha
