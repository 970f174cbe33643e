#pragma once

// Non-cooperative model: M "other" users sharing one retransmission
// probability plus a tagged user M+1 with its own. The chain state is
// (N, a): N backlogged others, a = 1 when the tagged user is backlogged.

#include <optional>
#include <stdexcept>
#include <vector>

#include "zzaloha/markov.hpp"
#include "zzaloha/model.hpp"
#include "zzaloha/optimize.hpp"

namespace zzaloha {

struct GameParams {
    SystemParams others;       // M, p_a and the others' q_r
    double tagged_retransmit;  // q_r of user M+1

    /// Throws ValidationError unless tagged_retransmit lies in (0, 1].
    GameParams(SystemParams others_, double tagged_retransmit_);
};

struct GameState {
    int n_backlogged = 0;
    int tagged_backlogged = 0;

    std::size_t index() const noexcept { return static_cast<std::size_t>(2 * n_backlogged + tagged_backlogged); }
    static GameState from_index(std::size_t i) noexcept {
        return {static_cast<int>(i / 2), static_cast<int>(i % 2)};
    }

    friend bool operator==(const GameState&, const GameState&) = default;
};

struct TaggedMetrics {
    int num_others = 0;
    ChannelKind channel = ChannelKind::ZigZag;

    double backlog_prob = 0.0;    // sum_N pi_{N,1}
    double throughput = 0.0;      // p_a sum_N pi_{N,0}
    std::optional<double> delay;  // 1 + backlog_prob / throughput, frames
    double others_avg_backlog = 0.0;
    double expected_frame_len = 1.0;  // slots per frame

    std::vector<double> stationary;  // indexed by GameState::index()
};

/// Precomputes the others' transition structure for fixed (M, p_a, q_r of
/// the others, channel) so the chain can be rebuilt cheaply for any tagged
/// retransmission probability.
class GameChainKernel {
public:
    GameChainKernel(const SystemParams& others, ChannelModel channel);

    TransitionMatrix matrix(double tagged_retransmit) const;
    TaggedMetrics metrics(double tagged_retransmit, const EngineOptions& options = {}) const;

    const SystemParams& others() const noexcept { return others_; }
    ChannelModel channel() const noexcept { return channel_; }

private:
    SystemParams others_;
    ChannelModel channel_;
    std::size_t states_;
    // Per N: next-state distribution over (N', a') when the tagged user
    // stays silent (tagged component left unchanged, stored at a' = 0) and
    // when it transmits.
    std::vector<std::vector<double>> silent_;
    std::vector<std::vector<double>> transmit_;
    // Per N: probability of a two-slot (ZigZag) frame in each case.
    std::vector<double> silent_zigzag_;
    std::vector<double> transmit_zigzag_;
};

TransitionMatrix build_game_chain(const GameParams& game, ChannelModel channel);

TaggedMetrics tagged_metrics(const GameParams& game, ChannelModel channel, const EngineOptions& options = {});

struct BestResponse {
    double retransmit_prob = 0.0;
    double throughput = 0.0;
    bool flat = false;
};

/// Tagged user's throughput-maximizing retransmission probability against
/// others who all retransmit with `others_retransmit`.
BestResponse best_response(int num_others, double arrival_prob, double others_retransmit, ChannelModel channel,
                           const MaximizeOptions& options = {});

struct BrSample {
    double q = 0.0;
    double best_response = 0.0;
    double tagged_throughput = 0.0;  // at the best response
    bool flat = false;               // every q is a best response
};

struct FixedPoint {
    double q = 0.0;
    double residual = 0.0;           // |BR(q) - q|
    double tagged_throughput = 0.0;  // all M+1 users at q
    /// The tagged objective is flat at q, so q is a best response only in
    /// the weak sense (typically the zero-throughput deadlock near q = 1).
    bool degenerate = false;
};

struct EquilibriumOptions {
    double scan_step = 0.01;
    double bisection_width = 1e-5;
    /// A bracketed sign change is a fixed point only when the residual at
    /// its midpoint is at most this; larger values are jumps of BR.
    double accept_residual = 1e-4;
    double boundary_tolerance = 1e-5;
    MaximizeOptions maximize;
};

struct EquilibriumResult {
    double q_star = 0.0;
    double br_residual = 0.0;
    double tagged_throughput = 0.0;
    std::vector<FixedPoint> fixed_points;
    std::vector<double> jumps;  // sign changes of BR(q) - q that are not fixed points
    std::vector<BrSample> br_curve;
    bool multiple = false;
};

class NoEquilibriumError : public std::runtime_error {
public:
    NoEquilibriumError(const std::string& what, std::vector<BrSample> curve)
        : std::runtime_error(what), curve_(std::move(curve)) {}

    const std::vector<BrSample>& br_curve() const noexcept { return curve_; }

private:
    std::vector<BrSample> curve_;
};

/// Symmetric equilibria: fixed points of q -> BR(q). A scan point where the
/// tagged objective is flat counts as a fixed point, since q is then among
/// the maximizers. Among several fixed points the one with the highest
/// tagged throughput is reported as q_star; throughputs within the flat
/// tolerance tie, and ties go to the larger q.
EquilibriumResult find_equilibrium(int num_others, double arrival_prob, ChannelModel channel,
                                   const EquilibriumOptions& options = {});

}  // namespace zzaloha
