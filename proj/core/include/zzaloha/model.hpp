#pragma once

// System parameters, binomial attempt distributions and the slot outcome
// rules shared by the analytic chains and the simulator.

#include <cstdint>
#include <string_view>

namespace zzaloha {

/// Population of M users, each holding at most one packet.
///
/// An unbacklogged user gets a new packet (and transmits it) with
/// probability `arrival_prob` per frame; a backlogged user retransmits with
/// probability `retransmit_prob`.
class SystemParams {
public:
    /// Throws ValidationError unless num_users >= 1, arrival_prob in [0, 1]
    /// and retransmit_prob in (0, 1].
    SystemParams(int num_users, double arrival_prob, double retransmit_prob);

    int num_users() const noexcept { return num_users_; }
    double arrival_prob() const noexcept { return arrival_prob_; }
    double retransmit_prob() const noexcept { return retransmit_prob_; }

    SystemParams with_retransmit_prob(double q) const { return {num_users_, arrival_prob_, q}; }
    SystemParams with_num_users(int m) const { return {m, arrival_prob_, retransmit_prob_}; }

    friend bool operator==(const SystemParams&, const SystemParams&) = default;

private:
    int num_users_;
    double arrival_prob_;
    double retransmit_prob_;
};

enum class ChannelKind { Classic, ZigZag };

std::string_view to_string(ChannelKind kind);
/// Accepts "classic" / "zigzag" (case-insensitive). Throws ValidationError.
ChannelKind parse_channel(std::string_view name);

enum class OutcomeKind { Idle, Success, ZigZagResolved, Collision };

std::string_view to_string(OutcomeKind kind);

/// Receiver decoding capability. A ZigZag receiver decodes up to two
/// simultaneous packets, at the price of a two-slot frame.
struct ChannelModel {
    ChannelKind kind = ChannelKind::ZigZag;

    constexpr int max_resolvable() const noexcept { return kind == ChannelKind::ZigZag ? 2 : 1; }

    constexpr int frame_slots(OutcomeKind outcome) const noexcept {
        return outcome == OutcomeKind::ZigZagResolved ? 2 : 1;
    }

    static constexpr ChannelModel classic() { return {ChannelKind::Classic}; }
    static constexpr ChannelModel zigzag() { return {ChannelKind::ZigZag}; }

    friend bool operator==(const ChannelModel&, const ChannelModel&) = default;
};

struct SlotOutcome {
    OutcomeKind kind = OutcomeKind::Idle;
    int new_attempts = 0;
    int retx_attempts = 0;

    int total() const noexcept { return new_attempts + retx_attempts; }
};

struct BacklogDelta {
    int delta_backlog = 0;
    int delivered_new = 0;
    int delivered_retx = 0;

    int delivered() const noexcept { return delivered_new + delivered_retx; }

    friend bool operator==(const BacklogDelta&, const BacklogDelta&) = default;
};

/// C(n, k) as a double. Multiplicative recurrence for n <= 64, log-gamma
/// beyond. Returns 0 for k < 0 or k > n.
double binomial_coefficient(int n, int k);

/// C(n, k) p^k (1-p)^(n-k) with 0^0 = 1. Returns 0 outside 0 <= k <= n.
double binomial_pmf(int n, int k, double p);

/// Probability that exactly `i` of the M - N unbacklogged users transmit.
/// Throws DomainError unless 0 <= N <= M and 0 <= i <= M - N.
double prob_new_attempts(int i, int backlog, const SystemParams& params);

/// Probability that exactly `i` of the N backlogged users retransmit.
/// Throws DomainError unless 0 <= i <= N.
double prob_retx_attempts(int i, int backlog, const SystemParams& params);

/// Classify a frame by its total number of attempts.
/// Throws DomainError on negative counts.
SlotOutcome classify_outcome(int new_attempts, int retx_attempts, ChannelModel channel);

/// Effect of a frame on the backlog: collided new packets join the
/// backlog, decoded packets leave the system.
BacklogDelta backlog_delta(const SlotOutcome& outcome);

}  // namespace zzaloha
