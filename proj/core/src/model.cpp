#include "zzaloha/model.hpp"

#include <cctype>
#include <cmath>
#include <string>

#include "zzaloha/errors.hpp"

namespace zzaloha {

SystemParams::SystemParams(int num_users, double arrival_prob, double retransmit_prob)
    : num_users_(num_users), arrival_prob_(arrival_prob), retransmit_prob_(retransmit_prob) {
    if (num_users < 1) {
        throw ValidationError("num_users must be >= 1, got " + std::to_string(num_users));
    }
    if (!(arrival_prob >= 0.0 && arrival_prob <= 1.0)) {
        throw ValidationError("arrival probability must lie in [0, 1], got " + std::to_string(arrival_prob));
    }
    if (!(retransmit_prob > 0.0 && retransmit_prob <= 1.0)) {
        throw ValidationError("retransmission probability must lie in (0, 1], got " +
                              std::to_string(retransmit_prob));
    }
}

std::string_view to_string(ChannelKind kind) {
    return kind == ChannelKind::ZigZag ? "zigzag" : "classic";
}

ChannelKind parse_channel(std::string_view name) {
    std::string lower;
    for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "zigzag") return ChannelKind::ZigZag;
    if (lower == "classic") return ChannelKind::Classic;
    throw ValidationError("unknown channel '" + std::string(name) + "' (expected classic or zigzag)");
}

std::string_view to_string(OutcomeKind kind) {
    switch (kind) {
        case OutcomeKind::Idle: return "idle";
        case OutcomeKind::Success: return "success";
        case OutcomeKind::ZigZagResolved: return "zigzag";
        case OutcomeKind::Collision: return "collision";
    }
    return "?";
}

double binomial_coefficient(int n, int k) {
    if (k < 0 || k > n || n < 0) return 0.0;
    if (k > n - k) k = n - k;
    if (n <= 64) {
        double c = 1.0;
        for (int j = 1; j <= k; ++j) {
            c = c * static_cast<double>(n - k + j) / static_cast<double>(j);
        }
        return std::round(c);
    }
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

double binomial_pmf(int n, int k, double p) {
    if (k < 0 || k > n || n < 0) return 0.0;
    if (n <= 64) {
        // std::pow(0.0, 0) == 1, which is the convention we need at p in {0, 1}.
        return binomial_coefficient(n, k) * std::pow(p, k) * std::pow(1.0 - p, n - k);
    }
    if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
    if (p >= 1.0) return k == n ? 1.0 : 0.0;
    const double log_c = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    return std::exp(log_c + k * std::log(p) + (n - k) * std::log1p(-p));
}

double prob_new_attempts(int i, int backlog, const SystemParams& params) {
    const int m = params.num_users();
    if (backlog < 0 || backlog > m) {
        throw DomainError("backlog " + std::to_string(backlog) + " outside [0, " + std::to_string(m) + "]");
    }
    if (i < 0 || i > m - backlog) {
        throw DomainError("new-attempt count " + std::to_string(i) + " outside [0, " +
                          std::to_string(m - backlog) + "]");
    }
    return binomial_pmf(m - backlog, i, params.arrival_prob());
}

double prob_retx_attempts(int i, int backlog, const SystemParams& params) {
    if (backlog < 0) throw DomainError("negative backlog " + std::to_string(backlog));
    if (i < 0 || i > backlog) {
        throw DomainError("retransmission count " + std::to_string(i) + " outside [0, " +
                          std::to_string(backlog) + "]");
    }
    return binomial_pmf(backlog, i, params.retransmit_prob());
}

SlotOutcome classify_outcome(int new_attempts, int retx_attempts, ChannelModel channel) {
    if (new_attempts < 0 || retx_attempts < 0) throw DomainError("attempt counts must be non-negative");
    SlotOutcome out{OutcomeKind::Collision, new_attempts, retx_attempts};
    const int total = new_attempts + retx_attempts;
    if (total == 0) {
        out.kind = OutcomeKind::Idle;
    } else if (total == 1) {
        out.kind = OutcomeKind::Success;
    } else if (total == 2 && channel.max_resolvable() >= 2) {
        out.kind = OutcomeKind::ZigZagResolved;
    }
    return out;
}

BacklogDelta backlog_delta(const SlotOutcome& outcome) {
    switch (outcome.kind) {
        case OutcomeKind::Idle:
            return {};
        case OutcomeKind::Success:
        case OutcomeKind::ZigZagResolved:
            return {-outcome.retx_attempts, outcome.new_attempts, outcome.retx_attempts};
        case OutcomeKind::Collision:
            return {outcome.new_attempts, 0, 0};
    }
    return {};
}

}  // namespace zzaloha
