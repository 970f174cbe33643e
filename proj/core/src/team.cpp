#include "zzaloha/team.hpp"

#include <string>

#include "zzaloha/errors.hpp"

namespace zzaloha {

namespace {

std::vector<std::string> backlog_labels(int m) {
    std::vector<std::string> labels;
    labels.reserve(static_cast<std::size_t>(m) + 1);
    for (int n = 0; n <= m; ++n) labels.push_back("N=" + std::to_string(n));
    return labels;
}

// Attempt distributions of one chain row.
struct RowTables {
    std::vector<double> new_attempts;   // index i = 0..M-N
    std::vector<double> retx_attempts;  // index j = 0..N
};

RowTables row_tables(const SystemParams& params, int backlog) {
    const int m = params.num_users();
    RowTables t;
    t.new_attempts.resize(static_cast<std::size_t>(m - backlog) + 1);
    t.retx_attempts.resize(static_cast<std::size_t>(backlog) + 1);
    for (int i = 0; i <= m - backlog; ++i) t.new_attempts[i] = binomial_pmf(m - backlog, i, params.arrival_prob());
    for (int j = 0; j <= backlog; ++j) t.retx_attempts[j] = binomial_pmf(backlog, j, params.retransmit_prob());
    return t;
}

}  // namespace

TransitionMatrix build_team_chain(const SystemParams& params, ChannelModel channel) {
    const int m = params.num_users();
    TransitionMatrix p(static_cast<std::size_t>(m) + 1, backlog_labels(m));
    for (int n = 0; n <= m; ++n) {
        const RowTables t = row_tables(params, n);
        auto row = p.row(static_cast<std::size_t>(n));
        for (int i = 0; i <= m - n; ++i) {
            if (t.new_attempts[i] == 0.0) continue;
            for (int j = 0; j <= n; ++j) {
                const double w = t.new_attempts[i] * t.retx_attempts[j];
                if (w == 0.0) continue;
                const BacklogDelta d = backlog_delta(classify_outcome(i, j, channel));
                row[static_cast<std::size_t>(n + d.delta_backlog)] += w;
            }
        }
    }
    return p;
}

TransitionMatrix build_team_chain_printed(const SystemParams& params) {
    const int m = params.num_users();
    TransitionMatrix p(static_cast<std::size_t>(m) + 1, backlog_labels(m));
    for (int n = 0; n <= m; ++n) {
        const RowTables t = row_tables(params, n);
        auto qa = [&](int i) { return i <= m - n ? t.new_attempts[i] : 0.0; };
        auto qr = [&](int j) { return j <= n ? t.retx_attempts[j] : 0.0; };
        auto add = [&](int shift, double w) {
            const int target = n + shift;
            if (w == 0.0) return;
            if (target < 0 || target > m) throw ValidationError("literal chain puts mass outside the state space");
            p(static_cast<std::size_t>(n), static_cast<std::size_t>(target)) += w;
        };
        for (int i = 3; i <= m - n; ++i) add(i, qa(i));
        add(2, qa(2) * (1.0 - qr(0)));
        add(1, qa(1) * (1.0 - qr(0) - qr(1)));
        add(0, qa(0) * (1.0 - (qr(1) + qr(2))) + (qr(1) + qr(0)) * qa(1) + qa(0) * qr(2));
        add(-1, qa(0) * qr(1));
        add(-2, qa(0) * qr(2));
    }
    return p;
}

TeamMetrics team_metrics(const SystemParams& params, ChannelModel channel, const EngineOptions& options) {
    const int m = params.num_users();
    const TransitionMatrix p = build_team_chain(params, channel);
    StationaryDist pi = solve_stationary(p, options);

    TeamMetrics out;
    out.num_users = m;
    out.channel = channel.kind;
    for (int n = 0; n <= m; ++n) {
        const double w_state = pi[static_cast<std::size_t>(n)];
        out.avg_backlog += n * w_state;
        if (w_state == 0.0) continue;
        const RowTables t = row_tables(params, n);
        for (int i = 0; i <= m - n; ++i) {
            for (int j = 0; j <= n; ++j) {
                const double w = w_state * t.new_attempts[i] * t.retx_attempts[j];
                if (w == 0.0) continue;
                const SlotOutcome o = classify_outcome(i, j, channel);
                const BacklogDelta d = backlog_delta(o);
                out.event_throughput += w * d.delivered();
                out.new_throughput += w * d.delivered_new;
                out.backlog_throughput += w * d.delivered_retx;
                if (o.kind == OutcomeKind::ZigZagResolved) out.two_attempt_prob += w;
            }
        }
    }
    out.throughput = params.arrival_prob() * (m - out.avg_backlog);
    if (out.throughput > 0.0) out.delay = 1.0 + out.avg_backlog / out.throughput;
    if (out.backlog_throughput > kNegligibleThroughput) {
        out.backlog_delay = 1.0 + out.avg_backlog / out.backlog_throughput;
    }
    out.expected_frame_len = 1.0 + out.two_attempt_prob;
    out.throughput_per_slot = out.throughput / out.expected_frame_len;
    out.stationary = std::move(pi.probabilities);
    return out;
}

TeamOptimum optimize_team(int num_users, double arrival_prob, ChannelModel channel, const MaximizeOptions& options) {
    if (!(arrival_prob > 0.0 && arrival_prob <= 1.0)) {
        throw ValidationError("team optimization requires 0 < p_a <= 1");
    }
    const auto objective = [&](double q) {
        return team_metrics(SystemParams(num_users, arrival_prob, q), channel).throughput;
    };
    const ScalarMaximum best = maximize_scalar(objective, options);
    return {best.arg, best.value, best.flat};
}

}  // namespace zzaloha
