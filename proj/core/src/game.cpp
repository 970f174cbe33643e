#include "zzaloha/game.hpp"

#include <cmath>
#include <string>

#include "zzaloha/errors.hpp"
#include "zzaloha/format.hpp"

namespace zzaloha {

GameParams::GameParams(SystemParams others_, double tagged_retransmit_)
    : others(others_), tagged_retransmit(tagged_retransmit_) {
    if (!(tagged_retransmit > 0.0 && tagged_retransmit <= 1.0)) {
        throw ValidationError("tagged retransmission probability must lie in (0, 1], got " +
                              format_number(tagged_retransmit));
    }
}

namespace {

std::vector<std::string> game_labels(int m) {
    std::vector<std::string> labels;
    for (int n = 0; n <= m; ++n) {
        labels.push_back("N=" + std::to_string(n) + ",a=0");
        labels.push_back("N=" + std::to_string(n) + ",a=1");
    }
    return labels;
}

}  // namespace

GameChainKernel::GameChainKernel(const SystemParams& others, ChannelModel channel)
    : others_(others), channel_(channel), states_(2 * (static_cast<std::size_t>(others.num_users()) + 1)) {
    const int m = others.num_users();
    silent_.assign(static_cast<std::size_t>(m) + 1, std::vector<double>(states_, 0.0));
    transmit_.assign(static_cast<std::size_t>(m) + 1, std::vector<double>(states_, 0.0));
    silent_zigzag_.assign(static_cast<std::size_t>(m) + 1, 0.0);
    transmit_zigzag_.assign(static_cast<std::size_t>(m) + 1, 0.0);

    std::vector<double> qa;
    std::vector<double> qr;
    for (int n = 0; n <= m; ++n) {
        qa.resize(static_cast<std::size_t>(m - n) + 1);
        qr.resize(static_cast<std::size_t>(n) + 1);
        for (int i = 0; i <= m - n; ++i) qa[i] = binomial_pmf(m - n, i, others.arrival_prob());
        for (int j = 0; j <= n; ++j) qr[j] = binomial_pmf(n, j, others.retransmit_prob());

        auto& silent = silent_[static_cast<std::size_t>(n)];
        auto& transmit = transmit_[static_cast<std::size_t>(n)];
        for (int i = 0; i <= m - n; ++i) {
            for (int j = 0; j <= n; ++j) {
                const double w = qa[i] * qr[j];
                if (w == 0.0) continue;

                const SlotOutcome quiet_outcome = classify_outcome(i, j, channel);
                const BacklogDelta quiet = backlog_delta(quiet_outcome);
                silent[static_cast<std::size_t>(2 * (n + quiet.delta_backlog))] += w;
                if (quiet_outcome.kind == OutcomeKind::ZigZagResolved) silent_zigzag_[static_cast<std::size_t>(n)] += w;

                // The tagged packet counts toward the outcome; which bucket it
                // sits in does not change the classification.
                const OutcomeKind kind = classify_outcome(i + 1, j, channel).kind;
                const BacklogDelta loud = backlog_delta(SlotOutcome{kind, i, j});
                const int tagged_next = kind == OutcomeKind::Collision ? 1 : 0;
                transmit[static_cast<std::size_t>(2 * (n + loud.delta_backlog) + tagged_next)] += w;
                if (kind == OutcomeKind::ZigZagResolved) transmit_zigzag_[static_cast<std::size_t>(n)] += w;
            }
        }
    }
}

TransitionMatrix GameChainKernel::matrix(double tagged_retransmit) const {
    if (!(tagged_retransmit > 0.0 && tagged_retransmit <= 1.0)) {
        throw ValidationError("tagged retransmission probability must lie in (0, 1]");
    }
    const int m = others_.num_users();
    const double pa = others_.arrival_prob();
    TransitionMatrix p(states_, game_labels(m));
    for (int n = 0; n <= m; ++n) {
        const auto& silent = silent_[static_cast<std::size_t>(n)];
        const auto& transmit = transmit_[static_cast<std::size_t>(n)];
        for (int a = 0; a <= 1; ++a) {
            const double tx = a == 0 ? pa : tagged_retransmit;
            auto row = p.row(GameState{n, a}.index());
            for (std::size_t k = 0; k < states_; k += 2) {
                row[k + static_cast<std::size_t>(a)] += (1.0 - tx) * silent[k];
            }
            for (std::size_t k = 0; k < states_; ++k) row[k] += tx * transmit[k];
        }
    }
    return p;
}

TaggedMetrics GameChainKernel::metrics(double tagged_retransmit, const EngineOptions& options) const {
    StationaryDist pi = solve_stationary(matrix(tagged_retransmit), options);
    TaggedMetrics out;
    out.num_others = others_.num_users();
    out.channel = channel_.kind;
    double unbacklogged = 0.0;
    double zigzag = 0.0;
    for (std::size_t k = 0; k < pi.size(); ++k) {
        const GameState s = GameState::from_index(k);
        const double tx = s.tagged_backlogged ? tagged_retransmit : others_.arrival_prob();
        const auto n = static_cast<std::size_t>(s.n_backlogged);
        zigzag += pi[k] * ((1.0 - tx) * silent_zigzag_[n] + tx * transmit_zigzag_[n]);
        if (s.tagged_backlogged) {
            out.backlog_prob += pi[k];
        } else {
            unbacklogged += pi[k];
        }
        out.others_avg_backlog += s.n_backlogged * pi[k];
    }
    out.throughput = others_.arrival_prob() * unbacklogged;
    out.expected_frame_len = 1.0 + zigzag;
    if (out.throughput > 0.0) out.delay = 1.0 + out.backlog_prob / out.throughput;
    out.stationary = std::move(pi.probabilities);
    return out;
}

TransitionMatrix build_game_chain(const GameParams& game, ChannelModel channel) {
    return GameChainKernel(game.others, channel).matrix(game.tagged_retransmit);
}

TaggedMetrics tagged_metrics(const GameParams& game, ChannelModel channel, const EngineOptions& options) {
    return GameChainKernel(game.others, channel).metrics(game.tagged_retransmit, options);
}

BestResponse best_response(int num_others, double arrival_prob, double others_retransmit, ChannelModel channel,
                           const MaximizeOptions& options) {
    const GameChainKernel kernel(SystemParams(num_others, arrival_prob, others_retransmit), channel);
    const auto objective = [&](double q) { return kernel.metrics(q).throughput; };
    const ScalarMaximum best = maximize_scalar(objective, options);
    return {best.arg, best.value, best.flat};
}

namespace {

BrSample sample_br(int m, double pa, double q, ChannelModel channel, const MaximizeOptions& options) {
    const BestResponse br = best_response(m, pa, q, channel, options);
    return {q, br.retransmit_prob, br.throughput, br.flat};
}

double gap(const BrSample& s) { return s.flat ? 0.0 : s.best_response - s.q; }

double symmetric_throughput(int m, double pa, double q, ChannelModel channel) {
    return GameChainKernel(SystemParams(m, pa, q), channel).metrics(q).throughput;
}

}  // namespace

EquilibriumResult find_equilibrium(int num_others, double arrival_prob, ChannelModel channel,
                                   const EquilibriumOptions& options) {
    if (!(options.scan_step > 0.0 && options.scan_step <= 1.0)) throw ValidationError("scan step must be in (0, 1]");
    EquilibriumResult result;

    const long steps = std::lround(1.0 / options.scan_step);
    for (long k = 1; k <= steps; ++k) {
        const double q = k == steps ? 1.0 : static_cast<double>(k) * options.scan_step;
        result.br_curve.push_back(sample_br(num_others, arrival_prob, q, channel, options.maximize));
    }

    const auto add_fixed_point = [&](const BrSample& s) {
        result.fixed_points.push_back({s.q, std::abs(gap(s)),
                                       symmetric_throughput(num_others, arrival_prob, s.q, channel), s.flat});
    };

    const auto& curve = result.br_curve;
    for (std::size_t k = 0; k < curve.size(); ++k) {
        const double g = gap(curve[k]);
        const bool at_boundary = k + 1 == curve.size();
        if (g == 0.0 || (at_boundary && std::abs(g) <= options.boundary_tolerance)) {
            add_fixed_point(curve[k]);
            continue;
        }
        if (at_boundary) break;
        const double g_next = gap(curve[k + 1]);
        if (g_next == 0.0 || (g > 0.0) == (g_next > 0.0)) continue;

        // Bisection on g(q) = BR(q) - q, continued past the target width
        // until the residual also meets it (or the bracket collapses).
        double lo = curve[k].q;
        double hi = curve[k + 1].q;
        const bool positive_at_lo = g > 0.0;
        BrSample at_mid;
        for (;;) {
            at_mid = sample_br(num_others, arrival_prob, 0.5 * (lo + hi), channel, options.maximize);
            const double g_mid = gap(at_mid);
            if (g_mid == 0.0) break;
            const double width = hi - lo;
            if (width <= options.bisection_width && std::abs(g_mid) <= options.bisection_width) break;
            if (width <= 1e-9) break;
            if ((g_mid > 0.0) == positive_at_lo) {
                lo = at_mid.q;
            } else {
                hi = at_mid.q;
            }
        }
        if (std::abs(gap(at_mid)) <= options.accept_residual) {
            add_fixed_point(at_mid);
        } else {
            result.jumps.push_back(at_mid.q);
        }
    }

    if (result.fixed_points.empty()) {
        throw NoEquilibriumError("no symmetric equilibrium found for M=" + std::to_string(num_others) +
                                     ", p_a=" + format_number(arrival_prob) + ", channel " +
                                     std::string(to_string(channel.kind)),
                                 result.br_curve);
    }

    const double tie = options.maximize.flat_tolerance;
    const FixedPoint* best = &result.fixed_points.front();
    for (const auto& fp : result.fixed_points) {
        if (fp.tagged_throughput > best->tagged_throughput + tie ||
            (std::abs(fp.tagged_throughput - best->tagged_throughput) <= tie && fp.q > best->q)) {
            best = &fp;
        }
    }
    result.q_star = best->q;
    result.br_residual = best->residual;
    result.tagged_throughput = best->tagged_throughput;
    result.multiple = result.fixed_points.size() > 1;
    return result;
}

}  // namespace zzaloha
