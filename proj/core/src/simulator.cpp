#include "zzaloha/simulator.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include <json.hpp>

#include "zzaloha/errors.hpp"

namespace zzaloha {

void SimConfig::validate() const {
    if (warmup_frames < 0) throw ValidationError("warmup must be non-negative");
    if (horizon_frames <= warmup_frames) throw ValidationError("horizon must exceed warmup");
    if (batches < 2) throw ValidationError("at least two batches are required for standard errors");
    if (horizon_frames - warmup_frames < batches) {
        throw ValidationError("measured horizon must hold at least one frame per batch");
    }
    if (tagged_retransmit && !(*tagged_retransmit > 0.0 && *tagged_retransmit <= 1.0)) {
        throw ValidationError("tagged retransmission probability must lie in (0, 1]");
    }
}

namespace {

struct User {
    bool backlogged = false;
    bool was_backlogged = false;
    long first_frame = 0;
};

struct Batch {
    long frames = 0;
    long slots = 0;
    long deliveries = 0;
    long backlog_sum = 0;
    double delay_sum = 0.0;
    long delay_count = 0;
    double backlog_delay_sum = 0.0;
    long backlog_delay_count = 0;
    long tagged_deliveries = 0;
    long tagged_backlogged = 0;
    std::vector<long> occupancy;
};

// Uniform double in [0, 1) from the top 53 bits; fixed across platforms,
// unlike std::uniform_real_distribution.
double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

double std_error(const std::vector<double>& values) {
    const auto n = values.size();
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

template <typename Num, typename Den>
Estimate ratio_estimate(const std::vector<Batch>& batches, Num num, Den den) {
    double total_num = 0.0;
    double total_den = 0.0;
    std::vector<double> per_batch;
    per_batch.reserve(batches.size());
    for (const auto& b : batches) {
        const double n = num(b);
        const double d = den(b);
        total_num += n;
        total_den += d;
        if (d > 0.0) per_batch.push_back(n / d);
    }
    if (total_den <= 0.0) return {};
    return {total_num / total_den, std_error(per_batch)};
}

}  // namespace

SimReport run_sim(const SimConfig& config, std::ostream* trace) {
    config.validate();
    const int m = config.params.num_users();
    const bool tagged = config.tagged_retransmit.has_value();
    const int users = tagged ? m + 1 : m;
    const double pa = config.params.arrival_prob();
    const std::size_t states = tagged ? 2 * (static_cast<std::size_t>(m) + 1) : static_cast<std::size_t>(m) + 1;

    std::vector<double> retx_prob(static_cast<std::size_t>(users), config.params.retransmit_prob());
    if (tagged) retx_prob.back() = *config.tagged_retransmit;

    std::mt19937_64 gen(config.seed);
    std::vector<User> pop(static_cast<std::size_t>(users));
    std::vector<Batch> batches(static_cast<std::size_t>(config.batches));
    for (auto& b : batches) b.occupancy.assign(states, 0);

    SimReport report;
    report.generator = "std::mt19937_64";
    report.seed = config.seed;
    report.batches = config.batches;

    const long measured = config.horizon_frames - config.warmup_frames;
    long others_backlog = 0;
    long slots_elapsed = 0;
    std::vector<int> transmitters;
    transmitters.reserve(static_cast<std::size_t>(users));
    if (trace) *trace << "frame,slots_elapsed,attempts,outcome,backlog\n";

    for (long frame = 0; frame < config.horizon_frames; ++frame) {
        const bool measuring = frame >= config.warmup_frames;
        Batch* batch = nullptr;
        if (measuring) {
            const long j = frame - config.warmup_frames;
            batch = &batches[static_cast<std::size_t>(j * config.batches / measured)];
            const int tagged_state = tagged && pop.back().backlogged ? 1 : 0;
            const auto state = tagged ? static_cast<std::size_t>(2 * others_backlog + tagged_state)
                                      : static_cast<std::size_t>(others_backlog);
            ++batch->frames;
            batch->backlog_sum += others_backlog;
            batch->occupancy[state] += 1;
            batch->tagged_backlogged += tagged_state;
        }

        transmitters.clear();
        int new_attempts = 0;
        int retx_attempts = 0;
        for (int u = 0; u < users; ++u) {
            User& user = pop[static_cast<std::size_t>(u)];
            const double p = user.backlogged ? retx_prob[static_cast<std::size_t>(u)] : pa;
            if (!(uniform01(gen) < p)) continue;
            transmitters.push_back(u);
            if (user.backlogged) {
                ++retx_attempts;
            } else {
                ++new_attempts;
                ++report.arrivals;
                user.first_frame = frame;
                user.was_backlogged = false;
            }
        }

        const SlotOutcome outcome = classify_outcome(new_attempts, retx_attempts, config.channel);
        const BacklogDelta delta = backlog_delta(outcome);
        long backlog_change = 0;
        if (delta.delivered() > 0) {
            for (int u : transmitters) {
                User& user = pop[static_cast<std::size_t>(u)];
                if (user.backlogged) --backlog_change;
                if (u < m && user.backlogged) --others_backlog;
                user.backlogged = false;
                ++report.deliveries;
                if (batch) {
                    const double d = static_cast<double>(frame - user.first_frame + 1);
                    ++batch->deliveries;
                    batch->delay_sum += d;
                    ++batch->delay_count;
                    if (user.was_backlogged) {
                        batch->backlog_delay_sum += d;
                        ++batch->backlog_delay_count;
                    }
                    if (tagged && u == m) ++batch->tagged_deliveries;
                }
            }
        } else if (outcome.kind == OutcomeKind::Collision) {
            ++report.collisions;
            for (int u : transmitters) {
                User& user = pop[static_cast<std::size_t>(u)];
                if (user.backlogged) continue;
                user.backlogged = true;
                user.was_backlogged = true;
                ++backlog_change;
                if (u < m) ++others_backlog;
            }
        }
        assert(backlog_change == delta.delta_backlog);
        (void)backlog_change;

        if (outcome.kind == OutcomeKind::ZigZagResolved) ++report.zigzag_frames;
        const int frame_slots = config.channel.frame_slots(outcome.kind);
        slots_elapsed += frame_slots;
        if (batch) batch->slots += frame_slots;

        if (trace) {
            long backlog_now = others_backlog + (tagged && pop.back().backlogged ? 1 : 0);
            *trace << frame << ',' << slots_elapsed << ',' << outcome.total() << ',' << to_string(outcome.kind)
                   << ',' << backlog_now << '\n';
        }
    }

    report.final_backlog = static_cast<long>(
        std::count_if(pop.begin(), pop.end(), [](const User& u) { return u.backlogged; }));

    for (const auto& b : batches) {
        report.measured_frames += b.frames;
        report.measured_slots += b.slots;
    }
    const auto frames = [](const Batch& b) { return static_cast<double>(b.frames); };
    report.throughput_per_frame =
        ratio_estimate(batches, [](const Batch& b) { return static_cast<double>(b.deliveries); }, frames);
    report.throughput_per_slot = ratio_estimate(
        batches, [](const Batch& b) { return static_cast<double>(b.deliveries); },
        [](const Batch& b) { return static_cast<double>(b.slots); });
    report.avg_backlog =
        ratio_estimate(batches, [](const Batch& b) { return static_cast<double>(b.backlog_sum); }, frames);
    report.delay_frames = ratio_estimate(
        batches, [](const Batch& b) { return b.delay_sum; },
        [](const Batch& b) { return static_cast<double>(b.delay_count); });
    report.backlog_delay_frames = ratio_estimate(
        batches, [](const Batch& b) { return b.backlog_delay_sum; },
        [](const Batch& b) { return static_cast<double>(b.backlog_delay_count); });
    if (tagged) {
        report.tagged_throughput = ratio_estimate(
            batches, [](const Batch& b) { return static_cast<double>(b.tagged_deliveries); }, frames);
        report.tagged_backlog_prob = ratio_estimate(
            batches, [](const Batch& b) { return static_cast<double>(b.tagged_backlogged); }, frames);
    }
    report.state_occupancy.resize(states);
    for (std::size_t s = 0; s < states; ++s) {
        report.state_occupancy[s] = ratio_estimate(
            batches, [s](const Batch& b) { return static_cast<double>(b.occupancy[s]); }, frames);
    }
    return report;
}

namespace {

nlohmann::json estimate_json(const Estimate& e) {
    return {{"mean", e.mean}, {"std_error", e.std_error}};
}

}  // namespace

std::string to_json(const SimReport& r) {
    nlohmann::json j;
    j["generator"] = r.generator;
    j["seed"] = r.seed;
    j["batches"] = r.batches;
    j["measured_frames"] = r.measured_frames;
    j["measured_slots"] = r.measured_slots;
    j["throughput_per_frame"] = estimate_json(r.throughput_per_frame);
    j["throughput_per_slot"] = estimate_json(r.throughput_per_slot);
    j["avg_backlog"] = estimate_json(r.avg_backlog);
    j["delay_frames"] = estimate_json(r.delay_frames);
    j["backlog_delay_frames"] = estimate_json(r.backlog_delay_frames);
    if (r.tagged_throughput) j["tagged_throughput"] = estimate_json(*r.tagged_throughput);
    if (r.tagged_backlog_prob) j["tagged_backlog_prob"] = estimate_json(*r.tagged_backlog_prob);
    auto occ = nlohmann::json::array();
    for (const auto& e : r.state_occupancy) occ.push_back(estimate_json(e));
    j["state_occupancy"] = occ;
    j["counters"] = {{"arrivals", r.arrivals},
                     {"deliveries", r.deliveries},
                     {"final_backlog", r.final_backlog},
                     {"collisions", r.collisions},
                     {"zigzag_frames", r.zigzag_frames}};
    return j.dump(2);
}

double DiscrepancyReport::max_z() const {
    double z = 0.0;
    for (const auto& e : entries) z = std::max(z, e.z);
    return z;
}

namespace {

// A constant simulated metric matches the chain up to solver round-off.
constexpr double kDegenerateTolerance = 1e-9;

// Delay is a ratio estimator; with fewer expected deliveries per batch its
// batch means are not approximately normal and it is not compared.
constexpr double kMinDeliveriesPerBatch = 100.0;

void add_entry(DiscrepancyReport& out, std::string name, double simulated, double analytic, double se) {
    const double diff = std::abs(simulated - analytic);
    double z = 0.0;
    if (se > 0.0) {
        z = diff / se;
    } else if (diff > kDegenerateTolerance * std::max(1.0, std::abs(analytic))) {
        z = std::numeric_limits<double>::infinity();
    }
    out.entries.push_back({std::move(name), simulated, analytic, se, z});
    if (!(z < out.threshold)) out.pass = false;
}

// Standard error of an i.i.d. mean with this per-frame variance.
double iid_floor(double variance, double frames) { return std::sqrt(std::max(variance, 0.0) / frames); }

void add_occupancy(DiscrepancyReport& out, const SimReport& report, const std::vector<double>& pi,
                   const std::vector<std::string>& labels) {
    const double n = static_cast<double>(report.measured_frames);
    for (std::size_t s = 0; s < pi.size(); ++s) {
        const double floor_se = iid_floor(pi[s] * (1.0 - pi[s]), n);
        add_entry(out, "occupancy[" + labels[s] + "]", report.state_occupancy[s].mean, pi[s],
                  std::max(report.state_occupancy[s].std_error, floor_se));
    }
}

}  // namespace

DiscrepancyReport compare_to_chain(const SimConfig& config, const SimReport& report, const TeamMetrics& metrics,
                                   double threshold) {
    if (config.tagged_retransmit) throw ValidationError("team metrics compared against a tagged-user simulation");
    if (config.params.num_users() != metrics.num_users) throw ValidationError("population size mismatch");
    if (config.channel.kind != metrics.channel) throw ValidationError("channel mismatch");
    if (report.state_occupancy.size() != metrics.stationary.size()) throw ValidationError("state space mismatch");

    DiscrepancyReport out;
    out.threshold = threshold;
    const double n = static_cast<double>(report.measured_frames);
    // Deliveries per frame D lie in {0, 1, 2}, so Var D >= Th (1 - Th).
    const double th_floor = iid_floor(metrics.throughput * (1.0 - metrics.throughput), n);
    add_entry(out, "throughput_per_frame", report.throughput_per_frame.mean, metrics.throughput,
              std::max(report.throughput_per_frame.std_error, th_floor));
    add_entry(out, "throughput_per_slot", report.throughput_per_slot.mean, metrics.throughput_per_slot,
              std::max(report.throughput_per_slot.std_error, th_floor / metrics.expected_frame_len));
    double second_moment = 0.0;
    for (std::size_t k = 0; k < metrics.stationary.size(); ++k) {
        second_moment += static_cast<double>(k * k) * metrics.stationary[k];
    }
    add_entry(out, "avg_backlog", report.avg_backlog.mean, metrics.avg_backlog,
              std::max(report.avg_backlog.std_error,
                       iid_floor(second_moment - metrics.avg_backlog * metrics.avg_backlog, n)));
    const double frames_per_batch = static_cast<double>(report.measured_frames) / report.batches;
    if (metrics.delay && report.delay_frames.mean > 0.0 &&
        metrics.throughput * frames_per_batch >= kMinDeliveriesPerBatch) {
        add_entry(out, "delay_frames", report.delay_frames.mean, *metrics.delay, report.delay_frames.std_error);
    }
    if (metrics.backlog_delay && report.backlog_delay_frames.mean > 0.0 &&
        metrics.backlog_throughput * frames_per_batch >= kMinDeliveriesPerBatch) {
        add_entry(out, "backlog_delay_frames", report.backlog_delay_frames.mean, *metrics.backlog_delay,
                  report.backlog_delay_frames.std_error);
    }
    std::vector<std::string> labels;
    for (std::size_t n = 0; n < metrics.stationary.size(); ++n) labels.push_back("N=" + std::to_string(n));
    add_occupancy(out, report, metrics.stationary, labels);
    return out;
}

DiscrepancyReport compare_to_chain(const SimConfig& config, const SimReport& report, const TaggedMetrics& metrics,
                                   double threshold) {
    if (!config.tagged_retransmit) throw ValidationError("tagged metrics compared against a simulation without a tagged user");
    if (config.params.num_users() != metrics.num_others) throw ValidationError("population size mismatch");
    if (config.channel.kind != metrics.channel) throw ValidationError("channel mismatch");
    if (report.state_occupancy.size() != metrics.stationary.size()) throw ValidationError("state space mismatch");

    DiscrepancyReport out;
    out.threshold = threshold;
    const double n = static_cast<double>(report.measured_frames);
    add_entry(out, "tagged_throughput", report.tagged_throughput->mean, metrics.throughput,
              std::max(report.tagged_throughput->std_error,
                       iid_floor(metrics.throughput * (1.0 - metrics.throughput), n)));
    add_entry(out, "tagged_backlog_prob", report.tagged_backlog_prob->mean, metrics.backlog_prob,
              std::max(report.tagged_backlog_prob->std_error,
                       iid_floor(metrics.backlog_prob * (1.0 - metrics.backlog_prob), n)));
    double second_moment = 0.0;
    for (std::size_t k = 0; k < metrics.stationary.size(); ++k) {
        const double others = GameState::from_index(k).n_backlogged;
        second_moment += others * others * metrics.stationary[k];
    }
    add_entry(out, "others_avg_backlog", report.avg_backlog.mean, metrics.others_avg_backlog,
              std::max(report.avg_backlog.std_error,
                       iid_floor(second_moment - metrics.others_avg_backlog * metrics.others_avg_backlog, n)));
    std::vector<std::string> labels;
    for (std::size_t k = 0; k < metrics.stationary.size(); ++k) {
        const GameState s = GameState::from_index(k);
        labels.push_back("N=" + std::to_string(s.n_backlogged) + ",a=" + std::to_string(s.tagged_backlogged));
    }
    add_occupancy(out, report, metrics.stationary, labels);
    return out;
}

DiscrepancyReport compare_to_chain(const SimConfig& config, const TeamMetrics& metrics, double threshold) {
    return compare_to_chain(config, run_sim(config), metrics, threshold);
}

DiscrepancyReport compare_to_chain(const SimConfig& config, const TaggedMetrics& metrics, double threshold) {
    return compare_to_chain(config, run_sim(config), metrics, threshold);
}

}  // namespace zzaloha
