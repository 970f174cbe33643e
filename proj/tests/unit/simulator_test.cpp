#include <cmath>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "zzaloha/errors.hpp"
#include "zzaloha/simulator.hpp"

namespace zzaloha {
namespace {

SimConfig config(int m, double pa, double q, ChannelModel ch, long frames = 200'000, std::uint64_t seed = 7) {
    return SimConfig{SystemParams(m, pa, q), ch, frames, 10'000, seed, 50, std::nullopt};
}

TEST(SimConfig, Validation) {
    auto c = config(3, 0.2, 0.5, ChannelModel::zigzag());
    c.horizon_frames = c.warmup_frames;
    EXPECT_THROW(run_sim(c), ValidationError);
    c = config(3, 0.2, 0.5, ChannelModel::zigzag());
    c.batches = 1;
    EXPECT_THROW(run_sim(c), ValidationError);
    c = config(3, 0.2, 0.5, ChannelModel::zigzag());
    c.tagged_retransmit = 0.0;
    EXPECT_THROW(run_sim(c), ValidationError);
}

TEST(RunSim, DeterministicForSeed) {
    const auto c = config(5, 0.3, 0.5, ChannelModel::classic(), 50'000);
    const auto a = run_sim(c);
    const auto b = run_sim(c);
    EXPECT_EQ(to_json(a), to_json(b));
    EXPECT_EQ(a.throughput_per_frame.mean, b.throughput_per_frame.mean);
    EXPECT_EQ(a.delay_frames.std_error, b.delay_frames.std_error);

    auto other = c;
    other.seed = 8;
    EXPECT_NE(run_sim(other).throughput_per_frame.mean, a.throughput_per_frame.mean);
}

TEST(RunSim, ConservesPackets) {
    for (auto ch : {ChannelModel::classic(), ChannelModel::zigzag()}) {
        for (double pa : {0.05, 0.4, 0.9}) {
            auto c = config(6, pa, 0.3, ch, 30'000);
            const auto r = run_sim(c);
            EXPECT_EQ(r.arrivals, r.deliveries + r.final_backlog);
            c.tagged_retransmit = 0.6;
            const auto t = run_sim(c);
            EXPECT_EQ(t.arrivals, t.deliveries + t.final_backlog);
        }
    }
}

TEST(RunSim, NoCollisionsWithAtMostTwoZigZagUsers) {
    for (int m : {1, 2}) {
        for (double pa : {0.3, 1.0}) {
            const auto r = run_sim(config(m, pa, 0.5, ChannelModel::zigzag(), 50'000));
            EXPECT_EQ(r.collisions, 0);
            EXPECT_EQ(r.final_backlog, 0);
        }
    }
    auto c = config(1, 0.7, 0.5, ChannelModel::zigzag(), 50'000);
    c.tagged_retransmit = 0.4;
    EXPECT_EQ(run_sim(c).collisions, 0);
}

TEST(RunSim, ZeroTraffic) {
    const auto c = config(4, 0.0, 0.5, ChannelModel::classic(), 20'000);
    const auto r = run_sim(c);
    EXPECT_EQ(r.throughput_per_frame.mean, 0.0);
    EXPECT_EQ(r.avg_backlog.mean, 0.0);
    EXPECT_EQ(r.arrivals, 0);
    const auto d = compare_to_chain(c, r, team_metrics(c.params, c.channel));
    EXPECT_TRUE(d.pass);
    for (const auto& e : d.entries) EXPECT_EQ(e.z, 0.0) << e.metric;
}

TEST(RunSim, TwoZigZagUsersDeliverEveryArrival) {
    const auto c = config(2, 0.5, 0.5, ChannelModel::zigzag(), 1'000'000, 20140601);
    const auto r = run_sim(c);
    EXPECT_LT(std::abs(r.throughput_per_frame.mean - 1.0), 3 * r.throughput_per_frame.std_error);
    EXPECT_EQ(r.delay_frames.mean, 1.0);
}

TEST(RunSim, OccupancyMatchesChain) {
    const auto c = config(5, 0.3, 0.5, ChannelModel::zigzag(), 1'000'000, 20140601);
    const auto d = compare_to_chain(c, team_metrics(c.params, c.channel));
    EXPECT_TRUE(d.pass) << "max z " << d.max_z();
    int occupancy_entries = 0;
    for (const auto& e : d.entries) occupancy_entries += e.metric.rfind("occupancy", 0) == 0;
    EXPECT_EQ(occupancy_entries, 6);
}

TEST(RunSim, TaggedUserMatchesGameChain) {
    for (auto ch : {ChannelModel::classic(), ChannelModel::zigzag()}) {
        auto c = config(3, 0.3, 0.5, ch, 1'000'000, 20140601);
        c.tagged_retransmit = 0.7;
        const auto d = compare_to_chain(c, tagged_metrics(GameParams(c.params, 0.7), ch));
        EXPECT_TRUE(d.pass) << to_string(ch.kind) << " max z " << d.max_z();
    }
}

TEST(RunSim, MismatchedRetransmissionIsDetected) {
    const auto c = config(5, 0.3, 0.5, ChannelModel::classic(), 1'000'000, 20140601);
    const auto wrong = team_metrics(c.params.with_retransmit_prob(0.2), c.channel);
    const auto d = compare_to_chain(c, wrong);
    EXPECT_FALSE(d.pass);
    ASSERT_FALSE(d.entries.empty());
    EXPECT_EQ(d.entries.front().metric, "throughput_per_frame");
    EXPECT_GT(d.entries.front().z, 3.0);
}

TEST(RunSim, StructuralMismatchThrows) {
    const auto c = config(4, 0.3, 0.5, ChannelModel::zigzag(), 20'000);
    const auto r = run_sim(c);
    EXPECT_THROW(compare_to_chain(c, r, team_metrics(SystemParams(5, 0.3, 0.5), c.channel)), ValidationError);
    EXPECT_THROW(compare_to_chain(c, r, team_metrics(c.params, ChannelModel::classic())), ValidationError);
    EXPECT_THROW(compare_to_chain(c, r, tagged_metrics(GameParams(c.params, 0.5), c.channel)), ValidationError);
}

TEST(RunSim, StandardErrorShrinksAsSquareRoot) {
    const auto mean_se = [](long frames) {
        double total = 0.0;
        for (std::uint64_t seed = 1; seed <= 8; ++seed) {
            auto c = config(5, 0.3, 0.5, ChannelModel::zigzag(), frames, seed);
            c.warmup_frames = 1'000;
            total += run_sim(c).throughput_per_frame.std_error;
        }
        return total / 8.0;
    };
    const double ratio = mean_se(400'000) / mean_se(100'000);
    EXPECT_GT(ratio, 0.4);
    EXPECT_LT(ratio, 0.6);
}

TEST(RunSim, TraceHasOneLinePerFrame) {
    std::ostringstream trace;
    auto c = config(3, 0.4, 0.5, ChannelModel::zigzag(), 1'000);
    c.warmup_frames = 100;
    run_sim(c, &trace);
    std::istringstream in(trace.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "frame,slots_elapsed,attempts,outcome,backlog");
    long rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 1'000);
}

TEST(RunSim, JsonRecordsGeneratorAndSeed) {
    const auto j = nlohmann::json::parse(to_json(run_sim(config(3, 0.2, 0.5, ChannelModel::classic(), 20'000, 99))));
    EXPECT_EQ(j.at("seed").get<std::uint64_t>(), 99u);
    EXPECT_EQ(j.at("generator").get<std::string>(), "std::mt19937_64");
}

}  // namespace
}  // namespace zzaloha
