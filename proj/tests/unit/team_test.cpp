#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "zzaloha/errors.hpp"
#include "zzaloha/team.hpp"

namespace zzaloha {
namespace {

ChannelModel channel(bool zigzag) { return zigzag ? ChannelModel::zigzag() : ChannelModel::classic(); }

TEST(TeamChain, MatchesPerUserEnumeration) {
    for (int m = 1; m <= 8; ++m) {
        for (double pa : {0.0, 0.15, 0.5, 0.85, 1.0}) {
            for (double q : {0.1, 0.5, 1.0}) {
                for (bool zz : {false, true}) {
                    const auto p = build_team_chain(SystemParams(m, pa, q), channel(zz));
                    const auto ref = oracle::team_chain(m, pa, q, zz);
                    for (int i = 0; i <= m; ++i) {
                        for (int j = 0; j <= m; ++j) {
                            EXPECT_NEAR(p(i, j), ref(i, j), 1e-14) << "M=" << m << " " << i << "->" << j;
                        }
                    }
                }
            }
        }
    }
}

TEST(TeamChain, TwoUserExamples) {
    for (double pa : {0.1, 0.5, 0.9}) {
        EXPECT_EQ(build_team_chain(SystemParams(2, pa, 0.3), ChannelModel::zigzag())(0, 0), 1.0);
    }
    EXPECT_NEAR(build_team_chain(SystemParams(2, 0.5, 0.3), ChannelModel::classic())(0, 2), 0.25, 1e-15);
}

TEST(TeamChain, MatchesCorrectedPiecewiseForm) {
    const SystemParams params(6, 0.35, 0.55);
    const auto p = build_team_chain(params, ChannelModel::zigzag());
    for (int n = 0; n <= 6; ++n) {
        auto qa = [&](int i) { return i <= 6 - n ? prob_new_attempts(i, n, params) : 0.0; };
        auto qr = [&](int j) { return j <= n ? prob_retx_attempts(j, n, params) : 0.0; };
        auto at = [&](int shift) { return n + shift >= 0 && n + shift <= 6 ? p(n, n + shift) : 0.0; };
        for (int i = 3; i <= 6 - n; ++i) EXPECT_NEAR(at(i), qa(i), 1e-15);
        EXPECT_NEAR(at(2), qa(2) * (1 - qr(0)), 1e-15);
        EXPECT_NEAR(at(1), qa(1) * (1 - qr(0) - qr(1)), 1e-15);
        EXPECT_NEAR(at(0), qa(0) * (1 - qr(1) - qr(2)) + qa(1) * qr(0) + qa(2) * qr(0), 1e-15);
        EXPECT_NEAR(at(-1), qa(0) * qr(1) + qa(1) * qr(1), 1e-15);
        EXPECT_NEAR(at(-2), qa(0) * qr(2), 1e-15);
    }
}

TEST(TeamChain, RowsSumToOneOnGrid) {
    for (int m = 1; m <= 12; ++m) {
        for (int a = 0; a <= 10; ++a) {
            for (int b = 1; b <= 10; ++b) {
                for (bool zz : {false, true}) {
                    const auto defects =
                        validate_rows(build_team_chain(SystemParams(m, a / 10.0, b / 10.0), channel(zz)), 1e-12);
                    EXPECT_TRUE(defects.empty()) << "M=" << m << " pa=" << a / 10.0 << " q=" << b / 10.0;
                }
            }
        }
    }
}

TEST(PrintedChain, DefectIsTheThreeMisplacedTerms) {
    for (int m : {3, 5}) {
        const SystemParams params(m, 0.4, 0.5);
        const auto literal = build_team_chain_printed(params);
        const auto fixed = build_team_chain(params, ChannelModel::zigzag());
        for (int n = 0; n <= m; ++n) {
            const double qa0 = prob_new_attempts(0, n, params);
            const double qa1 = n < m ? prob_new_attempts(1, n, params) : 0.0;
            const double qa2 = n + 2 <= m ? prob_new_attempts(2, n, params) : 0.0;
            const double qr0 = prob_retx_attempts(0, n, params);
            const double qr1 = n >= 1 ? prob_retx_attempts(1, n, params) : 0.0;
            const double qr2 = n >= 2 ? prob_retx_attempts(2, n, params) : 0.0;
            for (int j = 0; j <= m; ++j) {
                double expected = 0.0;
                if (j == n) expected = qa1 * qr1 + qa0 * qr2 - qa2 * qr0;
                if (j == n - 1) expected = -qa1 * qr1;
                EXPECT_NEAR(literal(n, j) - fixed(n, j), expected, 1e-15) << "M=" << m << " " << n << "->" << j;
            }
        }
    }
}

TEST(PrintedChain, StochasticWhenDefectTermsVanish) {
    // With p_a = 0 the defect is -Q_r(2, N), which vanishes for N < 2.
    EXPECT_TRUE(validate_rows(build_team_chain_printed(SystemParams(1, 0.0, 0.5))).empty());
    for (const auto& d : validate_rows(build_team_chain_printed(SystemParams(4, 0.0, 0.5)))) {
        EXPECT_GE(d.row, 2u);
    }
}

TEST(TeamMetrics, NoCollisionsWithTwoZigZagUsers) {
    const auto t = team_metrics(SystemParams(2, 0.5, 0.4), ChannelModel::zigzag());
    EXPECT_NEAR(t.throughput, 1.0, 1e-12);
    EXPECT_NEAR(t.avg_backlog, 0.0, 1e-12);
    ASSERT_TRUE(t.delay.has_value());
    EXPECT_NEAR(*t.delay, 1.0, 1e-12);
    EXPECT_FALSE(t.backlog_delay.has_value());
}

TEST(TeamMetrics, ZeroLoad) {
    for (bool zz : {false, true}) {
        const auto t = team_metrics(SystemParams(5, 0.0, 0.4), channel(zz));
        EXPECT_EQ(t.throughput, 0.0);
        EXPECT_EQ(t.avg_backlog, 0.0);
        EXPECT_FALSE(t.delay.has_value());
        EXPECT_FALSE(t.backlog_delay.has_value());
    }
}

TEST(TeamMetrics, SingleClassicUser) {
    for (double pa : {0.1, 0.6, 1.0}) {
        const auto t = team_metrics(SystemParams(1, pa, 0.3), ChannelModel::classic());
        EXPECT_EQ(t.stationary[0], 1.0);
        EXPECT_EQ(t.throughput, pa);
    }
}

TEST(TeamMetrics, FlowBalance) {
    const auto t = team_metrics(SystemParams(5, 0.3, 0.5), ChannelModel::zigzag());
    EXPECT_LT(std::abs(t.throughput - t.event_throughput), 1e-9);
}

TEST(TeamMetrics, MatchesOracleAndTypeInvariants) {
    for (int m : {1, 3, 5, 8}) {
        for (double pa : {0.05, 0.3, 0.6, 0.95}) {
            for (double q : {0.1, 0.4, 0.9}) {
                for (bool zz : {false, true}) {
                    const auto t = team_metrics(SystemParams(m, pa, q), channel(zz));
                    const auto pi = oracle::stationary(oracle::team_chain(m, pa, q, zz));
                    double backlog = 0.0;
                    double two = 0.0;
                    for (int n = 0; n <= m; ++n) {
                        backlog += n * pi(n);
                        // P(exactly two attempts | N) by convolution of the two binomials.
                        double p2 = 0.0;
                        for (int i = 0; i <= 2; ++i) {
                            const int j = 2 - i;
                            if (i <= m - n && j <= n) {
                                p2 += binomial_pmf(m - n, i, pa) * binomial_pmf(n, j, q);
                            }
                        }
                        two += pi(n) * p2;
                    }
                    EXPECT_NEAR(t.avg_backlog, backlog, 1e-9);
                    EXPECT_NEAR(t.throughput, pa * (m - backlog), 1e-9);
                    EXPECT_NEAR(t.two_attempt_prob, zz ? two : 0.0, 1e-9);
                    EXPECT_NEAR(t.expected_frame_len, zz ? 1.0 + two : 1.0, 1e-9);
                    EXPECT_NEAR(t.throughput_per_slot, t.throughput / t.expected_frame_len, 1e-12);

                    EXPECT_GE(t.throughput, 0.0);
                    EXPECT_LE(t.throughput, m * pa + 1e-9);
                    EXPECT_GE(t.avg_backlog, 0.0);
                    EXPECT_LE(t.avg_backlog, m);
                    EXPECT_NEAR(t.new_throughput + t.backlog_throughput, t.throughput, 1e-9);
                    if (t.delay) {
                        EXPECT_GE(*t.delay, 1.0);
                    }
                    if (t.backlog_delay) {
                        EXPECT_GE(*t.backlog_delay, 1.0);
                    }
                    if (t.delay && t.backlog_delay) {
                        EXPECT_GE(*t.backlog_delay, *t.delay - 1e-9);
                    }
                }
            }
        }
    }
}

TEST(TeamMetrics, ZigZagDominatesClassic) {
    for (int m = 1; m <= 12; ++m) {
        for (int a = 1; a <= 9; ++a) {
            for (int b = 1; b <= 10; ++b) {
                const SystemParams params(m, a / 10.0, b / 10.0);
                const auto z = team_metrics(params, ChannelModel::zigzag());
                const auto c = team_metrics(params, ChannelModel::classic());
                EXPECT_GE(z.throughput, c.throughput);
                if (z.two_attempt_prob > 1e-9) {
                    EXPECT_GT(z.throughput, c.throughput);
                }
            }
        }
    }
}

TEST(OptimizeTeam, TwoZigZagUsersAreFlat) {
    for (double pa : {0.1, 0.5, 0.9}) {
        const auto o = optimize_team(2, pa, ChannelModel::zigzag());
        EXPECT_TRUE(o.flat);
        EXPECT_NEAR(o.throughput, 2 * pa, 1e-12);
        EXPECT_EQ(o.retransmit_prob, 1e-4);
    }
}

TEST(OptimizeTeam, BeatsEveryDenseGridPoint) {
    for (double pa : {0.05, 0.2, 0.5}) {
        for (bool zz : {false, true}) {
            const auto o = optimize_team(5, pa, channel(zz));
            double best = 0.0;
            for (double q : oracle::dense_grid()) best = std::max(best, oracle::team_throughput(5, pa, q, zz));
            EXPECT_GE(o.throughput, best - 1e-8) << "pa=" << pa << " zz=" << zz;
            EXPECT_NEAR(team_metrics(SystemParams(5, pa, o.retransmit_prob), channel(zz)).throughput, o.throughput,
                        1e-12);
        }
    }
}

TEST(OptimizeTeam, ZigZagOptimumDominates) {
    EXPECT_GE(optimize_team(5, 0.05, ChannelModel::zigzag()).throughput,
              optimize_team(5, 0.05, ChannelModel::classic()).throughput);
}

TEST(OptimizeTeam, RejectsZeroLoad) {
    EXPECT_THROW(optimize_team(5, 0.0, ChannelModel::zigzag()), ValidationError);
}

}  // namespace
}  // namespace zzaloha
