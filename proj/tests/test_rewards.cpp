#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "pwrank/errors.hpp"
#include "pwrank/rewards.hpp"

using namespace pwrank;

TEST(GlobalRanks, WorkedScenario) {
    auto m = fixtures::to_matrix(fixtures::worked_scenario());
    auto r = global_ranks(m);
    EXPECT_EQ(r.ranks[0][0], 1);
    EXPECT_EQ(r.ranks[0][1], 3);
    EXPECT_EQ(r.ranks[1][0], 2);
    EXPECT_EQ(r.ranks[1][1], 4);
    EXPECT_EQ(r.ranks[2][0], 5);
    EXPECT_EQ(r.ranks[2][1], 5);
    EXPECT_EQ(r.positive_min, 1);
    EXPECT_EQ(r.positive_max, 3);
}

TEST(GlobalRanks, DistinctAndEqualScores) {
    oracle::Instance distinct{{true, false}, {0, 0}, {{1, 5}, {9, 3}}};
    auto r = global_ranks(fixtures::to_matrix(distinct));
    std::vector<int> seen;
    for (const auto& row : r.ranks)
        for (auto v : row) seen.push_back(*v);
    std::sort(seen.begin(), seen.end());
    EXPECT_EQ(seen, (std::vector<int>{1, 2, 3, 4}));

    oracle::Instance equal{{true, false}, {0, 0}, {{4, 4}, {4, 4}}};
    for (const auto& row : global_ranks(fixtures::to_matrix(equal)).ranks)
        for (auto v : row) EXPECT_EQ(v, 1);
}

TEST(GlobalRanks, UnformattedUnrankedAndAllUnformattedIsError) {
    oracle::Instance in{{true}, {0}, {{7, std::nullopt}}};
    auto r = global_ranks(fixtures::to_matrix(in));
    EXPECT_EQ(r.ranks[0][0], 1);
    EXPECT_FALSE(r.ranks[0][1]);
    oracle::Instance none{{true}, {0}, {{std::nullopt}}};
    EXPECT_THROW(global_ranks(fixtures::to_matrix(none)), DataError);
}

TEST(RewardSe, Examples) {
    EXPECT_DOUBLE_EQ(reward_se(fixtures::scored(7), 7), 1.0);
    EXPECT_DOUBLE_EQ(reward_se(fixtures::scored(0), 10), 0.0);
    EXPECT_DOUBLE_EQ(reward_se(fixtures::unformatted(), 5), -1.0);
}

TEST(RewardRr, WorkedScenario) {
    auto m = fixtures::to_matrix(fixtures::worked_scenario());
    auto r = reward_rr(m, global_ranks(m));
    const std::vector<std::vector<double>> expected{{1.0, 1.0 / 3}, {-1.0, 1.0}, {0.96, 0.96}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) EXPECT_NEAR(r.rewards[i][j], expected[i][j], 1e-12) << i << "," << j;
    EXPECT_EQ(r.branches[0][0], RewardBranch::positive_rr);
    EXPECT_EQ(r.branches[1][0], RewardBranch::negative_penalty);
    EXPECT_EQ(r.branches[1][1], RewardBranch::negative_smooth);
}

TEST(RewardNdcg, WorkedScenario) {
    auto m = fixtures::to_matrix(fixtures::worked_scenario());
    auto r = reward_ndcg(m, global_ranks(m));
    EXPECT_NEAR(r.rewards[0][0], 0.613147, 1e-6);
    EXPECT_NEAR(r.rewards[0][1], 0.306573, 1e-6);
    EXPECT_NEAR(r.rewards[1][0], -0.613147, 1e-6);
    EXPECT_NEAR(r.rewards[1][1], 1.0, 1e-12);
    EXPECT_NEAR(r.rewards[2][0], 0.96, 1e-12);
}

TEST(RewardListwise, SinglePositiveAtTop) {
    oracle::Instance in{{true}, {0}, {{5}}};
    auto m = fixtures::to_matrix(in);
    EXPECT_DOUBLE_EQ(reward_rr(m, global_ranks(m)).rewards[0][0], 1.0);
    EXPECT_DOUBLE_EQ(reward_ndcg(m, global_ranks(m)).rewards[0][0], 1.0);
}

TEST(RewardListwise, EmptyPositiveSetIsError) {
    oracle::Instance in{{false}, {0}, {{5}}};
    auto m = fixtures::to_matrix(in);
    EXPECT_THROW(reward_rr(m, global_ranks(m)), DataError);
    EXPECT_THROW(reward_ndcg(m, global_ranks(m)), DataError);
}

TEST(RewardListwise, NegativeTiedWithWorstPositiveIsPenalized) {
    oracle::Instance in{{true, false}, {0, 5}, {{9, 4}, {4, 1}}};
    auto m = fixtures::to_matrix(in);
    auto r = reward_rr(m, global_ranks(m));
    EXPECT_EQ(r.branches[1][0], RewardBranch::negative_penalty);
    EXPECT_DOUBLE_EQ(r.rewards[1][0], -1.0);
}

TEST(RewardListwise, AllUnformattedGivesMinusOne) {
    oracle::Instance in{{true, false}, {0, 0}, {{std::nullopt, std::nullopt}, {std::nullopt, std::nullopt}}};
    auto m = fixtures::to_matrix(in);
    for (auto kind : {RewardKind::se, RewardKind::ndcg, RewardKind::rr}) {
        auto r = compute_rewards(m, kind);
        for (const auto& row : r.rewards)
            for (double v : row) EXPECT_EQ(v, -1.0);
    }
}

TEST(RewardListwise, MatchesOracleOnRandomInstances) {
    std::mt19937_64 rng(42);
    for (int t = 0; t < 300; ++t) {
        auto in = fixtures::random_instance(rng, 5, 3, 0.2);
        auto m = fixtures::to_matrix(in);
        const auto rr = compute_rewards(m, RewardKind::rr);
        const auto nd = compute_rewards(m, RewardKind::ndcg);
        const auto want_rr = oracle::listwise(in, oracle::Kind::rr);
        const auto want_nd = oracle::listwise(in, oracle::Kind::ndcg);
        for (std::size_t i = 0; i < in.cells.size(); ++i)
            for (std::size_t j = 0; j < in.cells[i].size(); ++j) {
                EXPECT_NEAR(rr.rewards[i][j], want_rr[i][j], 1e-12);
                EXPECT_NEAR(nd.rewards[i][j], want_nd[i][j], 1e-12);
            }
    }
}

TEST(RewardListwise, RaisingPositiveScoreNeverLowersItsReward) {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 300; ++t) {
        auto in = fixtures::random_instance(rng, 5, 3, 0.1);
        for (std::size_t i = 0; i < in.cells.size(); ++i) {
            if (!in.positive[i] || !in.cells[i][0] || *in.cells[i][0] == 10) continue;
            auto before = compute_rewards(fixtures::to_matrix(in), RewardKind::rr).rewards[i][0];
            auto up = in;
            *up.cells[i][0] += 1;
            EXPECT_GE(compute_rewards(fixtures::to_matrix(up), RewardKind::rr).rewards[i][0], before);
            break;
        }
    }
}

TEST(RolloutDump, BuildsMatricesAndWritesRewards) {
    std::istringstream in(
        R"({"query_id":"q","doc_id":"A","reference_score":0,"rollouts":["<think>a</think><answer>9</answer>","<think>a</think><answer>7</answer>"]})"
        "\n"
        R"({"query_id":"q","doc_id":"B","reference_score":3,"rollouts":["<think>b</think><answer>8</answer>","<think>b</think><answer>3</answer>"]})"
        "\n"
        R"({"query_id":"q","doc_id":"C","reference_score":4,"rollouts":["<think>c</think><answer>2</answer>","<think>c</think><answer>2</answer>"]})"
        "\n");
    RelevanceJudgments q;
    q.set("q", "A", 1);
    auto matrices = build_rollout_matrices(parse_rollout_dump(in), q, Scheme::int_0_10);
    ASSERT_EQ(matrices.size(), 1u);
    auto r = compute_rewards(matrices[0], RewardKind::rr);
    std::ostringstream out;
    write_reward_dump(matrices[0], r, out);
    EXPECT_NE(out.str().find("\"reward\":0.333333"), std::string::npos);
    EXPECT_NE(out.str().find("negative_penalty"), std::string::npos);
}

TEST(RolloutDump, UnevenRolloutCountsAreError) {
    std::istringstream in(
        R"({"query_id":"q","doc_id":"A","reference_score":0,"rollouts":["x","y"]})"
        "\n"
        R"({"query_id":"q","doc_id":"B","reference_score":0,"rollouts":["x"]})");
    RelevanceJudgments q;
    q.set("q", "A", 1);
    EXPECT_THROW(build_rollout_matrices(parse_rollout_dump(in), q, Scheme::int_0_10), DataError);
}
