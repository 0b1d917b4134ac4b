#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pwrank/scoring.hpp"
#include "pwrank/types.hpp"

namespace pwrank {

/// G rollouts of one candidate document.
struct DocRollouts {
    std::string doc_id;
    bool positive = false;
    double reference_score = 0.0;  ///< t_i from the reference scorer, in [0, 10]
    std::vector<ParsedOutput> rollouts;
};

/// N x G rollouts for one query. Every document carries the same number of
/// rollouts; positives and negatives partition the candidates.
struct RolloutMatrix {
    std::string query_id;
    std::vector<DocRollouts> docs;

    std::size_t group_size() const { return docs.empty() ? 0 : docs.front().rollouts.size(); }
    std::size_t num_positive() const;
    std::size_t num_formatted() const;
};

/// Throws DataError when documents disagree on the rollout count, the matrix is
/// empty, or G is zero.
void validate(const RolloutMatrix& matrix);

/// Rollout grid for a query group: labels give positives, `reference` gives t_i.
RolloutMatrix make_rollout_matrix(const QueryGroup& group, const std::vector<std::vector<ParsedOutput>>& rollouts,
                                  const std::vector<double>& reference);

/// Global ranks over the formatted rollouts of a matrix. Unformatted rollouts
/// have no rank. Tied scores share the smallest rank of their block.
struct RankAssignment {
    std::vector<std::vector<std::optional<int>>> ranks;  ///< [doc][rollout]
    /// Extremes over formatted positive rollouts. When no positive rollout is
    /// formatted both sit one past the last ranked rollout.
    int positive_min = 0;
    int positive_max = 0;
};

/// Throws DataError when no rollout is formatted.
RankAssignment global_ranks(const RolloutMatrix& matrix);

enum class RewardBranch { positive_rr, negative_penalty, negative_smooth, squared_error, unformatted };
std::string_view to_string(RewardBranch b);

struct RewardAssignment {
    std::vector<std::vector<double>> rewards;          ///< [doc][rollout]
    std::vector<std::vector<RewardBranch>> branches;   ///< [doc][rollout]
};

enum class RewardKind { se, ndcg, rr };
std::string_view to_string(RewardKind k);
RewardKind parse_reward_kind(std::string_view name);

/// 1 - (s - t)^2 / 100 for a formatted output, -1 otherwise.
double reward_se(const ParsedOutput& parsed, double reference_score);

/// Reciprocal-rank reward. Positives earn 1/rank; negatives ranked at or above
/// the worst positive pay -1/(best positive rank); negatives below every
/// positive earn the squared-error reward; unformatted rollouts get -1.
/// Throws DataError when the matrix has no positive document.
RewardAssignment reward_rr(const RolloutMatrix& matrix, const RankAssignment& ranks);

/// nDCG-contribution reward with f(r) = 1 / log2(r + 1) and an ideal DCG that
/// ranks all |positives| x G rollouts first. Same branches as reward_rr.
RewardAssignment reward_ndcg(const RolloutMatrix& matrix, const RankAssignment& ranks);

RewardAssignment reward_se(const RolloutMatrix& matrix);

/// Dispatches on the reward kind; ranks are computed as needed. A matrix
/// without formatted rollouts yields -1 everywhere for every kind.
RewardAssignment compute_rewards(const RolloutMatrix& matrix, RewardKind kind);

// Rollout dumps are JSON Lines, one (query, doc) per line:
//   {"query_id": "q1", "doc_id": "d1", "reference_score": 4,
//    "rollouts": ["<think>...</think><answer>7</answer>", ...]}
// Positives come from separately supplied judgments.

struct RolloutRecord {
    std::string query_id;
    std::string doc_id;
    double reference_score = 0.0;
    std::vector<std::string> rollouts;
};

std::vector<RolloutRecord> parse_rollout_dump(std::istream& in);

/// Groups records by query (first-appearance order), parses each rollout
/// under `scheme`, and marks positives from the judgments. Throws DataError
/// when a query's documents have differing rollout counts.
std::vector<RolloutMatrix> build_rollout_matrices(const std::vector<RolloutRecord>& records,
                                                  const RelevanceJudgments& qrels, Scheme scheme);

/// One JSON line per rollout: query_id, doc_id, rollout_idx, branch, reward.
void write_reward_dump(const RolloutMatrix& matrix, const RewardAssignment& rewards, std::ostream& out);

}  // namespace pwrank
