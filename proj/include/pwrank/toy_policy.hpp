#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pwrank/grpo.hpp"
#include "pwrank/rewards.hpp"
#include "pwrank/types.hpp"

namespace pwrank {

inline constexpr int kScoreClasses = 11;  // scores 0..10
inline constexpr int kToyFeatures = 4;

/// Hand-crafted (query, document) features: bias, query-token recall,
/// token Jaccard similarity, and a hashed pseudo-noise value in [-1, 1].
Eigen::VectorXd toy_features(const QueryGroup& group, const Document& doc);

/// Linear scorer with a softmax over the 11 score classes.
struct ToyPolicy {
    Eigen::Matrix<double, kScoreClasses, Eigen::Dynamic> weights;

    static ToyPolicy zeros(int num_features = kToyFeatures);
    /// Gaussian weights with standard deviation `scale`.
    static ToyPolicy random(std::uint64_t seed, double scale, int num_features = kToyFeatures);

    Eigen::Matrix<double, kScoreClasses, 1> probabilities(const Eigen::VectorXd& features) const;
    Eigen::Matrix<double, kScoreClasses, 1> log_probabilities(const Eigen::VectorXd& features) const;
    double expected_score(const Eigen::VectorXd& features) const;
};

void write_policy(const ToyPolicy& policy, std::ostream& out);
ToyPolicy read_policy(std::istream& in);

/// Sampled rollouts for one prompt (one query-document pair) with the
/// quantities the objective needs, frozen at sampling time.
struct PromptBatch {
    Eigen::VectorXd features;
    std::vector<int> scores;          ///< G sampled score classes
    Eigen::VectorXd old_logp;         ///< log pi_old(score)
    Eigen::VectorXd ref_logp;         ///< log pi_ref(score)
    Eigen::VectorXd advantages;       ///< group-normalized advantages
};

struct ObjectiveEval {
    double objective = 0.0;
    double mean_kl = 0.0;
    double clip_fraction = 0.0;
    Eigen::Matrix<double, kScoreClasses, Eigen::Dynamic> gradient;
};

/// Mean GRPO objective over the prompts and its analytic gradient with
/// respect to the policy weights.
ObjectiveEval evaluate_objective(const ToyPolicy& policy, std::span<const PromptBatch> prompts,
                                 const GrpoConfig& config);

struct ToyTrainerConfig {
    GrpoConfig grpo;
    RewardKind reward = RewardKind::rr;
    double learning_rate = 5.0;
    int mini_batch_queries = 16;  ///< queries per gradient update; one pass over the data per step
    double init_scale = 0.01;
};

struct PolicyStepStats {
    int step = 0;
    double mean_reward = 0.0;
    double objective = 0.0;
    double mean_kl = 0.0;
    double clip_fraction = 0.0;
    double grad_norm = 0.0;
    double ndcg_at_10 = 0.0;  ///< ranking by expected score, before this step's update
};

struct ToyTrainingResult {
    ToyPolicy policy;
    std::vector<PolicyStepStats> stats;
};

/// Mean nDCG@10 of ranking each group by the policy's expected score.
double policy_ndcg(const ToyPolicy& policy, const std::vector<QueryGroup>& dataset, int k = 10);

/// GRPO over the dataset. Each step refreshes pi_old, samples G scores per
/// (query, doc), computes rewards against the frozen initial policy (which
/// serves as pi_ref and supplies reference scores), then makes one pass of
/// mini-batch gradient ascent. Stats for step s describe the policy before
/// its update; steps == 0 returns the initial policy with no stats. Throws
/// DataError when a group has no positive.
ToyTrainingResult train_toy_policy(const std::vector<QueryGroup>& dataset, const ToyTrainerConfig& config, int steps,
                                   std::uint64_t seed);

/// `queries` groups of `docs` candidates with one positive each. The positive
/// shares most of its tokens with the query; negatives share few.
std::vector<QueryGroup> make_separable_dataset(int queries, int docs, std::uint64_t seed);

void write_step_stats(const PolicyStepStats& stats, std::ostream& out);

}  // namespace pwrank
