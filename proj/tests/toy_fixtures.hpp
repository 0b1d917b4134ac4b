// Random toy-policy batches and a finite-difference gradient.
#pragma once

#include <random>
#include <vector>

#include "pwrank/grpo.hpp"
#include "pwrank/toy_policy.hpp"

namespace fixtures {

/// Prompts whose old/ref log-probs sit near the policy's own, so the
/// importance ratios straddle the clip range.
inline std::vector<pwrank::PromptBatch> random_batches(const pwrank::ToyPolicy& policy, std::mt19937_64& rng,
                                                       int prompts, int group) {
    std::normal_distribution<double> g;
    std::uniform_int_distribution<int> cls(0, pwrank::kScoreClasses - 1);
    std::vector<pwrank::PromptBatch> out;
    for (int p = 0; p < prompts; ++p) {
        pwrank::PromptBatch b;
        b.features = Eigen::VectorXd(policy.weights.cols());
        for (auto& v : b.features) v = g(rng);
        const auto logp = policy.log_probabilities(b.features);
        b.old_logp.resize(group);
        b.ref_logp.resize(group);
        Eigen::VectorXd rewards(group);
        for (int j = 0; j < group; ++j) {
            const int s = cls(rng);
            b.scores.push_back(s);
            b.old_logp(j) = logp(s) + 0.3 * g(rng);
            b.ref_logp(j) = logp(s) + 0.5 * g(rng);
            rewards(j) = g(rng);
        }
        b.advantages = pwrank::group_advantages(rewards);
        out.push_back(std::move(b));
    }
    return out;
}

inline Eigen::MatrixXd finite_difference(const pwrank::ToyPolicy& policy, const std::vector<pwrank::PromptBatch>& batches,
                                         const pwrank::GrpoConfig& config, double h = 1e-6) {
    Eigen::MatrixXd grad(policy.weights.rows(), policy.weights.cols());
    for (Eigen::Index r = 0; r < grad.rows(); ++r)
        for (Eigen::Index c = 0; c < grad.cols(); ++c) {
            auto up = policy, down = policy;
            up.weights(r, c) += h;
            down.weights(r, c) -= h;
            grad(r, c) = (pwrank::evaluate_objective(up, batches, config).objective -
                          pwrank::evaluate_objective(down, batches, config).objective) /
                         (2 * h);
        }
    return grad;
}

/// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const double scale = std::max(a.norm(), b.norm());
    return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

}  // namespace fixtures
