#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "pwrank/errors.hpp"

namespace pwrank {

template <class Scalar>
using GrpoVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct GrpoConfig {
    int group_size = 5;       ///< rollout_n
    double clip_ratio = 0.2;  ///< epsilon
    double kl_coef = 0.001;   ///< beta, low-variance (k3) KL estimator

    void validate() const {
        if (group_size < 2) throw UsageError("rollout_n must be >= 2");
        if (!(clip_ratio > 0.0 && clip_ratio < 1.0)) throw UsageError("clip_ratio must lie in (0, 1)");
        if (!(kl_coef >= 0.0)) throw UsageError("kl_loss_coef must be >= 0");
    }
};

inline constexpr double kAdvantageEpsilon = 1e-8;

/// (r - mean) / (std + 1e-8) with the population standard deviation. A group
/// with (numerically) identical rewards gets zero advantages.
template <class Derived>
GrpoVector<typename Derived::Scalar> group_advantages(const Eigen::MatrixBase<Derived>& rewards) {
    using Scalar = typename Derived::Scalar;
    const auto n = rewards.size();
    if (n == 0) return {};
    const Scalar mean = rewards.mean();
    GrpoVector<Scalar> centered = (rewards.array() - mean).matrix();
    const Scalar stddev = std::sqrt(centered.squaredNorm() / Scalar(n));
    const Scalar scale = std::max<Scalar>(Scalar(1), rewards.cwiseAbs().maxCoeff());
    if (stddev <= Scalar(1e-12) * scale) return GrpoVector<Scalar>::Zero(n);
    return centered / (stddev + Scalar(kAdvantageEpsilon));
}

/// min(rho * A, clip(rho, 1 - eps, 1 + eps) * A) with rho = exp(logp_new - logp_old).
template <class Scalar>
Scalar clipped_term(Scalar logp_new, Scalar logp_old, Scalar advantage, Scalar clip_ratio) {
    const Scalar ratio = std::exp(logp_new - logp_old);
    const Scalar clipped = std::clamp(ratio, Scalar(1) - clip_ratio, Scalar(1) + clip_ratio);
    return std::min(ratio * advantage, clipped * advantage);
}

/// True when the clipped branch is the one selected and it differs from the
/// unclipped branch, i.e. the term carries no gradient.
template <class Scalar>
bool clip_active(Scalar logp_new, Scalar logp_old, Scalar advantage, Scalar clip_ratio) {
    const Scalar ratio = std::exp(logp_new - logp_old);
    const Scalar clipped = std::clamp(ratio, Scalar(1) - clip_ratio, Scalar(1) + clip_ratio);
    return clipped != ratio && clipped * advantage < ratio * advantage;
}

/// k3 estimator r - log r - 1 with r = pi_ref / pi_theta. Non-negative.
template <class Scalar>
Scalar kl_k3(Scalar logp_ref, Scalar logp_new) {
    const Scalar log_ratio = logp_ref - logp_new;
    // expm1 keeps precision when the ratio is near 1.
    return std::max(Scalar(0), std::expm1(log_ratio) - log_ratio);
}

/// Per-token log-probabilities of one trajectory under the current, old and
/// reference policies.
template <class Scalar>
struct TrajectoryLogProbs {
    GrpoVector<Scalar> current;
    GrpoVector<Scalar> old;
    GrpoVector<Scalar> reference;

    Eigen::Index length() const { return current.size(); }
};

template <class Scalar>
void validate(const TrajectoryLogProbs<Scalar>& t) {
    if (t.current.size() < 1) throw DataError("trajectory with no tokens");
    if (t.old.size() != t.current.size() || t.reference.size() != t.current.size())
        throw DataError("trajectory log-prob sequences differ in length");
}

/// Mean over trajectories of the token mean of clipped_term - beta * kl_k3.
/// Every token of trajectory i shares advantage i.
template <class Scalar, class Derived>
Scalar grpo_objective(std::span<const TrajectoryLogProbs<Scalar>> group,
                      const Eigen::MatrixBase<Derived>& advantages, const GrpoConfig& config) {
    if (static_cast<Eigen::Index>(group.size()) != advantages.size())
        throw DataError("grpo_objective: " + std::to_string(group.size()) + " trajectories but " +
                        std::to_string(advantages.size()) + " advantages");
    if (group.empty()) throw DataError("grpo_objective: empty group");
    const Scalar eps(config.clip_ratio), beta(config.kl_coef);
    Scalar total(0);
    for (std::size_t i = 0; i < group.size(); ++i) {
        const auto& t = group[i];
        validate(t);
        const Scalar adv = advantages[static_cast<Eigen::Index>(i)];
        Scalar sum(0);
        for (Eigen::Index k = 0; k < t.length(); ++k)
            sum += clipped_term(t.current[k], t.old[k], adv, eps) - beta * kl_k3(t.reference[k], t.current[k]);
        total += sum / Scalar(t.length());
    }
    return total / Scalar(group.size());
}

}  // namespace pwrank
