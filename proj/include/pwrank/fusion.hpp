#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>

namespace pwrank {

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Normalized scores; `degenerate` marks a constant input mapped to zeros.
template <class Scalar>
struct Normalized {
    Vector<Scalar> values;
    bool degenerate = false;
};

namespace detail {

template <class Derived>
bool is_constant(const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar spread) {
    using Scalar = typename Derived::Scalar;
    Scalar scale = std::max<Scalar>(Scalar(1), x.cwiseAbs().maxCoeff());
    return spread <= Scalar(1e-12) * scale;
}

}  // namespace detail

/// (x - mean) / std with the population standard deviation. A constant input
/// maps to zeros and is flagged, as does a list shorter than two.
template <class Derived>
Normalized<typename Derived::Scalar> zscore_normalize(const Eigen::MatrixBase<Derived>& x) {
    using Scalar = typename Derived::Scalar;
    if (x.size() < 2) return {Vector<Scalar>::Zero(x.size()), true};
    const Scalar mean = x.mean();
    Vector<Scalar> centered = (x.array() - mean).matrix();
    const Scalar stddev = std::sqrt(centered.squaredNorm() / Scalar(x.size()));
    if (detail::is_constant(x, stddev)) return {Vector<Scalar>::Zero(x.size()), true};
    return {centered / stddev, false};
}

/// (x - min) / (max - min); constant input maps to zeros and is flagged.
template <class Derived>
Normalized<typename Derived::Scalar> minmax_normalize(const Eigen::MatrixBase<Derived>& x) {
    using Scalar = typename Derived::Scalar;
    if (x.size() < 2) return {Vector<Scalar>::Zero(x.size()), true};
    const Scalar lo = x.minCoeff();
    const Scalar range = x.maxCoeff() - lo;
    if (detail::is_constant(x, range)) return {Vector<Scalar>::Zero(x.size()), true};
    return {((x.array() - lo) / range).matrix(), false};
}

enum class FusionStrategy { raw_weighted, minmax_blend, zscore_blend };

std::string_view to_string(FusionStrategy s);
FusionStrategy parse_fusion_strategy(std::string_view name);

struct FusionConfig {
    FusionStrategy strategy = FusionStrategy::zscore_blend;
    double weight_rerank = 0.8;
    double weight_first_stage = 0.2;
    double raw_multiplier = 100.0;

    /// Recipes: raw 100 x rerank + first-stage; min-max 0.9 / 0.1;
    /// z-score 0.8 / 0.2.
    static FusionConfig preset(FusionStrategy s);
    /// Throws UsageError when a blend's weights are outside [0, 1] or do not sum to 1.
    void validate() const;
};

/// `key = value` lines (strategy, weight_rerank, weight_first_stage,
/// raw_multiplier); '#' starts a comment. Unspecified keys take the preset
/// of the configured strategy.
FusionConfig parse_fusion_config(std::istream& in);
FusionConfig load_fusion_config(const std::filesystem::path& path);

struct FusionResult {
    std::map<std::string, double> scores;
    bool rerank_degenerate = false;
    bool first_stage_degenerate = false;
};

/// Combines two score lists over the same candidate set of one query.
/// Throws DataError listing the symmetric difference when the doc sets differ.
FusionResult fuse(const std::map<std::string, double>& rerank_scores,
                  const std::map<std::string, double>& first_stage_scores, const FusionConfig& config);

/// Vector form of `fuse` for aligned inputs.
template <class DerivedA, class DerivedB>
Vector<typename DerivedA::Scalar> fuse_aligned(const Eigen::MatrixBase<DerivedA>& rerank,
                                               const Eigen::MatrixBase<DerivedB>& first_stage,
                                               const FusionConfig& config, bool* rerank_degenerate = nullptr,
                                               bool* first_degenerate = nullptr) {
    using Scalar = typename DerivedA::Scalar;
    const Scalar wr(config.weight_rerank), wf(config.weight_first_stage);
    auto flag = [](bool* out, bool v) {
        if (out) *out = v;
    };
    switch (config.strategy) {
        case FusionStrategy::raw_weighted:
            flag(rerank_degenerate, false);
            flag(first_degenerate, false);
            return Scalar(config.raw_multiplier) * rerank + wf * first_stage;
        case FusionStrategy::minmax_blend: {
            auto r = minmax_normalize(rerank);
            auto f = minmax_normalize(first_stage);
            flag(rerank_degenerate, r.degenerate);
            flag(first_degenerate, f.degenerate);
            return wr * r.values + wf * f.values;
        }
        case FusionStrategy::zscore_blend: {
            auto r = zscore_normalize(rerank);
            auto f = zscore_normalize(first_stage);
            flag(rerank_degenerate, r.degenerate);
            flag(first_degenerate, f.degenerate);
            return wr * r.values + wf * f.values;
        }
    }
    return Vector<Scalar>::Zero(rerank.size());
}

}  // namespace pwrank
