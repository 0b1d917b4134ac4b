#include "pwrank/fusion.hpp"

#include <fstream>
#include <istream>
#include <optional>
#include <string>

#include "pwrank/errors.hpp"

namespace pwrank {

std::string_view to_string(FusionStrategy s) {
    switch (s) {
        case FusionStrategy::raw_weighted: return "raw_weighted";
        case FusionStrategy::minmax_blend: return "minmax_blend";
        case FusionStrategy::zscore_blend: return "zscore_blend";
    }
    return "unknown";
}

FusionStrategy parse_fusion_strategy(std::string_view name) {
    for (auto s : {FusionStrategy::raw_weighted, FusionStrategy::minmax_blend, FusionStrategy::zscore_blend})
        if (to_string(s) == name) return s;
    throw UsageError("unknown fusion strategy '" + std::string(name) + "'");
}

FusionConfig FusionConfig::preset(FusionStrategy s) {
    switch (s) {
        case FusionStrategy::raw_weighted: return {s, 1.0, 1.0, 100.0};
        case FusionStrategy::minmax_blend: return {s, 0.9, 0.1, 100.0};
        case FusionStrategy::zscore_blend: return {s, 0.8, 0.2, 100.0};
    }
    return {};
}

void FusionConfig::validate() const {
    if (!std::isfinite(weight_rerank) || !std::isfinite(weight_first_stage) || !std::isfinite(raw_multiplier))
        throw UsageError("fusion weights must be finite");
    if (strategy == FusionStrategy::raw_weighted) return;
    if (weight_rerank < 0.0 || weight_rerank > 1.0 || weight_first_stage < 0.0 || weight_first_stage > 1.0)
        throw UsageError("blend weights must lie in [0, 1]");
    if (std::abs(weight_rerank + weight_first_stage - 1.0) > 1e-9)
        throw UsageError("blend weights must sum to 1");
}

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used == value.size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError("fusion config: '" + key + "' expects a number, got '" + value + "'");
}

}  // namespace

FusionConfig parse_fusion_config(std::istream& in) {
    std::optional<FusionStrategy> strategy;
    std::optional<double> wr, wf, mult;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError("fusion config line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key == "strategy") strategy = parse_fusion_strategy(value);
        else if (key == "weight_rerank") wr = parse_number(key, value);
        else if (key == "weight_first_stage") wf = parse_number(key, value);
        else if (key == "raw_multiplier") mult = parse_number(key, value);
        else throw UsageError("fusion config: unknown key '" + key + "'");
    }
    FusionConfig cfg = FusionConfig::preset(strategy.value_or(FusionStrategy::zscore_blend));
    if (wr) cfg.weight_rerank = *wr;
    if (wf) cfg.weight_first_stage = *wf;
    if (mult) cfg.raw_multiplier = *mult;
    cfg.validate();
    return cfg;
}

FusionConfig load_fusion_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open fusion config " + path.string());
    return parse_fusion_config(in);
}

FusionResult fuse(const std::map<std::string, double>& rerank_scores,
                  const std::map<std::string, double>& first_stage_scores, const FusionConfig& config) {
    config.validate();
    std::string diff;
    for (const auto& [id, _] : rerank_scores)
        if (!first_stage_scores.contains(id)) diff += (diff.empty() ? "" : ", ") + id;
    for (const auto& [id, _] : first_stage_scores)
        if (!rerank_scores.contains(id)) diff += (diff.empty() ? "" : ", ") + id;
    if (!diff.empty()) throw DataError("fusion inputs cover different documents: " + diff);

    const auto n = static_cast<Eigen::Index>(rerank_scores.size());
    Vector<double> rr(n), fs(n);
    Eigen::Index i = 0;
    // Both maps iterate in the same key order.
    for (auto a = rerank_scores.begin(), b = first_stage_scores.begin(); a != rerank_scores.end(); ++a, ++b, ++i) {
        rr[i] = a->second;
        fs[i] = b->second;
    }
    FusionResult result;
    Vector<double> fused = fuse_aligned(rr, fs, config, &result.rerank_degenerate, &result.first_stage_degenerate);
    i = 0;
    for (const auto& [id, _] : rerank_scores) result.scores[id] = fused[i++];
    return result;
}

}  // namespace pwrank
