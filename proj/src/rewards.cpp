#include "pwrank/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>

#include <json.hpp>

#include "pwrank/errors.hpp"

namespace pwrank {

std::size_t RolloutMatrix::num_positive() const {
    return static_cast<std::size_t>(std::count_if(docs.begin(), docs.end(), [](auto& d) { return d.positive; }));
}

std::size_t RolloutMatrix::num_formatted() const {
    std::size_t n = 0;
    for (const auto& d : docs)
        for (const auto& r : d.rollouts) n += r.formatted ? 1 : 0;
    return n;
}

void validate(const RolloutMatrix& matrix) {
    if (matrix.docs.empty()) throw DataError("query " + matrix.query_id + ": empty rollout matrix");
    const auto g = matrix.group_size();
    if (g == 0) throw DataError("query " + matrix.query_id + ": zero rollouts per document");
    for (const auto& d : matrix.docs)
        if (d.rollouts.size() != g)
            throw DataError("query " + matrix.query_id + ": doc " + d.doc_id + " has " +
                            std::to_string(d.rollouts.size()) + " rollouts, expected " + std::to_string(g));
}

RolloutMatrix make_rollout_matrix(const QueryGroup& group, const std::vector<std::vector<ParsedOutput>>& rollouts,
                                  const std::vector<double>& reference) {
    if (rollouts.size() != group.size() || reference.size() != group.size())
        throw DataError("query " + group.query_id + ": rollouts/reference do not match candidates");
    RolloutMatrix m;
    m.query_id = group.query_id;
    for (std::size_t i = 0; i < group.size(); ++i) {
        const auto& id = group.candidates[i].doc_id;
        m.docs.push_back({id, group.is_positive(id), reference[i], rollouts[i]});
    }
    validate(m);
    return m;
}

RankAssignment global_ranks(const RolloutMatrix& matrix) {
    validate(matrix);
    struct Slot {
        int score;
        std::size_t doc, rollout;
    };
    std::vector<Slot> slots;
    for (std::size_t i = 0; i < matrix.docs.size(); ++i)
        for (std::size_t j = 0; j < matrix.docs[i].rollouts.size(); ++j)
            if (const auto& r = matrix.docs[i].rollouts[j]; r.formatted && r.score)
                slots.push_back({*r.score, i, j});
    if (slots.empty()) throw DataError("query " + matrix.query_id + ": no formatted rollout to rank");

    std::stable_sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) { return a.score > b.score; });

    RankAssignment out;
    out.ranks.resize(matrix.docs.size());
    for (std::size_t i = 0; i < matrix.docs.size(); ++i) out.ranks[i].assign(matrix.docs[i].rollouts.size(), std::nullopt);

    int block_rank = 1;
    for (std::size_t k = 0; k < slots.size(); ++k) {
        if (k > 0 && slots[k].score != slots[k - 1].score) block_rank = static_cast<int>(k) + 1;
        out.ranks[slots[k].doc][slots[k].rollout] = block_rank;
    }

    const int past_last = static_cast<int>(slots.size()) + 1;
    std::optional<int> lo, hi;
    for (std::size_t i = 0; i < matrix.docs.size(); ++i) {
        if (!matrix.docs[i].positive) continue;
        for (const auto& r : out.ranks[i]) {
            if (!r) continue;
            lo = std::min(lo.value_or(*r), *r);
            hi = std::max(hi.value_or(*r), *r);
        }
    }
    out.positive_min = lo.value_or(past_last);
    out.positive_max = hi.value_or(past_last);
    return out;
}

std::string_view to_string(RewardBranch b) {
    switch (b) {
        case RewardBranch::positive_rr: return "positive_rr";
        case RewardBranch::negative_penalty: return "negative_penalty";
        case RewardBranch::negative_smooth: return "negative_smooth";
        case RewardBranch::squared_error: return "squared_error";
        case RewardBranch::unformatted: return "unformatted";
    }
    return "unknown";
}

std::string_view to_string(RewardKind k) {
    switch (k) {
        case RewardKind::se: return "se";
        case RewardKind::ndcg: return "ndcg";
        case RewardKind::rr: return "rr";
    }
    return "unknown";
}

RewardKind parse_reward_kind(std::string_view name) {
    for (auto k : {RewardKind::se, RewardKind::ndcg, RewardKind::rr})
        if (to_string(k) == name) return k;
    throw UsageError("unknown reward '" + std::string(name) + "' (expected se, ndcg or rr)");
}

double reward_se(const ParsedOutput& parsed, double reference_score) {
    if (!parsed.formatted || !parsed.score) return -1.0;
    const double err = static_cast<double>(*parsed.score) - reference_score;
    return 1.0 - err * err / 100.0;
}

namespace {

RewardAssignment all_unformatted(const RolloutMatrix& m) {
    RewardAssignment out;
    for (const auto& d : m.docs) {
        out.rewards.emplace_back(d.rollouts.size(), -1.0);
        out.branches.emplace_back(d.rollouts.size(), RewardBranch::unformatted);
    }
    return out;
}

/// Shared four-branch structure of the listwise rewards; `gain` maps a rank to
/// the positive reward magnitude.
template <class Gain>
RewardAssignment listwise(const RolloutMatrix& matrix, const RankAssignment& ranks, Gain gain) {
    validate(matrix);
    if (matrix.num_positive() == 0)
        throw DataError("query " + matrix.query_id + ": no positive document for a listwise reward");
    RewardAssignment out = all_unformatted(matrix);
    const double penalty = -gain(ranks.positive_min);
    for (std::size_t i = 0; i < matrix.docs.size(); ++i) {
        const auto& doc = matrix.docs[i];
        for (std::size_t j = 0; j < doc.rollouts.size(); ++j) {
            const auto& rank = ranks.ranks[i][j];
            if (!doc.rollouts[j].formatted || !rank) continue;
            if (doc.positive) {
                out.rewards[i][j] = gain(*rank);
                out.branches[i][j] = RewardBranch::positive_rr;
            } else if (*rank <= ranks.positive_max) {
                out.rewards[i][j] = penalty;
                out.branches[i][j] = RewardBranch::negative_penalty;
            } else {
                out.rewards[i][j] = reward_se(doc.rollouts[j], doc.reference_score);
                out.branches[i][j] = RewardBranch::negative_smooth;
            }
        }
    }
    return out;
}

double log_discount(int rank) { return 1.0 / std::log2(static_cast<double>(rank) + 1.0); }

}  // namespace

RewardAssignment reward_rr(const RolloutMatrix& matrix, const RankAssignment& ranks) {
    return listwise(matrix, ranks, [](int rank) { return 1.0 / static_cast<double>(rank); });
}

RewardAssignment reward_ndcg(const RolloutMatrix& matrix, const RankAssignment& ranks) {
    const auto ideal_count = matrix.num_positive() * matrix.group_size();
    double idcg = 0.0;
    for (std::size_t k = 1; k <= ideal_count; ++k) idcg += log_discount(static_cast<int>(k));
    return listwise(matrix, ranks, [idcg](int rank) { return log_discount(rank) / idcg; });
}

RewardAssignment reward_se(const RolloutMatrix& matrix) {
    validate(matrix);
    RewardAssignment out = all_unformatted(matrix);
    for (std::size_t i = 0; i < matrix.docs.size(); ++i) {
        const auto& doc = matrix.docs[i];
        for (std::size_t j = 0; j < doc.rollouts.size(); ++j) {
            if (!doc.rollouts[j].formatted) continue;
            out.rewards[i][j] = reward_se(doc.rollouts[j], doc.reference_score);
            out.branches[i][j] = RewardBranch::squared_error;
        }
    }
    return out;
}

RewardAssignment compute_rewards(const RolloutMatrix& matrix, RewardKind kind) {
    validate(matrix);
    if (kind == RewardKind::se) return reward_se(matrix);
    if (matrix.num_positive() == 0)
        throw DataError("query " + matrix.query_id + ": no positive document for a listwise reward");
    if (matrix.num_formatted() == 0) return all_unformatted(matrix);
    auto ranks = global_ranks(matrix);
    return kind == RewardKind::rr ? reward_rr(matrix, ranks) : reward_ndcg(matrix, ranks);
}

std::vector<RolloutRecord> parse_rollout_dump(std::istream& in) {
    using nlohmann::json;
    std::vector<RolloutRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = "rollout dump line " + std::to_string(line_no) + ": ";
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) throw DataError(where + "malformed JSON");
        try {
            RolloutRecord r;
            r.query_id = rec.at("query_id").get<std::string>();
            r.doc_id = rec.at("doc_id").get<std::string>();
            r.reference_score = rec.value("reference_score", 0.0);
            r.rollouts = rec.at("rollouts").get<std::vector<std::string>>();
            records.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw DataError(where + e.what());
        }
    }
    return records;
}

std::vector<RolloutMatrix> build_rollout_matrices(const std::vector<RolloutRecord>& records,
                                                  const RelevanceJudgments& qrels, Scheme scheme) {
    std::vector<RolloutMatrix> out;
    std::map<std::string, std::size_t> index;
    for (const auto& r : records) {
        auto [it, inserted] = index.try_emplace(r.query_id, out.size());
        if (inserted) out.push_back({r.query_id, {}});
        auto& m = out[it->second];
        for (const auto& d : m.docs)
            if (d.doc_id == r.doc_id) throw DataError("query " + r.query_id + ": duplicate doc " + r.doc_id);
        DocRollouts doc{r.doc_id, qrels.grade(r.query_id, r.doc_id) > 0, r.reference_score, {}};
        for (const auto& raw : r.rollouts) doc.rollouts.push_back(parse_output(raw, scheme));
        m.docs.push_back(std::move(doc));
    }
    for (const auto& m : out) validate(m);
    return out;
}

void write_reward_dump(const RolloutMatrix& matrix, const RewardAssignment& rewards, std::ostream& out) {
    using nlohmann::json;
    for (std::size_t i = 0; i < matrix.docs.size(); ++i)
        for (std::size_t j = 0; j < matrix.docs[i].rollouts.size(); ++j) {
            char reward[64];
            std::snprintf(reward, sizeof reward, "%.6f", rewards.rewards[i][j]);
            out << "{\"query_id\":" << json(matrix.query_id).dump() << ",\"doc_id\":" << json(matrix.docs[i].doc_id).dump()
                << ",\"rollout_idx\":" << j << ",\"branch\":\"" << to_string(rewards.branches[i][j])
                << "\",\"reward\":" << reward << "}\n";
        }
}

}  // namespace pwrank
