#include "pwrank/types.hpp"

#include <set>

#include "pwrank/errors.hpp"

namespace pwrank {

void validate(const QueryGroup& group) {
    if (group.query_id.empty()) throw DataError("query group with empty query_id");
    if (group.candidates.empty())
        throw DataError("query " + group.query_id + ": no candidates");
    std::set<std::string> seen;
    for (const auto& doc : group.candidates) {
        if (doc.doc_id.empty())
            throw DataError("query " + group.query_id + ": candidate with empty doc_id");
        if (!seen.insert(doc.doc_id).second)
            throw DataError("query " + group.query_id + ": duplicate doc_id " + doc.doc_id);
    }
    for (const auto& [doc_id, grade] : group.labels) {
        if (!seen.contains(doc_id))
            throw DataError("query " + group.query_id + ": label for unknown doc_id " + doc_id);
        if (grade < 0)
            throw DataError("query " + group.query_id + ": negative grade for " + doc_id);
    }
}

void RelevanceJudgments::set(const std::string& query_id, const std::string& doc_id, int grade) {
    if (grade < 0) throw DataError("negative grade for " + query_id + "/" + doc_id);
    by_query_[query_id][doc_id] = grade;
}

int RelevanceJudgments::grade(const std::string& query_id, const std::string& doc_id) const {
    auto q = by_query_.find(query_id);
    if (q == by_query_.end()) return 0;
    auto d = q->second.find(doc_id);
    return d == q->second.end() ? 0 : d->second;
}

bool RelevanceJudgments::has_query(const std::string& query_id) const {
    return by_query_.contains(query_id);
}

std::vector<int> RelevanceJudgments::grades_for(const std::string& query_id) const {
    std::vector<int> out;
    if (auto* q = query(query_id)) {
        out.reserve(q->size());
        for (const auto& [_, g] : *q) out.push_back(g);
    }
    return out;
}

const std::map<std::string, int>* RelevanceJudgments::query(const std::string& query_id) const {
    auto q = by_query_.find(query_id);
    return q == by_query_.end() ? nullptr : &q->second;
}

std::vector<std::string> RelevanceJudgments::query_ids() const {
    std::vector<std::string> ids;
    ids.reserve(by_query_.size());
    for (const auto& [qid, _] : by_query_) ids.push_back(qid);
    return ids;
}

std::size_t RelevanceJudgments::size() const {
    std::size_t n = 0;
    for (const auto& [_, docs] : by_query_) n += docs.size();
    return n;
}

}  // namespace pwrank
