#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pwrank {

struct Document {
    std::string doc_id;
    std::string text;
    std::optional<double> first_stage_score;
};

/// One query with its relevance instruction and candidate pool. Labels map
/// doc_id to a non-negative grade; unlabeled candidates are negatives.
struct QueryGroup {
    std::string query_id;
    std::string query_text;
    std::string instruction;
    std::vector<Document> candidates;
    std::map<std::string, int> labels;

    int grade(const std::string& doc_id) const {
        auto it = labels.find(doc_id);
        return it == labels.end() ? 0 : it->second;
    }
    bool is_positive(const std::string& doc_id) const { return grade(doc_id) > 0; }
    std::size_t size() const { return candidates.size(); }
};

/// Throws DataError when the group breaks its invariants: empty query_id,
/// no candidates, empty or duplicate doc_id, labels naming unknown documents,
/// or negative grades.
void validate(const QueryGroup& group);

/// (query_id, doc_id) -> grade.
class RelevanceJudgments {
public:
    void set(const std::string& query_id, const std::string& doc_id, int grade);

    /// Grade of a judged pair, or 0 when unjudged.
    int grade(const std::string& query_id, const std::string& doc_id) const;
    bool has_query(const std::string& query_id) const;
    /// All judged grades for a query (including zeros), in doc_id order.
    std::vector<int> grades_for(const std::string& query_id) const;
    const std::map<std::string, int>* query(const std::string& query_id) const;

    std::vector<std::string> query_ids() const;
    std::size_t size() const;

private:
    std::map<std::string, std::map<std::string, int>> by_query_;
};

struct RunEntry {
    std::string query_id;
    std::string doc_id;
    int rank = 0;
    double score = 0.0;
    std::string run_tag;

    friend bool operator==(const RunEntry&, const RunEntry&) = default;
};

}  // namespace pwrank
