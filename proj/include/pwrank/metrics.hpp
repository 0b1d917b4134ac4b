#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pwrank/types.hpp"

namespace pwrank {

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;
};

/// Documents in descending score order, ties by ascending doc_id.
struct RankedList {
    std::string query_id;
    std::vector<ScoredDoc> docs;

    std::vector<std::string> doc_ids() const;
    std::vector<RunEntry> to_run(const std::string& run_tag) const;
};

/// Sorts `docs` descending by score with ascending doc_id tie-breaking.
RankedList rank_scored(std::string query_id, std::vector<ScoredDoc> docs);

/// Throws DataError naming the first candidate without a score.
RankedList rank_by_score(const QueryGroup& group, const std::map<std::string, double>& scores);

/// Sum over the first min(k, n) positions of (2^g - 1) / log2(pos + 1).
double dcg_at_k(std::span<const int> ranked_grades, int k);

/// DCG@k of the ranking over the ideal DCG@k of all judged grades for the
/// query. Zero when the ideal DCG is zero.
double ndcg_at_k(std::span<const int> ranked_grades, std::span<const int> all_grades, int k);

/// Reciprocal rank of the first grade > 0, or 0.
double mrr(std::span<const int> ranked_grades);

struct QueryMetrics {
    std::string query_id;
    double ndcg = 0.0;
    double mrr = 0.0;
};

struct GroupMean {
    std::string name;
    double ndcg = 0.0;
    double mrr = 0.0;
    std::size_t queries = 0;
};

struct MetricReport {
    int k = 10;
    std::vector<QueryMetrics> per_query;
    GroupMean overall;                 ///< mean over all evaluated queries
    std::vector<GroupMean> subsets;    ///< per subset, when a subset map is given
    std::vector<GroupMean> benchmarks; ///< mean of subset means per benchmark
    GroupMean subset_macro;            ///< unweighted mean over subsets
    GroupMean benchmark_macro;         ///< unweighted mean over benchmarks
};

struct SubsetAssignment {
    std::string subset;
    std::string benchmark;
};

/// Evaluates every query that appears in both the run and the qrels.
/// Unjudged retrieved documents count as grade 0. Throws DataError when the
/// two share no query.
MetricReport evaluate_run(const std::vector<RunEntry>& run, const RelevanceJudgments& qrels, int k,
                          const std::map<std::string, SubsetAssignment>& subsets = {});

/// Tab-separated `scope name ndcg@k mrr queries` rows with 6-digit values.
void write_metric_report(const MetricReport& report, std::ostream& out);

/// `query_id subset benchmark` per line.
std::map<std::string, SubsetAssignment> parse_subset_map(std::istream& in);

}  // namespace pwrank
