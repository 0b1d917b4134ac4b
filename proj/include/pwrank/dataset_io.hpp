#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "pwrank/types.hpp"

namespace pwrank {

// Query-group datasets are JSON Lines, one group per line:
//   {"query_id": "q1", "query": "...", "instruction": "...",
//    "candidates": [{"doc_id": "d1", "text": "...", "first_stage_score": 12.3}],
//    "labels": {"d1": 1}}
// "instruction", "labels" and "first_stage_score" are optional. Blank lines
// are skipped.

std::vector<QueryGroup> parse_query_groups(std::istream& in);
std::vector<QueryGroup> load_query_groups(const std::filesystem::path& path);
void write_query_groups(const std::vector<QueryGroup>& groups, std::ostream& out);

/// TREC qrels: `qid iter docid grade`, whitespace separated.
RelevanceJudgments parse_qrels(std::istream& in);
RelevanceJudgments load_qrels(const std::filesystem::path& path);

/// Relevance judgments implied by the labels of a set of groups.
RelevanceJudgments judgments_from_groups(const std::vector<QueryGroup>& groups);

/// Checks per-query rank contiguity (1..k) and non-increasing scores.
/// Throws DataError on the first violation.
void validate_run(const std::vector<RunEntry>& entries);

/// `qid Q0 docid rank score runtag`, score with 6 fractional digits.
std::string format_run_line(const RunEntry& entry);

/// Validates every query before emitting anything.
void write_run(const std::vector<RunEntry>& entries, std::ostream& out);
void write_run(const std::vector<RunEntry>& entries, const std::filesystem::path& path);

/// TREC 6-column run file. Entries are returned in file order.
std::vector<RunEntry> parse_run(std::istream& in);
std::vector<RunEntry> load_run(const std::filesystem::path& path);

/// Groups run entries by query, each list sorted by rank.
std::map<std::string, std::vector<RunEntry>> group_run(const std::vector<RunEntry>& entries);

/// Corpus as JSON Lines of {"doc_id": ..., "text": ...}.
std::map<std::string, std::string> load_corpus(const std::filesystem::path& path);

}  // namespace pwrank
