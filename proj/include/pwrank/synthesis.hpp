#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "pwrank/backend.hpp"
#include "pwrank/errors.hpp"
#include "pwrank/scoring.hpp"
#include "pwrank/tokenizer.hpp"
#include "pwrank/types.hpp"

namespace pwrank {

inline constexpr std::size_t kMaxRetrievalDepth = 1000;

struct RetrievedDoc {
    std::string doc_id;
    double score = 0.0;
};

/// First-stage ranking for one query; position i holds retrieval rank i + 1.
struct RetrievalRanking {
    std::string query_id;
    std::vector<RetrievedDoc> docs;

    /// Throws DataError on increasing scores, depth above 1000 or duplicate ids.
    void validate() const;
};

/// Converts a parsed run (by query, rank order) into validated rankings.
std::map<std::string, RetrievalRanking> rankings_from_run(const std::vector<RunEntry>& entries);

enum class Stratum { positive, hard, medium, easy, synthetic };

std::string_view to_string(Stratum stratum);

/// Inclusive 1-based retrieval rank range.
struct RankRange {
    int first = 1;
    int last = 1;
};

struct NegativeCounts {
    int hard = 10;
    int medium = 5;
    int easy = 4;
    int synthetic = 0;

    int total() const { return hard + medium + easy + synthetic; }
};

/// Training source profile: how many pre-existing synthetic negatives a
/// query brings, which fixes the split of the rest.
struct SourceProfile {
    std::string name;
    int synthetic_negatives = 0;
};

/// "reasonir_hq" (1 synthetic negative) or "msmarco"/"promptriever" (none).
SourceProfile source_profile(std::string_view name);

struct SynthesisConfig {
    RankRange hard{1, 10};
    RankRange medium{11, 100};
    RankRange easy{101, 1000};
    int docs_per_query = 20;
    int consensus_samples = 3;
    std::size_t max_output_tokens = 2048;
    std::uint64_t seed = 0;
    int teacher_attempts = 3;
    int parallelism = 1;
    double temperature = 0.6;

    void validate() const;
    /// Negatives per stratum for a profile: the whole hard range, then the
    /// rest split between medium and easy with medium taking the odd one.
    NegativeCounts counts_for(const SourceProfile& profile) const;
};

/// A rank range cannot supply the requested negatives.
class SamplingShortfall : public DataError {
public:
    using DataError::DataError;
};

struct SampledNegative {
    std::string doc_id;
    int retrieval_rank = 0;
    Stratum stratum = Stratum::hard;
};

/// Hard negatives are the hard range minus positives; medium and easy are
/// drawn uniformly without replacement. A stratum short of candidates after
/// excluding positives borrows the shortfall from the next lower range, and
/// borrowed docs carry that range's stratum. `excluded` ids (positives,
/// synthetic negatives) are never sampled. Throws SamplingShortfall naming the
/// range and the shortfall when the easy range runs dry.
std::vector<SampledNegative> sample_negatives(const RetrievalRanking& ranking, const std::set<std::string>& excluded,
                                              const NegativeCounts& counts, const SynthesisConfig& config,
                                              std::uint64_t seed);

struct ConsensusChoice {
    std::size_t index = 0;   ///< into the generation list
    double consensus = 0.0;  ///< mean score of the formatted generations
};

/// Throws DataError when no generation is formatted.
ConsensusChoice consensus_select(const std::vector<ParsedOutput>& generations);

struct SftRecord {
    std::string query_id;
    std::string doc_id;
    std::string profile;
    Stratum stratum = Stratum::hard;
    int retrieval_rank = 0;  ///< 0 for docs that were not retrieved
    std::string prompt;
    std::string trajectory;
    int selected_score = 0;
    double consensus_score = 0.0;
};

/// Keeps records whose trajectory is at most `max_tokens` long. Returns the
/// number dropped.
std::size_t filter_by_length(std::vector<SftRecord>& records, std::size_t max_tokens,
                             const Tokenizer& tokenizer = default_tokenizer());

enum class DropReason { backend_failure, unformatted, too_long, sampling_shortfall };

std::string_view to_string(DropReason reason);

struct SynthesisReport {
    std::size_t queries_in = 0;
    std::size_t queries_emitted = 0;
    std::size_t pairs_requested = 0;
    std::size_t pairs_emitted = 0;
    std::map<Stratum, std::size_t> pairs_by_stratum;    ///< emitted
    std::map<DropReason, std::size_t> dropped_pairs;
    std::map<DropReason, std::size_t> dropped_queries;  ///< by first reason seen
    std::size_t unformatted_generations = 0;
    std::vector<std::string> failures;  ///< "query/doc: message"
};

void write_synthesis_report(std::ostream& out, const SynthesisReport& report);

struct SynthesisQuery {
    QueryGroup group;  ///< labels mark the positive; label-0 candidates are synthetic negatives
    std::string profile;
};

struct SftDataset {
    std::vector<SftRecord> records;
    SynthesisReport report;
};

/// Assembles docs_per_query documents per query (1 positive + negatives),
/// samples consensus_samples 0-10 judgments per pair from the teacher and
/// keeps the consensus trajectory. A query is emitted only when all of its
/// pairs survive. Throws DataError when a query lacks exactly one positive,
/// a ranking, or document text.
SftDataset build_sft_dataset(const std::vector<SynthesisQuery>& queries,
                             const std::map<std::string, RetrievalRanking>& rankings,
                             const std::map<std::string, std::string>& corpus, ScorerBackend& teacher,
                             const SynthesisConfig& config,
                             const PromptTemplate& tmpl = PromptTemplate::builtin(Scheme::int_0_10),
                             const Tokenizer& tokenizer = default_tokenizer());

void write_sft_records(std::ostream& out, const std::vector<SftRecord>& records);
void write_sft_records(const std::filesystem::path& path, const std::vector<SftRecord>& records);

}  // namespace pwrank
