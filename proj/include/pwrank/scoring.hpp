#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pwrank/tokenizer.hpp"

namespace pwrank {

/// Output format a prompt asks for and the parser expects.
enum class Scheme {
    binary_plain,  ///< bare "yes" / "no"
    binary_think,  ///< <think>..</think><answer>yes|no</answer>
    int_0_3,       ///< <think>..</think><answer>0..3</answer>
    int_0_10,      ///< <think>..</think><answer>0..10</answer>
};

std::string_view to_string(Scheme scheme);
/// Accepts the enumerator names; throws UsageError otherwise.
Scheme parse_scheme(std::string_view name);

bool is_binary(Scheme scheme);
/// Largest admissible answer value (1 for binary schemes, yes = 1).
int max_score(Scheme scheme);

inline constexpr std::size_t kDefaultTruncationTokens = 2048;

/// Prompt text with `{instruction}`, `{query}` and `{document}` placeholders,
/// each appearing exactly once.
class PromptTemplate {
public:
    PromptTemplate(std::string text, Scheme scheme,
                   std::size_t max_query_tokens = kDefaultTruncationTokens,
                   std::size_t max_doc_tokens = kDefaultTruncationTokens);

    /// Built-in template for a scheme.
    static PromptTemplate builtin(Scheme scheme);
    static PromptTemplate from_file(const std::filesystem::path& path, Scheme scheme);

    const std::string& text() const { return text_; }
    Scheme scheme() const { return scheme_; }
    std::size_t max_query_tokens() const { return max_query_tokens_; }
    std::size_t max_doc_tokens() const { return max_doc_tokens_; }

private:
    std::string text_;
    Scheme scheme_;
    std::size_t max_query_tokens_;
    std::size_t max_doc_tokens_;
};

struct RenderedPrompt {
    std::string text;
    bool query_truncated = false;
    bool document_truncated = false;

    bool truncated() const { return query_truncated || document_truncated; }
};

/// Substitutes the placeholders in a single pass, so placeholder-like text in
/// the query or document is never re-expanded.
RenderedPrompt render_prompt(const PromptTemplate& tmpl, std::string_view instruction,
                             std::string_view query, std::string_view document,
                             const Tokenizer& tokenizer = default_tokenizer());

/// Relevance instruction for a benchmark subset or training source
/// (e.g. "aops", "biology", "trec_dl", "followir", "msmarco"). Unknown names
/// throw UsageError.
const std::string& instruction_for(std::string_view subset);

/// Subset names with a registered instruction.
std::vector<std::string> instruction_subsets();

struct ParsedOutput {
    std::string think_text;
    std::optional<int> score;
    std::optional<double> answer_token_prob;
    bool formatted = false;
    std::string raw_text;
};

/// Never throws. Anything other than the scheme's exact shape (surrounding
/// whitespace aside) yields formatted = false and no score.
ParsedOutput parse_output(std::string_view raw, Scheme scheme);

/// One sampled completion as reported by a backend. `answer_logprobs` are
/// the log-probabilities of the tokens spelling the answer; `alternatives`
/// holds candidate tokens and their log-probabilities at the first answer
/// position, when the backend reports them.
struct Generation {
    std::string text;
    std::vector<double> answer_logprobs;
    std::map<std::string, double> alternatives;
};

/// parse_output plus the answer probability: the product of the answer
/// tokens' probabilities. Left empty when no log-probs were reported.
ParsedOutput parse_generation(const Generation& gen, Scheme scheme);

/// p_yes / (p_yes + p_no). Throws UsageError for negative inputs or a zero sum.
double binary_normalized_prob(double p_yes, double p_no);

/// score x Pr(answer). Throws UsageError for unformatted input or a missing
/// probability.
double fine_grained_score(const ParsedOutput& parsed);

/// Ranking score of one generation under a scheme: fine_grained_score for
/// integer schemes, the normalized yes-probability for binary schemes.
/// Unformatted generations score 0.
double ranking_score(const Generation& gen, Scheme scheme);

struct Histogram {
    std::vector<double> edges;
    std::vector<std::size_t> counts;
    std::vector<double> ratios;
};

/// {0, 1e-5, 0.1, ..., 0.9, 1 - 1e-5, 1}.
std::vector<double> default_probability_bins();

/// Bins are half-open [lo, hi) except the last, which is closed. Edges must be
/// strictly increasing from 0 to 1. Throws DataError for a value outside
/// [0, 1] or an empty input, UsageError for bad edges.
Histogram score_distribution(const std::vector<double>& values,
                             const std::vector<double>& edges = default_probability_bins());

}  // namespace pwrank
