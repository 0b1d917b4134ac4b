#include <algorithm>
#include <fstream>
#include <sstream>

#include "pwrank/errors.hpp"
#include "pwrank/scoring.hpp"

namespace pwrank {

namespace {

constexpr const char* kBinaryPlain = R"(Given a query and a document, please give a relevance judgement of yes/no.
The goal or relevance definition is: {instruction}

Here is the query:
{query}

Here is the document:
{document}

Please directly choose a relevance judgement from [yes, no].
Only output one word, no other words are allowed.

Your output:
)";

constexpr const char* kBinaryThink = R"(Given a query and a document, please give a relevance judgement of yes/no.
The goal or relevance definition is: {instruction}

Here is the query:
{query}

Here is the document:
{document}

After thinking, please directly choose a relevance judgement from [yes, no].

Desired output format:
<think>put your thinking here</think><answer> Only allows yes/no here</answer>

Your output:
)";

constexpr const char* kInt0To3 = R"(Given a query and a document, please give a relevance score of 0 to 3.
The goal or relevance definition is: {instruction}

Here is the query:
{query}

Here is the document:
{document}

After thinking, directly choose a relevance score from [0, 1, 2, 3].
- 0 represents completely not related.
- 3 means perfectly related.

Desired output format:
<think>put your thinking here</think><answer> Only allows an integer here</answer>

Your output:
)";

constexpr const char* kInt0To10 = R"(Given a query and a document, please give a relevance score of 0 to 10.
The goal or relevance definition is: {instruction}

Here is the query:
{query}

Here is the document:
{document}

After thinking, directly choose a relevance score from [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10].
- 0 represents completely not related.
- 10 means perfectly related.

Desired output format:
<think>put your thinking here</think><answer> Only allows an integer here</answer>

Your output:
)";

constexpr std::string_view kPlaceholders[] = {"{instruction}", "{query}", "{document}"};

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string_view::npos;
         pos = text.find(needle, pos + needle.size()))
        ++n;
    return n;
}

const std::string kBrightDefault =
    "A document is relevant if it contains information that helps answer or address the query. "
    "A document is not relevant if it doesn't contain information that helps answer the query, "
    "even if it mentions similar topics.";
const std::string kTheoremQA =
    "We want to find a document which uses the same mathematical process as the query. "
    "A document is relevant if it uses the same mathematical process as the query.";
const std::string kSemantic = "Given a query, retrieval relevant passage.";
const std::string kFollowIR =
    "Retrieval the relevant passage for the given query. "
    "Be careful about the extra requirements about relevance in the query.";

const std::map<std::string, std::string, std::less<>>& instruction_table() {
    static const std::map<std::string, std::string, std::less<>> table = {
        {"aops",
         "We want to find different but similar math problems to the query. A document is relevant "
         "if it uses the same class of functions and shares any overlapping techniques."},
        {"leetcode",
         "I am looking to find different problems that share similar data structures (of any kind) "
         "or algorithms (e.g. DFS, DP, sorting, traversals, etc.). I am looking for problems that "
         "share one or both of these similarities to the query. Does the passage below share any "
         "similarities? e.g. if there was a textbook on leetcode problems, this would be in the same "
         "book even though it could be in a different chapter."},
        {"pony",
         "I will use the programming language pony. But to solve the problem above, I need to know "
         "things about pony. A passage is relevant if it contains docs that match any part (even "
         "basic parts) of the code I will have to write for the above program."},
        {"theoremqa_questions", kTheoremQA},
        {"theoremqa_theorems", kTheoremQA},
        {"bright", kBrightDefault},
        {"biology", kBrightDefault},
        {"earth_science", kBrightDefault},
        {"economics", kBrightDefault},
        {"psychology", kBrightDefault},
        {"robotics", kBrightDefault},
        {"stackoverflow", kBrightDefault},
        {"sustainable_living", kBrightDefault},
        {"beir", kSemantic},
        {"trec_dl", kSemantic},
        {"followir", kFollowIR},
        // Training sources reuse the instruction of their evaluation counterpart.
        {"reasonir_hq", kBrightDefault},
        {"msmarco", kSemantic},
        {"promptriever", kFollowIR},
    };
    return table;
}

}  // namespace

std::string_view to_string(Scheme scheme) {
    switch (scheme) {
        case Scheme::binary_plain: return "binary_plain";
        case Scheme::binary_think: return "binary_think";
        case Scheme::int_0_3: return "int_0_3";
        case Scheme::int_0_10: return "int_0_10";
    }
    return "unknown";
}

Scheme parse_scheme(std::string_view name) {
    for (Scheme s : {Scheme::binary_plain, Scheme::binary_think, Scheme::int_0_3, Scheme::int_0_10})
        if (to_string(s) == name) return s;
    throw UsageError("unknown scoring scheme '" + std::string(name) + "'");
}

bool is_binary(Scheme scheme) {
    return scheme == Scheme::binary_plain || scheme == Scheme::binary_think;
}

int max_score(Scheme scheme) {
    switch (scheme) {
        case Scheme::int_0_3: return 3;
        case Scheme::int_0_10: return 10;
        default: return 1;
    }
}

PromptTemplate::PromptTemplate(std::string text, Scheme scheme, std::size_t max_query_tokens,
                               std::size_t max_doc_tokens)
    : text_(std::move(text)),
      scheme_(scheme),
      max_query_tokens_(max_query_tokens),
      max_doc_tokens_(max_doc_tokens) {
    for (auto ph : kPlaceholders) {
        auto n = count_occurrences(text_, ph);
        if (n != 1)
            throw UsageError("prompt template must contain " + std::string(ph) + " exactly once (found " +
                             std::to_string(n) + ")");
    }
}

PromptTemplate PromptTemplate::builtin(Scheme scheme) {
    switch (scheme) {
        case Scheme::binary_plain: return {kBinaryPlain, scheme};
        case Scheme::binary_think: return {kBinaryThink, scheme};
        case Scheme::int_0_3: return {kInt0To3, scheme};
        case Scheme::int_0_10: return {kInt0To10, scheme};
    }
    throw UsageError("no builtin template");
}

PromptTemplate PromptTemplate::from_file(const std::filesystem::path& path, Scheme scheme) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open template " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return {buf.str(), scheme};
}

RenderedPrompt render_prompt(const PromptTemplate& tmpl, std::string_view instruction,
                             std::string_view query, std::string_view document,
                             const Tokenizer& tokenizer) {
    auto q = tokenizer.truncate(query, tmpl.max_query_tokens());
    auto d = tokenizer.truncate(document, tmpl.max_doc_tokens());

    RenderedPrompt out;
    out.query_truncated = q.truncated;
    out.document_truncated = d.truncated;

    const std::string_view values[] = {instruction, q.text, d.text};
    std::string_view text = tmpl.text();
    out.text.reserve(text.size() + instruction.size() + q.text.size() + d.text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        bool replaced = false;
        if (text[pos] == '{') {
            for (std::size_t i = 0; i < std::size(kPlaceholders); ++i) {
                if (text.substr(pos, kPlaceholders[i].size()) == kPlaceholders[i]) {
                    out.text.append(values[i]);
                    pos += kPlaceholders[i].size();
                    replaced = true;
                    break;
                }
            }
        }
        if (!replaced) out.text.push_back(text[pos++]);
    }
    return out;
}

const std::string& instruction_for(std::string_view subset) {
    const auto& table = instruction_table();
    auto it = table.find(subset);
    if (it == table.end()) throw UsageError("no instruction registered for '" + std::string(subset) + "'");
    return it->second;
}

std::vector<std::string> instruction_subsets() {
    std::vector<std::string> names;
    for (const auto& [name, _] : instruction_table()) names.push_back(name);
    return names;
}

}  // namespace pwrank
