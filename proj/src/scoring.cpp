#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "pwrank/errors.hpp"
#include "pwrank/scoring.hpp"

namespace pwrank {

namespace {

bool is_ws(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_ws(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_ws(s.back())) s.remove_suffix(1);
    return s;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

std::optional<int> parse_answer(std::string_view answer, Scheme scheme) {
    answer = trim(answer);
    if (is_binary(scheme)) {
        if (iequals(answer, "yes")) return 1;
        if (iequals(answer, "no")) return 0;
        return std::nullopt;
    }
    if (answer.empty() || answer.size() > 3) return std::nullopt;
    int value = 0;
    for (char c : answer) {
        if (c < '0' || c > '9') return std::nullopt;
        value = value * 10 + (c - '0');
    }
    if (value > max_score(scheme)) return std::nullopt;
    return value;
}

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

}  // namespace

ParsedOutput parse_output(std::string_view raw, Scheme scheme) {
    ParsedOutput out;
    out.raw_text = std::string(raw);

    if (scheme == Scheme::binary_plain) {
        if (auto s = parse_answer(raw, scheme)) {
            out.score = s;
            out.formatted = true;
        }
        return out;
    }

    std::string_view body = trim(raw);
    if (!body.starts_with(kThinkOpen)) return out;
    body.remove_prefix(kThinkOpen.size());
    auto close = body.find(kThinkClose);
    if (close == std::string_view::npos) return out;
    std::string_view think = body.substr(0, close);
    if (think.find(kAnswerOpen) != std::string_view::npos ||
        think.find(kThinkOpen) != std::string_view::npos)
        return out;
    body.remove_prefix(close + kThinkClose.size());

    while (!body.empty() && is_ws(body.front())) body.remove_prefix(1);
    if (!body.starts_with(kAnswerOpen)) return out;
    body.remove_prefix(kAnswerOpen.size());
    auto end = body.find(kAnswerClose);
    if (end == std::string_view::npos) return out;
    std::string_view answer = body.substr(0, end);
    body.remove_prefix(end + kAnswerClose.size());
    if (!trim(body).empty()) return out;  // trailing content, including a second <answer>

    auto score = parse_answer(answer, scheme);
    if (!score) return out;
    out.think_text = std::string(think);
    out.score = score;
    out.formatted = true;
    return out;
}

ParsedOutput parse_generation(const Generation& gen, Scheme scheme) {
    ParsedOutput out = parse_output(gen.text, scheme);
    if (out.formatted && !gen.answer_logprobs.empty()) {
        double sum = std::accumulate(gen.answer_logprobs.begin(), gen.answer_logprobs.end(), 0.0);
        out.answer_token_prob = std::clamp(std::exp(sum), 0.0, 1.0);
    }
    return out;
}

double binary_normalized_prob(double p_yes, double p_no) {
    if (!(p_yes >= 0.0) || !(p_no >= 0.0))
        throw UsageError("binary_normalized_prob: probabilities must be non-negative");
    double total = p_yes + p_no;
    if (!(total > 0.0)) throw UsageError("binary_normalized_prob: p_yes + p_no is zero");
    return p_yes / total;
}

double fine_grained_score(const ParsedOutput& parsed) {
    if (!parsed.formatted || !parsed.score)
        throw UsageError("fine_grained_score: output is not formatted");
    if (!parsed.answer_token_prob)
        throw UsageError("fine_grained_score: answer token probability missing");
    return static_cast<double>(*parsed.score) * *parsed.answer_token_prob;
}

double ranking_score(const Generation& gen, Scheme scheme) {
    ParsedOutput parsed = parse_generation(gen, scheme);
    if (!parsed.formatted) return 0.0;
    if (!is_binary(scheme)) {
        if (!parsed.answer_token_prob) throw BackendError("backend reported no answer log-probs", false);
        return fine_grained_score(parsed);
    }
    // Probability of the chosen word comes from the answer span, the other
    // word from the reported alternatives (absent means probability 0).
    double chosen = parsed.answer_token_prob.value_or(1.0);
    const char* other_word = *parsed.score == 1 ? "no" : "yes";
    double other = 0.0;
    for (const auto& [token, logprob] : gen.alternatives)
        if (iequals(trim(token), other_word)) other = std::max(other, std::exp(logprob));
    double p_yes = *parsed.score == 1 ? chosen : other;
    double p_no = *parsed.score == 1 ? other : chosen;
    if (p_yes + p_no <= 0.0) return 0.0;
    return binary_normalized_prob(p_yes, p_no);
}

std::vector<double> default_probability_bins() {
    std::vector<double> edges = {0.0, 1e-5};
    for (int i = 1; i <= 9; ++i) edges.push_back(i / 10.0);
    edges.push_back(1.0 - 1e-5);
    edges.push_back(1.0);
    return edges;
}

Histogram score_distribution(const std::vector<double>& values, const std::vector<double>& edges) {
    if (edges.size() < 2 || edges.front() != 0.0 || edges.back() != 1.0)
        throw UsageError("score_distribution: bin edges must run from 0 to 1");
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (!(edges[i] > edges[i - 1])) throw UsageError("score_distribution: bin edges must increase");
    if (values.empty()) throw DataError("score_distribution: no values");

    Histogram h;
    h.edges = edges;
    h.counts.assign(edges.size() - 1, 0);
    for (double v : values) {
        if (!(v >= 0.0 && v <= 1.0))
            throw DataError("score_distribution: value " + std::to_string(v) + " outside [0, 1]");
        // First edge strictly greater than v closes v's bin; v == 1 lands in the last bin.
        auto it = std::upper_bound(edges.begin(), edges.end(), v);
        std::size_t bin = it == edges.end() ? h.counts.size() - 1
                                            : static_cast<std::size_t>(it - edges.begin()) - 1;
        ++h.counts[bin];
    }
    h.ratios.reserve(h.counts.size());
    for (auto c : h.counts) h.ratios.push_back(static_cast<double>(c) / static_cast<double>(values.size()));
    return h;
}

}  // namespace pwrank
