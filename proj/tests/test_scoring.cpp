#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "pwrank/errors.hpp"
#include "pwrank/scoring.hpp"

using namespace pwrank;

TEST(Prompt, ContainsInstructionVerbatim) {
    const auto tmpl = PromptTemplate::builtin(Scheme::int_0_10);
    const auto& inst = instruction_for("trec_dl");
    EXPECT_EQ(inst, "Given a query, retrieval relevant passage.");
    auto p = render_prompt(tmpl, inst, "what is rust", "Rust is a language.");
    EXPECT_NE(p.text.find(inst), std::string::npos);
    EXPECT_NE(p.text.find("Rust is a language."), std::string::npos);
    EXPECT_FALSE(p.truncated());
}

TEST(Prompt, EmptyDocumentStillRenders) {
    auto p = render_prompt(PromptTemplate::builtin(Scheme::int_0_10), "i", "q", "");
    EXPECT_EQ(p.text.find("{document}"), std::string::npos);
    EXPECT_FALSE(p.truncated());
}

TEST(Prompt, LongDocumentTruncatedTo2048Tokens) {
    std::string doc;
    for (int i = 0; i < 3000; ++i) doc += "w" + std::to_string(i) + " ";
    auto p = render_prompt(PromptTemplate::builtin(Scheme::int_0_10), "i", "q", doc);
    EXPECT_TRUE(p.document_truncated);
    EXPECT_NE(p.text.find("w2047"), std::string::npos);
    EXPECT_EQ(p.text.find("w2048"), std::string::npos);
}

TEST(Prompt, PlaceholderTextInInputsIsNotExpanded) {
    auto p = render_prompt(PromptTemplate::builtin(Scheme::int_0_10), "i", "{document}", "body");
    EXPECT_NE(p.text.find("{document}"), std::string::npos);
}

TEST(Prompt, TemplateValidation) {
    EXPECT_THROW(PromptTemplate("{query} {document}", Scheme::int_0_10), UsageError);
    EXPECT_THROW(PromptTemplate("{instruction} {query} {query} {document}", Scheme::int_0_10), UsageError);
    EXPECT_NO_THROW(PromptTemplate("{instruction} {query} {document}", Scheme::int_0_10));
}

TEST(Prompt, ShippedTemplateFilesMatchBuiltins) {
    for (auto s : {Scheme::binary_plain, Scheme::binary_think, Scheme::int_0_3, Scheme::int_0_10}) {
        const auto path = std::string(PWRANK_SOURCE_DIR) + "/config/templates/" + std::string(to_string(s)) + ".txt";
        EXPECT_EQ(PromptTemplate::from_file(path, s).text(), PromptTemplate::builtin(s).text()) << path;
    }
}

TEST(Prompt, UnknownSubsetIsUsageError) { EXPECT_THROW(instruction_for("nope"), UsageError); }

TEST(Parse, WellFormedInteger) {
    auto p = parse_output("<think>ok</think><answer>7</answer>", Scheme::int_0_10);
    EXPECT_TRUE(p.formatted);
    EXPECT_EQ(p.score, 7);
    EXPECT_EQ(p.think_text, "ok");
}

TEST(Parse, RejectsOutOfRangeAndFreeText) {
    EXPECT_FALSE(parse_output("<think>x</think><answer>11</answer>", Scheme::int_0_10).formatted);
    EXPECT_FALSE(parse_output("score is 7", Scheme::int_0_10).formatted);
    EXPECT_FALSE(parse_output("<think>x</think><answer>4</answer>", Scheme::int_0_3).formatted);
    EXPECT_FALSE(parse_output("<think>x</think><answer>-1</answer>", Scheme::int_0_10).formatted);
    EXPECT_FALSE(parse_output("<think>x</think><answer>7.5</answer>", Scheme::int_0_10).formatted);
}

TEST(Parse, MultipleAnswersAreUnformatted) {
    EXPECT_FALSE(parse_output("<think>x</think><answer>7</answer><answer>8</answer>", Scheme::int_0_10).formatted);
}

TEST(Parse, WhitespaceInsideAnswerTolerated) {
    auto p = parse_output("  <think>x</think>\n<answer> 10 </answer>\n", Scheme::int_0_10);
    EXPECT_TRUE(p.formatted);
    EXPECT_EQ(p.score, 10);
}

TEST(Parse, BinarySchemes) {
    EXPECT_EQ(parse_output("yes", Scheme::binary_plain).score, 1);
    EXPECT_EQ(parse_output(" No ", Scheme::binary_plain).score, 0);
    EXPECT_FALSE(parse_output("yes.", Scheme::binary_plain).formatted);
    EXPECT_EQ(parse_output("<think>t</think><answer>yes</answer>", Scheme::binary_think).score, 1);
    EXPECT_FALSE(parse_output("<think>t</think><answer>7</answer>", Scheme::binary_think).formatted);
}

TEST(Probability, BinaryNormalization) {
    EXPECT_DOUBLE_EQ(binary_normalized_prob(0.8, 0.2), 0.8);
    EXPECT_DOUBLE_EQ(binary_normalized_prob(0.5, 0.5), 0.5);
    EXPECT_THROW(binary_normalized_prob(0.0, 0.0), UsageError);
    for (double a : {0.01, 0.3, 0.9})
        for (double b : {0.02, 0.5, 0.7})
            EXPECT_NEAR(binary_normalized_prob(a, b) + binary_normalized_prob(b, a), 1.0, 1e-15);
}

TEST(Probability, FineGrainedScore) {
    ParsedOutput p;
    p.formatted = true;
    p.score = 8;
    p.answer_token_prob = 0.9;
    EXPECT_NEAR(fine_grained_score(p), 7.2, 1e-12);
    p.score = 0;
    EXPECT_EQ(fine_grained_score(p), 0.0);
    p.score = 10;
    p.answer_token_prob = 0.5;
    EXPECT_DOUBLE_EQ(fine_grained_score(p), 5.0);
    p.formatted = false;
    EXPECT_THROW(fine_grained_score(p), UsageError);
}

TEST(Probability, FineGrainedMonotone) {
    ParsedOutput p;
    p.formatted = true;
    for (int s = 0; s < 10; ++s)
        for (double q : {0.1, 0.5, 0.9}) {
            p.score = s;
            p.answer_token_prob = q;
            const double base = fine_grained_score(p);
            p.score = s + 1;
            EXPECT_GT(fine_grained_score(p), base);
            p.score = s;
            p.answer_token_prob = q + 0.05;
            EXPECT_GE(fine_grained_score(p), base);
        }
}

TEST(Probability, MultiTokenAnswerUsesProduct) {
    Generation g{"<think>x</think><answer>10</answer>", {std::log(0.5), std::log(0.8)}, {}};
    auto p = parse_generation(g, Scheme::int_0_10);
    EXPECT_NEAR(*p.answer_token_prob, 0.4, 1e-12);
    EXPECT_NEAR(ranking_score(g, Scheme::int_0_10), 4.0, 1e-12);
}

TEST(Probability, BinaryRankingScoreUsesAlternatives) {
    Generation g{"<think>x</think><answer>no</answer>", {std::log(0.6)}, {{"no", std::log(0.6)}, {"yes", std::log(0.2)}}};
    EXPECT_NEAR(ranking_score(g, Scheme::binary_think), 0.25, 1e-12);
    Generation bad{"garbage", {}, {}};
    EXPECT_EQ(ranking_score(bad, Scheme::int_0_10), 0.0);
}

TEST(Histogram, ExtremesAndMiddle) {
    auto h = score_distribution({0.0, 1.0});
    EXPECT_DOUBLE_EQ(h.ratios.front(), 0.5);
    EXPECT_DOUBLE_EQ(h.ratios.back(), 0.5);

    auto mid = score_distribution(std::vector<double>(100, 0.5));
    const auto it = std::find(mid.ratios.begin(), mid.ratios.end(), 1.0);
    ASSERT_NE(it, mid.ratios.end());
    const auto bin = static_cast<std::size_t>(it - mid.ratios.begin());
    EXPECT_LE(mid.edges[bin], 0.5);
    EXPECT_GT(mid.edges[bin + 1], 0.5);
}

TEST(Histogram, UniformOverEqualBins) {
    std::vector<double> edges;
    for (int i = 0; i <= 10; ++i) edges.push_back(i / 10.0);
    std::vector<double> values;
    for (int i = 0; i < 1000; ++i) values.push_back((i + 0.5) / 1000.0);
    auto h = score_distribution(values, edges);
    for (double r : h.ratios) EXPECT_NEAR(r, 0.1, 1e-12);
    EXPECT_NEAR(std::accumulate(h.ratios.begin(), h.ratios.end(), 0.0), 1.0, 1e-12);
}

TEST(Histogram, RejectsOutOfRange) {
    EXPECT_THROW(score_distribution({1.5}), DataError);
    EXPECT_THROW(score_distribution({}), DataError);
}
