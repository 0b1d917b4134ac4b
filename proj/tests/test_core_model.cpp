#include <gtest/gtest.h>

#include <sstream>

#include "pwrank/dataset_io.hpp"
#include "pwrank/errors.hpp"
#include "pwrank/types.hpp"

using namespace pwrank;

namespace {

std::string error_of(auto&& fn) {
    try {
        fn();
    } catch (const DataError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(QueryGroups, ParsesWellFormedLines) {
    std::istringstream in(
        R"({"query_id":"q1","query":"a","candidates":[{"doc_id":"d1","text":"x","first_stage_score":1.5}],"labels":{"d1":2}})"
        "\n"
        R"({"query_id":"q2","query":"b","instruction":"I","candidates":[{"doc_id":"d1","text":"y"}]})"
        "\n");
    auto groups = parse_query_groups(in);
    ASSERT_EQ(groups.size(), 2u);
    EXPECT_EQ(groups[0].query_id, "q1");
    EXPECT_EQ(groups[0].grade("d1"), 2);
    EXPECT_DOUBLE_EQ(*groups[0].candidates[0].first_stage_score, 1.5);
    EXPECT_EQ(groups[1].instruction, "I");
    EXPECT_FALSE(groups[1].candidates[0].first_stage_score);
}

TEST(QueryGroups, EmptyInputGivesNoGroups) {
    std::istringstream in("");
    EXPECT_TRUE(parse_query_groups(in).empty());
}

TEST(QueryGroups, MissingQueryIdNamesLine) {
    std::istringstream in(R"({"query":"a","candidates":[{"doc_id":"d1","text":"x"}]})");
    EXPECT_NE(error_of([&] { parse_query_groups(in); }).find("line 1"), std::string::npos);
}

TEST(QueryGroups, RejectsDuplicates) {
    std::istringstream dup_doc(R"({"query_id":"q","query":"a","candidates":[{"doc_id":"d","text":"x"},{"doc_id":"d","text":"y"}]})");
    EXPECT_THROW(parse_query_groups(dup_doc), DataError);
    std::istringstream dup_query(
        R"({"query_id":"q","query":"a","candidates":[{"doc_id":"d","text":"x"}]})"
        "\n"
        R"({"query_id":"q","query":"a","candidates":[{"doc_id":"d","text":"x"}]})");
    EXPECT_NE(error_of([&] { parse_query_groups(dup_query); }).find("line 2"), std::string::npos);
}

TEST(QueryGroups, MalformedInputNeverCrashes) {
    for (const char* line : {"{", "[]", "null", R"({"query_id":1})", R"({"query_id":"q","candidates":"x"})",
                             R"({"query_id":"q","query":"a","candidates":[]})",
                             R"({"query_id":"q","query":"a","candidates":[{"doc_id":"d","text":"x"}],"labels":{"zz":1}})",
                             R"({"query_id":"q","query":"a","candidates":[{"doc_id":"d","text":"x"}],"labels":{"d":-1}})"}) {
        std::istringstream in(line);
        EXPECT_THROW(parse_query_groups(in), DataError) << line;
    }
}

TEST(QueryGroups, WriteRoundTrips) {
    QueryGroup g{"q1", "text", "inst", {{"d1", "a", 3.25}, {"d2", "b", std::nullopt}}, {{"d1", 1}}};
    std::stringstream buf;
    write_query_groups({g}, buf);
    auto back = parse_query_groups(buf);
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0].query_text, "text");
    EXPECT_EQ(back[0].labels, g.labels);
    EXPECT_EQ(back[0].candidates[1].doc_id, "d2");
}

TEST(Qrels, ParsesFourColumns) {
    std::istringstream one("q1 0 d1 1\n");
    auto q = parse_qrels(one);
    EXPECT_EQ(q.size(), 1u);
    EXPECT_EQ(q.grade("q1", "d1"), 1);

    std::istringstream two("q1 0 d1 2\nq1 0 d2 0\n");
    auto q2 = parse_qrels(two);
    EXPECT_EQ(q2.size(), 2u);
    EXPECT_EQ(q2.grade("q1", "d1"), 2);
    EXPECT_TRUE(q2.has_query("q1"));
    EXPECT_EQ(q2.grade("q1", "unjudged"), 0);
}

TEST(Qrels, NonIntegerGradeIsError) {
    std::istringstream in("q1 0 d1 1\nq1 0 d1 x\n");
    EXPECT_NE(error_of([&] { parse_qrels(in); }).find("line 2"), std::string::npos);
}

TEST(Runs, FormatsSixDecimals) {
    EXPECT_EQ(format_run_line({"q1", "d1", 1, 0.5, "tag"}), "q1 Q0 d1 1 0.500000 tag");
}

TEST(Runs, WritesRanksInOrder) {
    std::ostringstream out;
    write_run({{"q1", "a", 1, 0.9, "t"}, {"q1", "b", 2, 0.1, "t"}}, out);
    EXPECT_EQ(out.str(), "q1 Q0 a 1 0.900000 t\nq1 Q0 b 2 0.100000 t\n");
}

TEST(Runs, RankGapOrInversionFailsBeforeWriting) {
    std::ostringstream out;
    EXPECT_THROW(write_run({{"q1", "a", 1, 0.9, "t"}, {"q1", "b", 3, 0.1, "t"}}, out), DataError);
    EXPECT_THROW(write_run({{"q1", "a", 1, 0.1, "t"}, {"q1", "b", 2, 0.9, "t"}}, out), DataError);
    EXPECT_TRUE(out.str().empty());
}

TEST(Runs, RoundTripAtSixDecimals) {
    std::vector<RunEntry> run = {{"q1", "a", 1, 3.1234564, "t"}, {"q1", "b", 2, -0.5, "t"}, {"q2", "c", 1, 0.0, "t"}};
    std::stringstream buf;
    write_run(run, buf);
    auto back = parse_run(buf);
    ASSERT_EQ(back.size(), run.size());
    for (std::size_t i = 0; i < run.size(); ++i) {
        EXPECT_EQ(back[i].doc_id, run[i].doc_id);
        EXPECT_EQ(back[i].rank, run[i].rank);
        EXPECT_EQ(format_run_line(back[i]), format_run_line(run[i]));
    }
}

TEST(Runs, GroupRunSortsByRank) {
    auto grouped = group_run({{"q1", "b", 2, 0.1, "t"}, {"q1", "a", 1, 0.9, "t"}});
    ASSERT_EQ(grouped.at("q1").size(), 2u);
    EXPECT_EQ(grouped.at("q1")[0].doc_id, "a");
}

TEST(Judgments, FromGroupsCoversEveryCandidate) {
    QueryGroup g{"q", "t", "", {{"a", "", {}}, {"b", "", {}}}, {{"a", 2}}};
    auto j = judgments_from_groups({g});
    EXPECT_EQ(j.grades_for("q"), (std::vector<int>{2, 0}));
}
