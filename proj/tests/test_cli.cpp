#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "pwrank/toy_policy.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kData = std::string(PWRANK_SOURCE_DIR) + "/tests/data/";

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = pwrank::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("pwrank_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    std::string at(const std::string& name) const { return (dir / name).string(); }
    fs::path dir;
};

std::string mean_ndcg(const std::string& report) {
    std::istringstream in(report);
    std::string line;
    while (std::getline(in, line))
        if (line.rfind("mean\tall\t", 0) == 0) return line.substr(9, line.find('\t', 9) - 9);
    return {};
}

}  // namespace

TEST_F(Cli, NoiselessRerankThenEvalIsPerfect) {
    auto r = run({"rerank", "--input", kData + "groups.jsonl", "--qrels", kData + "qrels.txt", "--seed", "1",
                  "--run-out", at("run.txt")});
    ASSERT_EQ(r.code, 0) << r.err;
    auto e = run({"eval", "--run", at("run.txt"), "--qrels", kData + "qrels.txt", "--k", "10"});
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_EQ(mean_ndcg(e.out), "1.000000");
}

TEST_F(Cli, RerankIsByteIdentical) {
    std::vector<std::string> args{"rerank", "--input", kData + "groups.jsonl", "--qrels", kData + "qrels.txt",
                                  "--seed", "5", "--mock-noise", "2", "--mock-malformation", "0.2",
                                  "--parallelism", "4", "--run-out"};
    auto a = args, b = args;
    a.push_back(at("a.txt"));
    b.push_back(at("b.txt"));
    ASSERT_EQ(run(a).code, 0);
    ASSERT_EQ(run(b).code, 0);
    EXPECT_EQ(slurp(at("a.txt")), slurp(at("b.txt")));
    EXPECT_FALSE(slurp(at("a.txt")).empty());
}

TEST_F(Cli, RerankWritesPlainAndFusedRuns) {
    auto r = run({"rerank", "--input", kData + "groups.jsonl", "--qrels", kData + "qrels.txt", "--seed", "2",
                  "--run-out", at("plain.txt"), "--fusion", "zscore_blend", "--fused-run-out", at("fused.txt")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(slurp(at("plain.txt")).find(" pwrank\n"), std::string::npos);
    EXPECT_NE(slurp(at("fused.txt")).find("pwrank-zscore_blend"), std::string::npos);
}

TEST_F(Cli, EvalWorkedExample) {
    spit(at("run.txt"), "q Q0 a 1 3.0 t\nq Q0 b 2 2.0 t\nq Q0 c 3 1.0 t\n");
    spit(at("qrels.txt"), "q 0 a 1\nq 0 b 0\nq 0 c 1\n");
    auto e = run({"eval", "--run", at("run.txt"), "--qrels", at("qrels.txt"), "--report-out", at("report.tsv")});
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_EQ(mean_ndcg(e.out), "0.919721");
    EXPECT_EQ(slurp(at("report.tsv")), e.out);
}

TEST_F(Cli, EvalDisjointQueriesIsDataError) {
    spit(at("run.txt"), "q1 Q0 a 1 3.0 t\n");
    spit(at("qrels.txt"), "q2 0 a 1\n");
    EXPECT_EQ(run({"eval", "--run", at("run.txt"), "--qrels", at("qrels.txt")}).code, 2);
}

TEST_F(Cli, FuseTwoRuns) {
    spit(at("rr.txt"), "q Q0 a 1 0.9 t\nq Q0 b 2 0.1 t\n");
    spit(at("bm25.txt"), "q Q0 b 1 30 bm25\nq Q0 a 2 10 bm25\nq Q0 c 3 5 bm25\n");
    auto r = run({"fuse", "--rerank-run", at("rr.txt"), "--first-stage-run", at("bm25.txt"), "--fusion",
                  "raw_weighted", "--run-out", at("out.txt")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto fused = slurp(at("out.txt"));
    EXPECT_EQ(fused.rfind("q Q0 a 1 100", 0), 0u) << fused;
    EXPECT_NE(fused.find("q Q0 b 2 40"), std::string::npos) << fused;
}

TEST_F(Cli, RewardWorkedScenario) {
    spit(at("dump.jsonl"),
         R"({"query_id":"q","doc_id":"A","reference_score":0,"rollouts":["<think>a</think><answer>9</answer>","<think>a</think><answer>7</answer>"]})"
         "\n"
         R"({"query_id":"q","doc_id":"B","reference_score":3,"rollouts":["<think>b</think><answer>8</answer>","<think>b</think><answer>3</answer>"]})"
         "\n"
         R"({"query_id":"q","doc_id":"C","reference_score":4,"rollouts":["<think>c</think><answer>2</answer>","<think>c</think><answer>2</answer>"]})"
         "\n");
    spit(at("qrels.txt"), "q 0 A 1\n");
    auto r = run({"reward", "--input", at("dump.jsonl"), "--qrels", at("qrels.txt"), "--reward", "rr", "--out",
                  at("rewards.jsonl")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto dump = slurp(at("rewards.jsonl"));
    for (const char* v : {"1.000000", "0.333333", "-1.000000", "0.960000"}) EXPECT_NE(dump.find(v), std::string::npos) << v;
    EXPECT_NE(r.out.find("branch\tnegative_penalty\t1"), std::string::npos);
}

TEST_F(Cli, RewardAllUnformatted) {
    spit(at("dump.jsonl"), R"({"query_id":"q","doc_id":"A","reference_score":0,"rollouts":["junk","junk"]})"
                           "\n");
    spit(at("qrels.txt"), "q 0 A 1\n");
    auto r = run({"reward", "--input", at("dump.jsonl"), "--qrels", at("qrels.txt"), "--reward", "ndcg"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.find("\"reward\":-1.000000"), r.out.find("\"reward\""));
    EXPECT_NE(r.err.find("branch\tunformatted\t2"), std::string::npos);
}

TEST_F(Cli, TrainToyZeroStepsWritesInitialPolicy) {
    auto r = run({"train-toy", "--steps", "0", "--seed", "4", "--queries", "3", "--docs", "5", "--policy-out",
                  at("policy.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(at("policy.json"));
    auto p = pwrank::read_policy(in);
    EXPECT_EQ(p.weights, pwrank::ToyPolicy::random(4, pwrank::ToyTrainerConfig{}.init_scale).weights);
}

TEST_F(Cli, TrainToyStatsDeterministic) {
    std::vector<std::string> args{"train-toy", "--steps", "3", "--seed", "8", "--queries", "4",
                                  "--docs", "6", "--rollout_n", "4", "--stats-out"};
    auto a = args, b = args;
    a.push_back(at("a.jsonl"));
    b.push_back(at("b.jsonl"));
    ASSERT_EQ(run(a).code, 0);
    ASSERT_EQ(run(b).code, 0);
    EXPECT_EQ(slurp(at("a.jsonl")), slurp(at("b.jsonl")));
    EXPECT_NE(slurp(at("a.jsonl")).find("\"step\":2"), std::string::npos);
}

TEST_F(Cli, TrainToyConfigFileWithOverride) {
    spit(at("c.toml"), "[train-toy]\nsteps = 2\nseed = 3\nqueries = 3\ndocs = 4\nclip_ratio = 2.0\n");
    EXPECT_EQ(run({"--config", at("c.toml"), "train-toy"}).code, 1);
    EXPECT_EQ(run({"--config", at("c.toml"), "train-toy", "--clip_ratio", "0.2"}).code, 0);
}

TEST_F(Cli, BenchLatencyDefaults) {
    auto r = run({"bench-latency"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("pointwise\t100\tP=32\t400.000000"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("pointwise\t100\tP=1\t10000.000000"), std::string::npos);
    EXPECT_NE(r.out.find("listwise\t100\tw=20,stride=10,calls=9\t900.000000"), std::string::npos);
    EXPECT_EQ(run({"bench-latency"}).out, r.out);
}

TEST_F(Cli, SynthesizeWithMockTeacher) {
    std::ofstream rank(at("rank.txt"));
    std::ofstream corpus(at("corpus.jsonl"));
    for (int i = 1; i <= 200; ++i) {
        rank << "q1 Q0 d" << i << " " << i << " " << (1000 - i) << " bm25\n";
        corpus << R"({"doc_id":"d)" << i << R"(","text":"document )" << i << "\"}\n";
    }
    rank.close();
    corpus.close();
    spit(at("queries.jsonl"),
         R"({"query_id":"q1","query":"q","candidates":[{"doc_id":"d50","text":"gold"}],"labels":{"d50":1}})"
         "\n");
    auto r = run({"synthesize", "--input", at("queries.jsonl"), "--rankings", at("rank.txt"), "--corpus",
                  at("corpus.jsonl"), "--profile", "msmarco", "--seed", "3", "--out", at("sft.jsonl")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("pairs_emitted\t20"), std::string::npos) << r.out;
    std::ifstream in(at("sft.jsonl"));
    int lines = 0;
    for (std::string l; std::getline(in, l);) ++lines;
    EXPECT_EQ(lines, 20);
}

TEST_F(Cli, ExitCodes) {
    EXPECT_EQ(run({}).code, 1);
    EXPECT_EQ(run({"--help"}).code, 0);
    EXPECT_EQ(run({"rerank", "--input", kData + "groups.jsonl", "--run-out", at("r.txt")}).code, 1);  // no seed
    spit(at("bad.txt"), "q 0 d x\n");
    EXPECT_EQ(run({"rerank", "--input", kData + "groups.jsonl", "--qrels", at("bad.txt"), "--seed", "1",
                   "--run-out", at("r.txt")})
                  .code,
              2);
    EXPECT_EQ(run({"rerank", "--input", kData + "groups.jsonl", "--backend", "http", "--api-base",
                   "http://127.0.0.1:1/v1", "--model", "m", "--max-attempts", "1", "--run-out", at("r.txt")})
                  .code,
              3);
}
