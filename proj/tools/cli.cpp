#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "pwrank/backend.hpp"
#include "pwrank/dataset_io.hpp"
#include "pwrank/errors.hpp"
#include "pwrank/fusion.hpp"
#include "pwrank/metrics.hpp"
#include "pwrank/rewards.hpp"
#include "pwrank/runner.hpp"
#include "pwrank/synthesis.hpp"
#include "pwrank/toy_policy.hpp"

namespace pwrank::cli {

namespace fs = std::filesystem;

namespace {

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

struct BackendOptions {
    std::string kind = "mock";
    std::optional<std::uint64_t> seed;
    double noise = 0.0;
    double malformation = 0.0;
    double transport_failure = 0.0;
    double latency_ms = 0.0;
    double jitter_ms = 0.0;
    bool sleep = false;
    int max_grade = 0;
    std::string api_base;
    std::string model;
    int max_attempts = 3;

    void add_to(CLI::App* app) {
        app->add_option("--backend", kind, "scorer backend")->check(CLI::IsMember({"mock", "http"}));
        app->add_option("--seed", seed, "random seed (required for the mock backend)");
        app->add_option("--mock-noise", noise, "mock score noise std");
        app->add_option("--mock-malformation", malformation, "mock malformed-output probability");
        app->add_option("--mock-transport-failure", transport_failure, "mock per-attempt failure probability");
        app->add_option("--mock-latency-ms", latency_ms, "mock base latency per call");
        app->add_option("--mock-jitter-ms", jitter_ms, "mock latency jitter per call");
        app->add_flag("--mock-sleep", sleep, "mock waits out its simulated latency");
        app->add_option("--mock-max-grade", max_grade, "grade mapped to score 10 (0: largest judged grade)");
        app->add_option("--api-base", api_base, "completions endpoint base URL (else PWRANK_API_BASE)");
        app->add_option("--model", model, "model name (else PWRANK_MODEL)");
        app->add_option("--max-attempts", max_attempts, "attempts per request on retryable failures");
    }

    std::unique_ptr<ScorerBackend> make(RelevanceJudgments grades, std::optional<int> unjudged) const {
        if (kind == "http") {
            auto config = HttpEndpointConfig::from_env();
            if (!api_base.empty()) config.base_url = api_base;
            if (!model.empty()) config.model = model;
            config.max_attempts = max_attempts;
            return std::make_unique<HttpBackend>(std::move(config));
        }
        if (!seed) throw UsageError("--seed is required with the mock backend");
        MockBackendConfig config;
        config.seed = *seed;
        config.grades = std::move(grades);
        config.unjudged_grade = unjudged;
        config.max_grade = max_grade;
        config.noise_std = noise;
        config.malformation_prob = malformation;
        config.transport_failure_prob = transport_failure;
        config.latency = {latency_ms, jitter_ms};
        config.sleep = sleep;
        return std::make_unique<MockBackend>(std::move(config));
    }
};

FusionConfig fusion_from(const std::string& name, const std::string& config_path) {
    if (!config_path.empty()) return load_fusion_config(config_path);
    return FusionConfig::preset(parse_fusion_strategy(name));
}

// rerank ---------------------------------------------------------------------

struct RerankOptions {
    std::string input, qrels, run_out, fused_run_out, scheme = "int_0_10", template_path, fusion, fusion_config;
    std::string run_tag = "pwrank";
    int parallelism = 1;
    BackendOptions backend;
};

int cmd_rerank(const RerankOptions& o, std::ostream& out, std::ostream& err) {
    if (o.run_out.empty() && o.fused_run_out.empty()) throw UsageError("give --run-out and/or --fused-run-out");
    if (!o.fused_run_out.empty() && o.fusion.empty() && o.fusion_config.empty())
        throw UsageError("--fused-run-out needs --fusion or --fusion-config");
    const auto scheme = parse_scheme(o.scheme);
    const auto tmpl = o.template_path.empty() ? PromptTemplate::builtin(scheme)
                                              : PromptTemplate::from_file(o.template_path, scheme);
    std::optional<FusionConfig> fusion;
    if (!o.fused_run_out.empty()) fusion = fusion_from(o.fusion, o.fusion_config);

    const auto groups = load_query_groups(o.input);
    auto grades = o.qrels.empty() ? judgments_from_groups(groups) : load_qrels(o.qrels);
    auto backend = o.backend.make(std::move(grades), std::nullopt);

    PointwiseOptions options;
    options.parallelism = o.parallelism;
    options.max_attempts = o.backend.kind == "mock" ? o.backend.max_attempts : 1;
    const auto result = run_pointwise(groups, *backend, tmpl, options);

    std::vector<RunEntry> run, fused;
    for (const auto& g : groups) {
        auto it = result.scores.find(g.query_id);
        if (it == result.scores.end()) continue;
        std::map<std::string, double> scores;
        for (const auto& [doc, r] : it->second) scores[doc] = r.score;
        for (auto& e : rank_by_score(g, scores).to_run(o.run_tag)) run.push_back(std::move(e));
        if (fusion) {
            std::map<std::string, double> first_stage;
            for (const auto& d : g.candidates) {
                if (!d.first_stage_score)
                    throw DataError("query " + g.query_id + ": document " + d.doc_id + " has no first_stage_score");
                first_stage[d.doc_id] = *d.first_stage_score;
            }
            const auto f = fuse(scores, first_stage, *fusion);
            for (auto& e : rank_by_score(g, f.scores).to_run(o.run_tag + "-" + std::string(to_string(fusion->strategy))))
                fused.push_back(std::move(e));
        }
    }
    if (!o.run_out.empty()) write_run(run, fs::path(o.run_out));
    if (!o.fused_run_out.empty()) write_run(fused, fs::path(o.fused_run_out));

    out << "queries\t" << groups.size() << "\n"
        << "queries_scored\t" << result.scores.size() << "\n"
        << "unformatted\t" << result.unformatted << "\n"
        << "truncated_prompts\t" << result.truncated_prompts << "\n"
        << "wall_clock_ms\t" << fixed6(result.total_wall_clock.count()) << "\n";
    for (const auto& f : result.failures) err << "failed " << f.query_id << "/" << f.doc_id << ": " << f.message << "\n";
    return result.failures.empty() ? kOk : kBackend;
}

// eval -----------------------------------------------------------------------

struct EvalOptions {
    std::string run, qrels, subsets, report_out;
    int k = 10;
};

int cmd_eval(const EvalOptions& o, std::ostream& out) {
    if (o.k < 1) throw UsageError("--k must be >= 1");
    std::map<std::string, SubsetAssignment> subsets;
    if (!o.subsets.empty()) {
        std::ifstream in(o.subsets);
        if (!in) throw DataError("cannot read " + o.subsets);
        subsets = parse_subset_map(in);
    }
    const auto report = evaluate_run(load_run(o.run), load_qrels(o.qrels), o.k, subsets);
    write_metric_report(report, out);
    if (!o.report_out.empty()) {
        auto f = open_out(o.report_out);
        write_metric_report(report, f);
    }
    return kOk;
}

// fuse -----------------------------------------------------------------------

struct FuseOptions {
    std::string rerank_run, first_stage_run, fusion = "zscore_blend", fusion_config, run_out, run_tag = "pwrank-fused";
};

int cmd_fuse(const FuseOptions& o, std::ostream& out) {
    const auto config = fusion_from(o.fusion, o.fusion_config);
    const auto rerank = group_run(load_run(o.rerank_run));
    const auto first = group_run(load_run(o.first_stage_run));
    std::vector<RunEntry> fused;
    std::size_t degenerate = 0;
    for (const auto& [qid, rows] : rerank) {
        auto it = first.find(qid);
        if (it == first.end()) throw DataError("query " + qid + " missing from the first-stage run");
        std::map<std::string, double> all_first;
        for (const auto& e : it->second) all_first[e.doc_id] = e.score;
        std::map<std::string, double> rr, fs_scores;
        for (const auto& e : rows) {
            auto f = all_first.find(e.doc_id);
            if (f == all_first.end())
                throw DataError("query " + qid + ": document " + e.doc_id + " missing from the first-stage run");
            rr[e.doc_id] = e.score;
            fs_scores[e.doc_id] = f->second;
        }
        const auto result = fuse(rr, fs_scores, config);
        degenerate += (result.rerank_degenerate || result.first_stage_degenerate) ? 1 : 0;
        std::vector<ScoredDoc> docs;
        for (const auto& [doc, s] : result.scores) docs.push_back({doc, s});
        for (auto& e : rank_scored(qid, std::move(docs)).to_run(o.run_tag)) fused.push_back(std::move(e));
    }
    write_run(fused, fs::path(o.run_out));
    out << "queries\t" << rerank.size() << "\n"
        << "degenerate_queries\t" << degenerate << "\n";
    return kOk;
}

// reward ---------------------------------------------------------------------

struct RewardOptions {
    std::string input, qrels, reward = "rr", scheme = "int_0_10", out;
};

int cmd_reward(const RewardOptions& o, std::ostream& out, std::ostream& err) {
    const auto kind = parse_reward_kind(o.reward);
    const auto scheme = parse_scheme(o.scheme);
    std::ifstream in(o.input);
    if (!in) throw DataError("cannot read " + o.input);
    const auto matrices = build_rollout_matrices(parse_rollout_dump(in), load_qrels(o.qrels), scheme);

    std::ostringstream dump;
    std::map<RewardBranch, std::size_t> histogram;
    for (const auto& m : matrices) {
        const auto rewards = compute_rewards(m, kind);
        write_reward_dump(m, rewards, dump);
        for (const auto& row : rewards.branches)
            for (auto b : row) ++histogram[b];
    }
    if (o.out.empty()) {
        out << dump.str();
    } else {
        auto f = open_out(o.out);
        f << dump.str();
    }
    for (auto b : {RewardBranch::positive_rr, RewardBranch::negative_penalty, RewardBranch::negative_smooth,
                   RewardBranch::squared_error, RewardBranch::unformatted})
        (o.out.empty() ? err : out) << "branch\t" << to_string(b) << "\t" << histogram[b] << "\n";
    return kOk;
}

// synthesize -----------------------------------------------------------------

struct SynthesizeOptions {
    std::string input, rankings, corpus, qrels, profile = "reasonir_hq", out, report_out;
    int samples = 3;
    std::size_t max_output_tokens = 2048;
    int parallelism = 1;
    BackendOptions backend;
};

int cmd_synthesize(const SynthesizeOptions& o, std::ostream& out) {
    const auto groups = load_query_groups(o.input);
    std::vector<SynthesisQuery> queries;
    for (const auto& g : groups) queries.push_back({g, o.profile});
    const auto rankings = rankings_from_run(load_run(o.rankings));
    const auto corpus = o.corpus.empty() ? std::map<std::string, std::string>{} : load_corpus(o.corpus);
    auto grades = o.qrels.empty() ? judgments_from_groups(groups) : load_qrels(o.qrels);
    auto teacher = o.backend.make(std::move(grades), 0);

    SynthesisConfig config;
    config.consensus_samples = o.samples;
    config.max_output_tokens = o.max_output_tokens;
    config.seed = o.backend.seed.value_or(0);
    config.parallelism = o.parallelism;
    config.teacher_attempts = o.backend.max_attempts;
    const auto dataset = build_sft_dataset(queries, rankings, corpus, *teacher, config);

    write_sft_records(fs::path(o.out), dataset.records);
    write_synthesis_report(out, dataset.report);
    if (!o.report_out.empty()) {
        auto f = open_out(o.report_out);
        write_synthesis_report(f, dataset.report);
    }
    return kOk;
}

// train-toy ------------------------------------------------------------------

struct TrainOptions {
    int queries = 64, docs = 20, steps = 200;
    std::optional<std::uint64_t> seed;
    std::string reward = "rr", stats_out, policy_out;
    ToyTrainerConfig trainer;
};

int cmd_train_toy(TrainOptions o, std::ostream& out) {
    if (!o.seed) throw UsageError("--seed is required");
    if (o.queries < 1 || o.docs < 2 || o.steps < 0) throw UsageError("need --queries >= 1, --docs >= 2, --steps >= 0");
    o.trainer.reward = parse_reward_kind(o.reward);
    o.trainer.grpo.validate();
    const auto dataset = make_separable_dataset(o.queries, o.docs, *o.seed);
    const auto result = train_toy_policy(dataset, o.trainer, o.steps, *o.seed);

    if (!o.stats_out.empty()) {
        auto f = open_out(o.stats_out);
        for (const auto& s : result.stats) write_step_stats(s, f);
    }
    if (!o.policy_out.empty()) {
        auto f = open_out(o.policy_out);
        write_policy(result.policy, f);
    }
    out << "steps\t" << o.steps << "\n";
    if (!result.stats.empty()) {
        out << "first_mean_reward\t" << fixed6(result.stats.front().mean_reward) << "\n"
            << "last_mean_reward\t" << fixed6(result.stats.back().mean_reward) << "\n"
            << "first_ndcg@10\t" << fixed6(result.stats.front().ndcg_at_10) << "\n";
    }
    out << "final_ndcg@10\t" << fixed6(policy_ndcg(result.policy, dataset)) << "\n";
    return kOk;
}

// bench-latency --------------------------------------------------------------

struct BenchOptions {
    int n = 100;
    double latency_ms = 100.0, jitter_ms = 0.0;
    std::vector<int> parallelism{1, 8, 32, 100};
    std::vector<int> windows{20};
    std::vector<int> strides{10};
    std::uint64_t seed = 0;
    bool measure = false;
    std::string report_out;
};

int cmd_bench_latency(const BenchOptions& o, std::ostream& out) {
    const LatencyModel model{o.latency_ms, o.jitter_ms};
    model.validate();
    std::ostringstream table;
    table << "method\tN\tconfig\twall_clock_ms" << (o.measure ? "\tmeasured_ms" : "") << "\n";
    for (int p : o.parallelism) {
        table << "pointwise\t" << o.n << "\tP=" << p << "\t"
              << fixed6(simulate_pointwise_latency(o.n, p, model, o.seed).count());
        if (o.measure) table << "\t" << fixed6(measure_pointwise_latency(o.n, p, model, o.seed).count());
        table << "\n";
    }
    for (int w : o.windows)
        for (int s : o.strides) {
            const auto sim = simulate_listwise_latency(o.n, w, s, model, o.seed, o.measure);
            table << "listwise\t" << o.n << "\tw=" << w << ",stride=" << s << ",calls=" << sim.calls << "\t"
                  << fixed6(sim.simulated.count());
            if (o.measure) table << "\t" << fixed6(sim.measured.count());
            table << "\n";
        }
    out << table.str();
    if (!o.report_out.empty()) {
        auto f = open_out(o.report_out);
        f << table.str();
    }
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Pointwise generative reranking toolkit"};
    app.name("pwrank");
    app.set_config("--config", "", "TOML/INI config file; flags override it");
    app.require_subcommand(1);

    RerankOptions rerank;
    auto* rr = app.add_subcommand("rerank", "score candidates pointwise and write a TREC run");
    rr->add_option("--input", rerank.input, "query groups (JSONL)")->required()->check(CLI::ExistingFile);
    rr->add_option("--qrels", rerank.qrels, "latent grades for the mock (default: labels in --input)")
        ->check(CLI::ExistingFile);
    rr->add_option("--run-out", rerank.run_out, "reranker run file");
    rr->add_option("--fused-run-out", rerank.fused_run_out, "fused run file");
    rr->add_option("--scheme", rerank.scheme, "binary_plain | binary_think | int_0_3 | int_0_10");
    rr->add_option("--template", rerank.template_path, "prompt template file")->check(CLI::ExistingFile);
    rr->add_option("--fusion", rerank.fusion, "raw_weighted | minmax_blend | zscore_blend");
    rr->add_option("--fusion-config", rerank.fusion_config, "fusion config file")->check(CLI::ExistingFile);
    rr->add_option("--run-tag", rerank.run_tag, "run tag");
    rr->add_option("--parallelism", rerank.parallelism, "requests in flight per query")->check(CLI::PositiveNumber);
    rerank.backend.add_to(rr);

    EvalOptions eval;
    auto* ev = app.add_subcommand("eval", "nDCG@k and MRR of a run");
    ev->add_option("--run", eval.run, "TREC run")->required()->check(CLI::ExistingFile);
    ev->add_option("--qrels", eval.qrels, "TREC qrels")->required()->check(CLI::ExistingFile);
    ev->add_option("--k", eval.k, "cutoff");
    ev->add_option("--subsets", eval.subsets, "query -> subset, benchmark map")->check(CLI::ExistingFile);
    ev->add_option("--report-out", eval.report_out, "also write the report here");

    FuseOptions fuse_opts;
    auto* fu = app.add_subcommand("fuse", "blend a reranker run with a first-stage run");
    fu->add_option("--rerank-run", fuse_opts.rerank_run)->required()->check(CLI::ExistingFile);
    fu->add_option("--first-stage-run", fuse_opts.first_stage_run)->required()->check(CLI::ExistingFile);
    fu->add_option("--fusion", fuse_opts.fusion, "raw_weighted | minmax_blend | zscore_blend");
    fu->add_option("--fusion-config", fuse_opts.fusion_config)->check(CLI::ExistingFile);
    fu->add_option("--run-out", fuse_opts.run_out)->required();
    fu->add_option("--run-tag", fuse_opts.run_tag);

    RewardOptions reward;
    auto* rw = app.add_subcommand("reward", "rewards for a rollout dump");
    rw->add_option("--input", reward.input, "rollout dump (JSONL)")->required()->check(CLI::ExistingFile);
    rw->add_option("--qrels", reward.qrels, "positives")->required()->check(CLI::ExistingFile);
    rw->add_option("--reward", reward.reward, "se | ndcg | rr");
    rw->add_option("--scheme", reward.scheme, "rollout output scheme");
    rw->add_option("--out", reward.out, "reward dump (default: stdout)");

    SynthesizeOptions synth;
    auto* sy = app.add_subcommand("synthesize", "build an SFT dataset from a teacher");
    sy->add_option("--input", synth.input, "query groups with the positive (and synthetic negatives)")
        ->required()
        ->check(CLI::ExistingFile);
    sy->add_option("--rankings", synth.rankings, "first-stage run, depth <= 1000")->required()->check(CLI::ExistingFile);
    sy->add_option("--corpus", synth.corpus, "document texts (JSONL)")->check(CLI::ExistingFile);
    sy->add_option("--qrels", synth.qrels, "latent grades for the mock teacher")->check(CLI::ExistingFile);
    sy->add_option("--profile", synth.profile, "reasonir_hq | msmarco | promptriever");
    sy->add_option("--samples", synth.samples, "teacher generations per pair");
    sy->add_option("--max-output-tokens", synth.max_output_tokens, "length limit, inclusive");
    sy->add_option("--parallelism", synth.parallelism)->check(CLI::PositiveNumber);
    sy->add_option("--out", synth.out, "SFT records (JSONL)")->required();
    sy->add_option("--report-out", synth.report_out);
    synth.backend.add_to(sy);

    TrainOptions train;
    auto* tr = app.add_subcommand("train-toy", "GRPO on the synthetic toy policy");
    tr->add_option("--queries", train.queries);
    tr->add_option("--docs", train.docs);
    tr->add_option("--steps", train.steps);
    tr->add_option("--seed", train.seed);
    tr->add_option("--reward", train.reward, "se | ndcg | rr");
    tr->add_option("--rollout-n,--rollout_n", train.trainer.grpo.group_size, "rollouts per prompt");
    tr->add_option("--clip-ratio,--clip_ratio", train.trainer.grpo.clip_ratio);
    tr->add_option("--kl-loss-coef,--kl_loss_coef", train.trainer.grpo.kl_coef);
    tr->add_option("--learning-rate,--learning_rate", train.trainer.learning_rate);
    tr->add_option("--mini-batch", train.trainer.mini_batch_queries, "queries per update");
    tr->add_option("--stats-out", train.stats_out, "step stats (JSONL)");
    tr->add_option("--policy-out", train.policy_out, "final policy (JSON)");

    BenchOptions bench;
    auto* be = app.add_subcommand("bench-latency", "pointwise vs sliding-window listwise latency");
    be->add_option("--n", bench.n, "candidates per query");
    be->add_option("--latency-ms", bench.latency_ms);
    be->add_option("--jitter-ms", bench.jitter_ms);
    be->add_option("--parallelism", bench.parallelism, "comma-separated P values")->delimiter(',');
    be->add_option("--window", bench.windows, "comma-separated window sizes")->delimiter(',');
    be->add_option("--stride", bench.strides, "comma-separated strides")->delimiter(',');
    be->add_option("--seed", bench.seed);
    be->add_flag("--measure", bench.measure, "also run with real waits and time it");
    be->add_option("--report-out", bench.report_out);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*rr) return cmd_rerank(rerank, out, err);
        if (*ev) return cmd_eval(eval, out);
        if (*fu) return cmd_fuse(fuse_opts, out);
        if (*rw) return cmd_reward(reward, out, err);
        if (*sy) return cmd_synthesize(synth, out);
        if (*tr) return cmd_train_toy(train, out);
        if (*be) return cmd_bench_latency(bench, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const BackendError& e) {
        err << "backend error: " << e.what() << "\n";
        return kBackend;
    } catch (const std::exception& e) {
        err << "data error: " << e.what() << "\n";
        return kData;
    }
    return kUsage;
}

}  // namespace pwrank::cli
