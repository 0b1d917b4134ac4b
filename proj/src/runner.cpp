#include "pwrank/runner.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <thread>

#include "pwrank/errors.hpp"
#include "pwrank/parallel.hpp"
#include "pwrank/random.hpp"

namespace pwrank {

namespace {

struct Slot {
    PairResult result;
    bool truncated = false;
    std::string error;
};

Slot score_pair(const QueryGroup& group, const Document& doc, ScorerBackend& backend, const PromptTemplate& tmpl,
                const PointwiseOptions& options) {
    Slot slot;
    auto prompt = render_prompt(tmpl, group.instruction, group.query_text, doc.text);
    slot.truncated = prompt.truncated();
    ScoreRequest req{std::move(prompt.text), tmpl.scheme(), 1, options.temperature, group.query_id, doc.doc_id, 0};
    for (int attempt = 0; attempt < std::max(1, options.max_attempts); ++attempt) {
        req.attempt = static_cast<std::uint32_t>(attempt);
        try {
            auto resp = backend.generate(req);
            if (resp.generations.empty()) throw BackendError("backend returned no generation", false);
            const auto& gen = resp.generations.front();
            slot.result.text = gen.text;
            slot.result.formatted = parse_output(gen.text, tmpl.scheme()).formatted;
            slot.result.score = ranking_score(gen, tmpl.scheme());
            slot.error.clear();
            return slot;
        } catch (const BackendError& e) {
            slot.error = e.what();
            if (!e.retryable()) break;
        } catch (const std::exception& e) {
            slot.error = e.what();
            break;
        }
    }
    return slot;
}

}  // namespace

PointwiseResult run_pointwise(const std::vector<QueryGroup>& groups, ScorerBackend& backend,
                              const PromptTemplate& tmpl, const PointwiseOptions& options) {
    if (options.parallelism < 1) throw UsageError("parallelism must be >= 1");
    PointwiseResult out;
    const auto run_start = std::chrono::steady_clock::now();

    for (const auto& group : groups) {
        const auto n = group.candidates.size();
        std::vector<Slot> slots(n);
        const auto started = std::chrono::steady_clock::now();
        parallel_for(n, options.parallelism, [&](std::size_t i) {
            slots[i] = score_pair(group, group.candidates[i], backend, tmpl, options);
        });
        QueryTiming timing{group.query_id, std::chrono::steady_clock::now() - started, false};

        std::map<std::string, PairResult> scores;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& doc_id = group.candidates[i].doc_id;
            if (!slots[i].error.empty()) {
                out.failures.push_back({group.query_id, doc_id, slots[i].error});
                timing.failed = true;
                continue;
            }
            out.truncated_prompts += slots[i].truncated ? 1 : 0;
            out.unformatted += slots[i].result.formatted ? 0 : 1;
            scores[doc_id] = std::move(slots[i].result);
        }
        if (!timing.failed) out.scores[group.query_id] = std::move(scores);
        out.timings.push_back(std::move(timing));
    }
    out.total_wall_clock = std::chrono::steady_clock::now() - run_start;
    return out;
}

int listwise_call_count(int num_docs, int window, int stride) {
    if (num_docs < 1 || window < 1 || window > num_docs || stride < 1 || (window < num_docs && stride >= window))
        throw UsageError("listwise simulation needs 1 <= stride < window <= N");
    return 1 + (num_docs - window + stride - 1) / stride;
}

ListwiseSimulation simulate_listwise_latency(int num_docs, int window, int stride, const LatencyModel& model,
                                             std::uint64_t seed, bool sleep) {
    model.validate();
    ListwiseSimulation sim;
    sim.calls = listwise_call_count(num_docs, window, stride);
    Rng rng(hash_mix(seed, "listwise-latency"));
    const auto started = std::chrono::steady_clock::now();
    for (int c = 0; c < sim.calls; ++c) {
        const Millis call(model.base_ms + model.jitter_ms * uniform01(rng));
        sim.simulated += call;
        if (sleep) std::this_thread::sleep_for(call);
    }
    if (sleep) sim.measured = std::chrono::steady_clock::now() - started;
    return sim;
}

Millis simulate_pointwise_latency(int num_docs, int parallelism, const LatencyModel& model, std::uint64_t seed) {
    model.validate();
    if (num_docs < 0 || parallelism < 1) throw UsageError("pointwise simulation needs N >= 0 and P >= 1");
    Rng rng(hash_mix(seed, "pointwise-latency"));
    std::priority_queue<double, std::vector<double>, std::greater<>> free_at;
    for (int w = 0; w < std::min(parallelism, std::max(num_docs, 1)); ++w) free_at.push(0.0);
    double end = 0.0;
    for (int i = 0; i < num_docs; ++i) {
        const double start = free_at.top();
        free_at.pop();
        const double done = start + model.base_ms + model.jitter_ms * uniform01(rng);
        end = std::max(end, done);
        free_at.push(done);
    }
    return Millis(end);
}

Millis measure_pointwise_latency(int num_docs, int parallelism, const LatencyModel& model, std::uint64_t seed) {
    if (num_docs < 1) throw UsageError("pointwise measurement needs N >= 1");
    QueryGroup group;
    group.query_id = "bench";
    group.query_text = "latency benchmark query";
    MockBackendConfig mock;
    mock.seed = seed;
    mock.unjudged_grade = 0;
    mock.latency = model;
    mock.sleep = true;
    mock.think_words = 4;
    for (int i = 0; i < num_docs; ++i)
        group.candidates.push_back({"d" + std::to_string(i), "benchmark document", std::nullopt});
    MockBackend backend(std::move(mock));
    PointwiseOptions options;
    options.parallelism = parallelism;
    const auto result = run_pointwise({group}, backend, PromptTemplate::builtin(Scheme::int_0_10), options);
    if (!result.failures.empty()) throw BackendError(result.failures.front().message, false);
    return result.timings.front().wall_clock;
}

Millis pointwise_latency_model(int num_docs, int parallelism, Millis per_call) {
    if (num_docs < 0 || parallelism < 1) throw UsageError("pointwise latency model needs N >= 0 and P >= 1");
    const int waves = (num_docs + parallelism - 1) / parallelism;
    return per_call * waves;
}

}  // namespace pwrank
