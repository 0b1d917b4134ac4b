#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pwrank/backend.hpp"
#include "pwrank/scoring.hpp"
#include "pwrank/types.hpp"

namespace pwrank {

struct PairResult {
    double score = 0.0;
    bool formatted = false;
    std::string text;  ///< first generation
};

struct PairFailure {
    std::string query_id;
    std::string doc_id;
    std::string message;
};

struct QueryTiming {
    std::string query_id;
    Millis wall_clock{0};
    bool failed = false;
};

struct PointwiseResult {
    /// query_id -> doc_id -> result, for queries without permanent failures.
    std::map<std::string, std::map<std::string, PairResult>> scores;
    std::vector<PairFailure> failures;
    std::vector<QueryTiming> timings;
    Millis total_wall_clock{0};
    std::size_t truncated_prompts = 0;
    std::size_t unformatted = 0;
};

struct PointwiseOptions {
    int parallelism = 1;
    int max_attempts = 1;   ///< per pair, on retryable backend errors
    double temperature = 0.6;
};

/// Scores every (query, candidate) pair independently with one generation
/// each. Within a query at most `parallelism` requests are in flight; queries
/// run one after another. Unformatted generations score 0 and are counted.
PointwiseResult run_pointwise(const std::vector<QueryGroup>& groups, ScorerBackend& backend,
                              const PromptTemplate& tmpl, const PointwiseOptions& options);

/// Number of sequential calls a sliding-window listwise reranker makes:
/// 1 + ceil((N - w) / stride). Throws UsageError unless 1 <= stride < w <= N
/// (N == w is allowed with any stride >= 1).
int listwise_call_count(int num_docs, int window, int stride);

struct ListwiseSimulation {
    int calls = 0;
    Millis simulated{0};  ///< sum of sampled per-call latencies
    Millis measured{0};   ///< wall-clock when the calls were actually slept through
};

/// Sequential windows; each call's latency drawn from `model`. With `sleep`
/// set the calls are executed as real waits and timed.
ListwiseSimulation simulate_listwise_latency(int num_docs, int window, int stride, const LatencyModel& model,
                                             std::uint64_t seed, bool sleep = false);

/// Pointwise wall-clock when N calls with latencies drawn from `model` are
/// served by P workers, each taking the next call as soon as it is free.
Millis simulate_pointwise_latency(int num_docs, int parallelism, const LatencyModel& model, std::uint64_t seed);

/// Runs one query of N candidates through run_pointwise against a mock
/// backend that sleeps out `model`, and returns the measured wall-clock.
Millis measure_pointwise_latency(int num_docs, int parallelism, const LatencyModel& model, std::uint64_t seed);

/// Analytic pointwise wall-clock for a constant per-call latency t:
/// ceil(N / P) * t.
Millis pointwise_latency_model(int num_docs, int parallelism, Millis per_call);

}  // namespace pwrank
