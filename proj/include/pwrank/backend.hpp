#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pwrank/scoring.hpp"
#include "pwrank/types.hpp"

namespace pwrank {

using Millis = std::chrono::duration<double, std::milli>;

struct ScoreRequest {
    std::string prompt;
    Scheme scheme = Scheme::int_0_10;
    int generations = 1;
    double temperature = 0.6;
    // Identify the pair being scored. Backends that need ground truth (the
    // mock) key on these; HTTP backends ignore them.
    std::string query_id;
    std::string doc_id;
    /// Distinguishes repeated requests for the same pair (e.g. retries).
    std::uint32_t attempt = 0;
};

struct ScoreResponse {
    std::vector<Generation> generations;
    Millis latency{0};
};

/// Implementations must accept concurrent `generate` calls.
class ScorerBackend {
public:
    virtual ~ScorerBackend() = default;
    /// Throws BackendError; `retryable()` tells transport failures from
    /// configuration errors.
    virtual ScoreResponse generate(const ScoreRequest& request) = 0;
};

/// Per-call latency: base + jitter * U[0, 1).
struct LatencyModel {
    double base_ms = 0.0;
    double jitter_ms = 0.0;

    void validate() const;
};

struct MockBackendConfig {
    std::uint64_t seed = 0;
    RelevanceJudgments grades;   ///< latent grade per (query, doc)
    std::optional<int> unjudged_grade;  ///< grade for pairs missing from `grades`; unset means error
    int max_grade = 0;           ///< grade mapped to score 10; 0 means the largest grade in `grades` (at least 1)
    double noise_std = 0.0;
    double malformation_prob = 0.0;
    double transport_failure_prob = 0.0;  ///< per attempt, retryable
    LatencyModel latency;
    bool sleep = false;          ///< actually wait out the simulated latency
    int think_words = 12;        ///< length of the generated reasoning
    int think_words_jitter = 0;

    void validate() const;
};

/// Seeded stand-in for an LLM scorer. Score = clamp(round(10 * grade /
/// max_grade + noise), 0, 10), answer probability exp(-|noise|). Binary
/// schemes answer "yes" when the noisy scaled score reaches 5. Every random
/// draw derives from (seed, query_id, doc_id, attempt, generation index), so
/// outputs do not depend on call order or concurrency.
class MockBackend final : public ScorerBackend {
public:
    explicit MockBackend(MockBackendConfig config);
    ScoreResponse generate(const ScoreRequest& request) override;

    const MockBackendConfig& config() const { return config_; }

private:
    MockBackendConfig config_;
    int max_grade_;
};

struct HttpEndpointConfig {
    std::string base_url;   ///< e.g. http://localhost:8000/v1
    std::string api_key;
    std::string model;
    int max_tokens = 2048;
    int top_logprobs = 5;
    Millis timeout{60000};
    int max_attempts = 3;
    Millis initial_backoff{250};

    /// PWRANK_API_BASE, PWRANK_API_KEY, PWRANK_MODEL.
    static HttpEndpointConfig from_env();
    void validate() const;
};

/// Client for OpenAI-compatible `/completions` endpoints that requests token
/// log-probabilities and extracts those of the answer span.
class HttpBackend final : public ScorerBackend {
public:
    explicit HttpBackend(HttpEndpointConfig config);
    ScoreResponse generate(const ScoreRequest& request) override;

    /// Attempts made by the most recent call on this thread.
    static int last_attempts();

private:
    HttpEndpointConfig config_;
};

/// Request body for a completion call.
std::string completion_request_body(const HttpEndpointConfig& config, const ScoreRequest& request);

/// Maps an OpenAI-style completions response to generations. Throws
/// BackendError (not retryable) when log-probs are absent.
std::vector<Generation> parse_completion_response(const std::string& body, Scheme scheme);

/// Byte range [begin, end) of the answer value inside a completion, if any.
std::pair<std::size_t, std::size_t> answer_span(std::string_view text, Scheme scheme);

}  // namespace pwrank
