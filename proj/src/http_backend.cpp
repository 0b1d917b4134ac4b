#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "pwrank/backend.hpp"
#include "pwrank/errors.hpp"

namespace pwrank {

using nlohmann::json;

namespace {

thread_local int g_last_attempts = 0;

std::string env_or_empty(const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
}

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // prefix without trailing slash
};

SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw UsageError("endpoint URL must include a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    SplitUrl out;
    out.origin = url.substr(0, path_start);
    out.path = path_start == std::string::npos ? std::string() : url.substr(path_start);
    while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
    return out;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

HttpEndpointConfig HttpEndpointConfig::from_env() {
    HttpEndpointConfig c;
    c.base_url = env_or_empty("PWRANK_API_BASE");
    c.api_key = env_or_empty("PWRANK_API_KEY");
    c.model = env_or_empty("PWRANK_MODEL");
    return c;
}

void HttpEndpointConfig::validate() const {
    if (base_url.empty()) throw UsageError("HTTP backend: endpoint URL not configured (PWRANK_API_BASE)");
    if (model.empty()) throw UsageError("HTTP backend: model not configured (PWRANK_MODEL)");
    if (max_attempts < 1) throw UsageError("HTTP backend: max_attempts must be >= 1");
    split_url(base_url);
}

std::pair<std::size_t, std::size_t> answer_span(std::string_view text, Scheme scheme) {
    std::size_t a = 0, b = text.size();
    if (scheme != Scheme::binary_plain) {
        auto open = text.rfind("<answer>");
        if (open == std::string_view::npos) return {0, 0};
        a = open + 8;
        auto close = text.find("</answer>", a);
        if (close == std::string_view::npos) return {0, 0};
        b = close;
    }
    while (a < b && is_space(text[a])) ++a;
    while (b > a && is_space(text[b - 1])) --b;
    return {a, b};
}

std::string completion_request_body(const HttpEndpointConfig& config, const ScoreRequest& request) {
    json body = {{"model", config.model},
                 {"prompt", request.prompt},
                 {"max_tokens", config.max_tokens},
                 {"temperature", request.temperature},
                 {"n", request.generations},
                 {"logprobs", config.top_logprobs}};
    return body.dump();
}

std::vector<Generation> parse_completion_response(const std::string& body, Scheme scheme) {
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw BackendError("completion response is not JSON", true);
    if (!doc.contains("choices") || !doc["choices"].is_array())
        throw BackendError("completion response has no choices", true);

    std::vector<Generation> out;
    for (const auto& choice : doc["choices"]) {
        Generation gen;
        gen.text = choice.value("text", std::string());
        if (!choice.contains("logprobs") || choice["logprobs"].is_null())
            throw BackendError("provider returned no log-probs; enable logprobs on the endpoint", false);
        const auto& lp = choice["logprobs"];
        if (!lp.contains("tokens") || !lp.contains("token_logprobs"))
            throw BackendError("provider log-probs lack tokens/token_logprobs", false);
        const auto tokens = lp["tokens"].get<std::vector<std::string>>();
        const auto& token_lp = lp["token_logprobs"];
        std::vector<std::size_t> offsets;
        if (lp.contains("text_offset") && lp["text_offset"].is_array()) {
            offsets = lp["text_offset"].get<std::vector<std::size_t>>();
            // Offsets may be relative to the prompt; rebase on the first token.
            if (!offsets.empty()) {
                const auto first = offsets.front();
                for (auto& o : offsets) o -= first;
            }
        }
        if (offsets.size() != tokens.size()) {
            offsets.clear();
            std::size_t pos = 0;
            for (const auto& t : tokens) {
                offsets.push_back(pos);
                pos += t.size();
            }
        }

        auto [a, b] = answer_span(gen.text, scheme);
        bool first = true;
        for (std::size_t i = 0; i < tokens.size() && a < b; ++i) {
            const std::size_t start = offsets[i], end = start + tokens[i].size();
            if (end <= a || start >= b) continue;
            if (i < token_lp.size() && token_lp[i].is_number()) gen.answer_logprobs.push_back(token_lp[i].get<double>());
            if (first) {
                first = false;
                if (lp.contains("top_logprobs") && lp["top_logprobs"].is_array() && i < lp["top_logprobs"].size()) {
                    const auto& alts = lp["top_logprobs"][i];
                    if (alts.is_object())
                        for (const auto& [tok, v] : alts.items())
                            if (v.is_number()) gen.alternatives[tok] = v.get<double>();
                }
            }
        }
        out.push_back(std::move(gen));
    }
    return out;
}

HttpBackend::HttpBackend(HttpEndpointConfig config) : config_(std::move(config)) { config_.validate(); }

int HttpBackend::last_attempts() { return g_last_attempts; }

ScoreResponse HttpBackend::generate(const ScoreRequest& request) {
    const auto url = split_url(config_.base_url);
    const std::string body = completion_request_body(config_, request);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    const auto started = std::chrono::steady_clock::now();
    Millis backoff = config_.initial_backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        g_last_attempts = attempt;
        httplib::Client client(url.origin);
        const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);

        auto res = client.Post(url.path + "/completions", headers, body, "application/json");
        bool retryable = true;
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
        } else if (res->status == 200) {
            try {
                ScoreResponse resp;
                resp.generations = parse_completion_response(res->body, request.scheme);
                resp.latency = std::chrono::steady_clock::now() - started;
                return resp;
            } catch (const BackendError& e) {
                if (!e.retryable()) throw;
                last_error = e.what();
            }
        } else {
            last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
            retryable = res->status == 429 || res->status >= 500;
        }
        if (!retryable) throw BackendError(last_error, false);
        if (attempt < config_.max_attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw BackendError("completion request failed after " + std::to_string(config_.max_attempts) +
                           " attempts: " + last_error,
                       true);
}

}  // namespace pwrank
