#include <algorithm>
#include <cmath>
#include <thread>

#include "pwrank/backend.hpp"
#include "pwrank/errors.hpp"
#include "pwrank/random.hpp"

namespace pwrank {

void LatencyModel::validate() const {
    if (!(base_ms >= 0.0) || !(jitter_ms >= 0.0)) throw UsageError("latency parameters must be >= 0");
}

void MockBackendConfig::validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(malformation_prob) || !prob(transport_failure_prob))
        throw UsageError("mock probabilities must lie in [0, 1]");
    if (!(noise_std >= 0.0)) throw UsageError("mock noise std must be >= 0");
    if (unjudged_grade && *unjudged_grade < 0) throw UsageError("mock unjudged grade must be >= 0");
    if (max_grade < 0 || think_words < 0 || think_words_jitter < 0)
        throw UsageError("mock grade scale and reasoning length must be >= 0");
    latency.validate();
}

namespace {

int largest_grade(const RelevanceJudgments& grades) {
    int m = 1;
    for (const auto& qid : grades.query_ids())
        for (int g : grades.grades_for(qid)) m = std::max(m, g);
    return m;
}

std::string reasoning(Rng& rng, int words) {
    static constexpr const char* kWords[] = {"the", "query", "asks", "about", "this", "topic", "and",
                                             "document", "discusses", "related", "evidence", "so",
                                             "relevance", "follows", "from", "overlap"};
    std::string out;
    for (int i = 0; i < words; ++i) {
        if (i) out.push_back(' ');
        out += kWords[uniform_index(rng, std::size(kWords))];
    }
    return out;
}

std::string malformed(Rng& rng, Scheme scheme, const std::string& think, const std::string& answer) {
    if (scheme == Scheme::binary_plain) return "I think the answer is " + answer + ".";
    switch (uniform_index(rng, 4)) {
        case 0: return "The relevance score is " + answer + ".";
        case 1: return "<think>" + think + "</think>";
        case 2: return "<think>" + think + "</think><answer>" + answer + " points</answer>";
        default: return "<think>" + think + "</think><answer>" + answer + "</answer><answer>" + answer + "</answer>";
    }
}

}  // namespace

MockBackend::MockBackend(MockBackendConfig config) : config_(std::move(config)) {
    config_.validate();
    max_grade_ = config_.max_grade > 0 ? config_.max_grade : largest_grade(config_.grades);
}

ScoreResponse MockBackend::generate(const ScoreRequest& request) {
    if (request.generations < 1) throw UsageError("generation count must be >= 1");
    const auto* judged = config_.grades.query(request.query_id);
    const bool known = judged && judged->contains(request.doc_id);
    if (!known && !config_.unjudged_grade)
        throw DataError("mock backend: no latent grade for " + request.query_id + "/" + request.doc_id);
    const int grade = known ? judged->at(request.doc_id) : *config_.unjudged_grade;

    const auto base = hash_mix(hash_mix(hash_mix(hash_mix(config_.seed, request.query_id), request.doc_id),
                                        std::string_view(to_string(request.scheme))),
                               request.attempt);
    Rng rng(base);

    ScoreResponse resp;
    resp.latency = Millis(config_.latency.base_ms + config_.latency.jitter_ms * uniform01(rng));
    const bool fail = uniform01(rng) < config_.transport_failure_prob;
    if (config_.sleep && resp.latency.count() > 0.0) std::this_thread::sleep_for(resp.latency);
    if (fail) throw BackendError("mock backend: simulated transport failure", true);

    const double scaled = 10.0 * static_cast<double>(grade) / static_cast<double>(max_grade_);
    for (int j = 0; j < request.generations; ++j) {
        Rng g(hash_mix(base, static_cast<std::uint64_t>(j) + 1));
        const double noise = config_.noise_std > 0.0 ? config_.noise_std * standard_normal(g) : 0.0;
        const bool broken = uniform01(g) < config_.malformation_prob;
        const int words = config_.think_words +
                          (config_.think_words_jitter > 0
                               ? static_cast<int>(uniform_index(g, static_cast<std::uint64_t>(config_.think_words_jitter) + 1))
                               : 0);
        const std::string think = reasoning(g, words);
        const double prob = std::exp(-std::abs(noise));
        const double noisy = scaled + noise;

        std::string answer;
        Generation gen;
        if (is_binary(request.scheme)) {
            const bool yes = noisy >= 5.0;
            answer = yes ? "yes" : "no";
            gen.alternatives[answer] = std::log(prob);
            if (prob < 1.0) gen.alternatives[yes ? "no" : "yes"] = std::log1p(-prob);
        } else {
            const double top = static_cast<double>(max_score(request.scheme));
            const long s = std::clamp(std::lround(noisy * top / 10.0), 0L, static_cast<long>(top));
            answer = std::to_string(s);
            gen.alternatives[answer] = std::log(prob);
        }

        if (broken) {
            gen.text = malformed(g, request.scheme, think, answer);
            gen.alternatives.clear();
        } else {
            gen.text = request.scheme == Scheme::binary_plain
                           ? answer
                           : "<think>" + think + "</think><answer>" + answer + "</answer>";
            gen.answer_logprobs = {std::log(prob)};
        }
        resp.generations.push_back(std::move(gen));
    }
    return resp;
}

}  // namespace pwrank
