#include "pwrank/toy_policy.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pwrank/errors.hpp"
#include "pwrank/metrics.hpp"
#include "pwrank/random.hpp"

namespace pwrank {

namespace {

std::set<std::string> token_set(const std::string& text) {
    std::set<std::string> out;
    std::istringstream in(text);
    std::string tok;
    while (in >> tok) {
        std::transform(tok.begin(), tok.end(), tok.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        out.insert(std::move(tok));
    }
    return out;
}

}  // namespace

Eigen::VectorXd toy_features(const QueryGroup& group, const Document& doc) {
    const auto q = token_set(group.query_text);
    const auto d = token_set(doc.text);
    std::size_t common = 0;
    for (const auto& t : q) common += d.contains(t) ? 1 : 0;
    const std::size_t uni = q.size() + d.size() - common;

    Eigen::VectorXd x(kToyFeatures);
    x[0] = 1.0;
    x[1] = q.empty() ? 0.0 : static_cast<double>(common) / static_cast<double>(q.size());
    x[2] = uni == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(uni);
    const auto h = hash_mix(hash_mix(0, group.query_id), doc.doc_id);
    x[3] = 2.0 * (static_cast<double>(h >> 11) * 0x1.0p-53) - 1.0;
    return x;
}

ToyPolicy ToyPolicy::zeros(int num_features) {
    return {Eigen::Matrix<double, kScoreClasses, Eigen::Dynamic>::Zero(kScoreClasses, num_features)};
}

ToyPolicy ToyPolicy::random(std::uint64_t seed, double scale, int num_features) {
    Rng rng(hash_mix(seed, "toy-policy-init"));
    ToyPolicy p = zeros(num_features);
    for (Eigen::Index c = 0; c < p.weights.cols(); ++c)
        for (Eigen::Index r = 0; r < p.weights.rows(); ++r) p.weights(r, c) = scale * standard_normal(rng);
    return p;
}

Eigen::Matrix<double, kScoreClasses, 1> ToyPolicy::log_probabilities(const Eigen::VectorXd& features) const {
    Eigen::Matrix<double, kScoreClasses, 1> logits = weights * features;
    const double m = logits.maxCoeff();
    const double lse = m + std::log((logits.array() - m).exp().sum());
    return (logits.array() - lse).matrix();
}

Eigen::Matrix<double, kScoreClasses, 1> ToyPolicy::probabilities(const Eigen::VectorXd& features) const {
    Eigen::Matrix<double, kScoreClasses, 1> p = log_probabilities(features).array().exp().matrix();
    return p / p.sum();
}

double ToyPolicy::expected_score(const Eigen::VectorXd& features) const {
    const auto p = probabilities(features);
    return Eigen::Matrix<double, kScoreClasses, 1>::LinSpaced(0.0, kScoreClasses - 1).dot(p);
}

void write_policy(const ToyPolicy& policy, std::ostream& out) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < policy.weights.rows(); ++r) {
        std::vector<double> row(policy.weights.cols());
        for (Eigen::Index c = 0; c < policy.weights.cols(); ++c) row[c] = policy.weights(r, c);
        rows.push_back(row);
    }
    nlohmann::json doc = {{"classes", policy.weights.rows()}, {"features", policy.weights.cols()}, {"weights", rows}};
    out << doc.dump() << '\n';
}

ToyPolicy read_policy(std::istream& in) {
    auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw DataError("policy file: malformed JSON");
    try {
        const int features = doc.at("features").get<int>();
        if (doc.at("classes").get<int>() != kScoreClasses) throw DataError("policy file: expected 11 classes");
        ToyPolicy p = ToyPolicy::zeros(features);
        const auto& rows = doc.at("weights");
        for (int r = 0; r < kScoreClasses; ++r)
            for (int c = 0; c < features; ++c) p.weights(r, c) = rows.at(r).at(c).get<double>();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("policy file: ") + e.what());
    }
}

ObjectiveEval evaluate_objective(const ToyPolicy& policy, std::span<const PromptBatch> prompts,
                                 const GrpoConfig& config) {
    ObjectiveEval out;
    out.gradient.setZero(kScoreClasses, policy.weights.cols());
    if (prompts.empty()) return out;

    const double eps = config.clip_ratio, beta = config.kl_coef;
    std::size_t terms = 0, clipped = 0;
    std::vector<TrajectoryLogProbs<double>> group;
    for (const auto& prompt : prompts) {
        const auto logp = policy.log_probabilities(prompt.features);
        const Eigen::Matrix<double, kScoreClasses, 1> p = logp.array().exp().matrix();
        const auto g = static_cast<double>(prompt.scores.size());

        group.clear();
        for (std::size_t j = 0; j < prompt.scores.size(); ++j) {
            const int s = prompt.scores[j];
            const auto jj = static_cast<Eigen::Index>(j);
            const double lp = logp[s];
            group.push_back({GrpoVector<double>::Constant(1, lp), GrpoVector<double>::Constant(1, prompt.old_logp[jj]),
                             GrpoVector<double>::Constant(1, prompt.ref_logp[jj])});

            const double adv = prompt.advantages[jj];
            // d/dlogp of the clipped surrogate: rho * A on the unclipped branch, 0 otherwise.
            double dterm = 0.0;
            if (clip_active(lp, prompt.old_logp[jj], adv, eps)) {
                ++clipped;
            } else {
                dterm = std::exp(lp - prompt.old_logp[jj]) * adv;
            }
            // d/dlogp of -beta * (r - log r - 1), r = pi_ref / pi_theta.
            dterm -= beta * (1.0 - std::exp(prompt.ref_logp[jj] - lp));
            out.mean_kl += kl_k3(prompt.ref_logp[jj], lp);
            ++terms;

            // grad_W log pi(s | x) = (e_s - p) x^T
            Eigen::Matrix<double, kScoreClasses, 1> dlogits = -p;
            dlogits[s] += 1.0;
            out.gradient.noalias() += (dterm / g) * dlogits * prompt.features.transpose();
        }
        out.objective += grpo_objective<double>(std::span<const TrajectoryLogProbs<double>>(group),
                                                prompt.advantages, config);
    }
    const auto n = static_cast<double>(prompts.size());
    out.objective /= n;
    out.gradient /= n;
    out.mean_kl /= static_cast<double>(terms);
    out.clip_fraction = static_cast<double>(clipped) / static_cast<double>(terms);
    return out;
}

double policy_ndcg(const ToyPolicy& policy, const std::vector<QueryGroup>& dataset, int k) {
    if (dataset.empty()) return 0.0;
    double total = 0.0;
    for (const auto& g : dataset) {
        std::map<std::string, double> scores;
        for (const auto& d : g.candidates) scores[d.doc_id] = policy.expected_score(toy_features(g, d));
        auto ranked = rank_by_score(g, scores);
        std::vector<int> grades, all;
        for (const auto& d : ranked.docs) grades.push_back(g.grade(d.doc_id));
        for (const auto& d : g.candidates) all.push_back(g.grade(d.doc_id));
        total += ndcg_at_k(grades, all, k);
    }
    return total / static_cast<double>(dataset.size());
}

namespace {

int sample_class(Rng& rng, const Eigen::Matrix<double, kScoreClasses, 1>& p) {
    double u = uniform01(rng);
    for (int c = 0; c < kScoreClasses; ++c) {
        u -= p[c];
        if (u < 0.0) return c;
    }
    return kScoreClasses - 1;
}

}  // namespace

ToyTrainingResult train_toy_policy(const std::vector<QueryGroup>& dataset, const ToyTrainerConfig& config, int steps,
                                   std::uint64_t seed) {
    config.grpo.validate();
    if (steps < 0) throw UsageError("steps must be >= 0");
    if (config.mini_batch_queries < 1) throw UsageError("mini_batch_size must be >= 1");
    if (dataset.empty()) throw DataError("toy training needs at least one query group");
    for (const auto& g : dataset) {
        validate(g);
        if (std::none_of(g.candidates.begin(), g.candidates.end(), [&](auto& d) { return g.is_positive(d.doc_id); }))
            throw DataError("query " + g.query_id + ": no positive document");
    }

    ToyTrainingResult result{ToyPolicy::random(seed, config.init_scale), {}};
    const ToyPolicy reference = result.policy;

    std::vector<std::vector<Eigen::VectorXd>> features(dataset.size());
    std::vector<std::vector<double>> ref_scores(dataset.size());
    for (std::size_t q = 0; q < dataset.size(); ++q)
        for (const auto& d : dataset[q].candidates) {
            features[q].push_back(toy_features(dataset[q], d));
            ref_scores[q].push_back(reference.expected_score(features[q].back()));
        }

    const int group = config.grpo.group_size;
    Rng rng(hash_mix(seed, "toy-grpo"));
    for (int step = 0; step < steps; ++step) {
        const ToyPolicy old = result.policy;
        PolicyStepStats stats;
        stats.step = step;
        stats.ndcg_at_10 = policy_ndcg(old, dataset, 10);

        // Rollouts and rewards per query; prompts[q][i] is document i of query q.
        std::vector<std::vector<PromptBatch>> prompts(dataset.size());
        double reward_sum = 0.0;
        std::size_t reward_count = 0;
        for (std::size_t q = 0; q < dataset.size(); ++q) {
            const auto& g = dataset[q];
            std::vector<std::vector<ParsedOutput>> rollouts(g.size());
            for (std::size_t i = 0; i < g.size(); ++i) {
                PromptBatch pb;
                pb.features = features[q][i];
                const auto old_logp = old.log_probabilities(pb.features);
                const auto ref_logp = reference.log_probabilities(pb.features);
                const Eigen::Matrix<double, kScoreClasses, 1> p = old_logp.array().exp().matrix();
                pb.old_logp.resize(group);
                pb.ref_logp.resize(group);
                for (int j = 0; j < group; ++j) {
                    const int s = sample_class(rng, p);
                    pb.scores.push_back(s);
                    pb.old_logp[j] = old_logp[s];
                    pb.ref_logp[j] = ref_logp[s];
                    ParsedOutput out;
                    out.score = s;
                    out.formatted = true;
                    rollouts[i].push_back(std::move(out));
                }
                prompts[q].push_back(std::move(pb));
            }
            const auto matrix = make_rollout_matrix(g, rollouts, ref_scores[q]);
            const auto rewards = compute_rewards(matrix, config.reward);
            for (std::size_t i = 0; i < g.size(); ++i) {
                Eigen::Map<const Eigen::VectorXd> r(rewards.rewards[i].data(), group);
                prompts[q][i].advantages = group_advantages(r);
                reward_sum += r.sum();
                reward_count += static_cast<std::size_t>(group);
            }
        }
        stats.mean_reward = reward_sum / static_cast<double>(reward_count);

        // One pass over the queries in shuffled mini-batches.
        std::vector<std::size_t> order(dataset.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);

        int updates = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.mini_batch_queries)) {
            const auto end = std::min(order.size(), start + static_cast<std::size_t>(config.mini_batch_queries));
            std::vector<PromptBatch> batch;
            for (std::size_t k = start; k < end; ++k)
                for (const auto& pb : prompts[order[k]]) batch.push_back(pb);
            const auto eval = evaluate_objective(result.policy, batch, config.grpo);
            stats.objective += eval.objective;
            stats.mean_kl += eval.mean_kl;
            stats.clip_fraction += eval.clip_fraction;
            stats.grad_norm += eval.gradient.norm();
            result.policy.weights += config.learning_rate * eval.gradient;
            ++updates;
        }
        stats.objective /= updates;
        stats.mean_kl /= updates;
        stats.clip_fraction /= updates;
        stats.grad_norm /= updates;
        result.stats.push_back(stats);
    }
    return result;
}

std::vector<QueryGroup> make_separable_dataset(int queries, int docs, std::uint64_t seed) {
    if (queries < 1 || docs < 2) throw UsageError("separable dataset needs >= 1 query and >= 2 docs");
    constexpr int kVocab = 2000, kQueryLen = 8, kDocLen = 30;
    Rng rng(hash_mix(seed, "separable-dataset"));
    auto word = [](std::size_t i) { return "w" + std::to_string(i); };

    std::vector<QueryGroup> out;
    char buf[32];
    for (int q = 0; q < queries; ++q) {
        QueryGroup g;
        std::snprintf(buf, sizeof buf, "q%03d", q);
        g.query_id = buf;
        g.instruction = "Given a query, retrieval relevant passage.";
        auto picks = sample_without_replacement(rng, kVocab, kQueryLen);
        std::set<std::size_t> query_words(picks.begin(), picks.end());
        for (auto w : picks) g.query_text += (g.query_text.empty() ? "" : " ") + word(w);

        const auto positive = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(docs)));
        for (int d = 0; d < docs; ++d) {
            const bool is_pos = d == positive;
            const int overlap = is_pos ? 5 + static_cast<int>(uniform_index(rng, 4))   // 5..8 of 8
                                       : static_cast<int>(uniform_index(rng, 3));      // 0..2 of 8
            std::vector<std::string> tokens;
            auto shared = sample_without_replacement(rng, picks.size(), static_cast<std::size_t>(overlap));
            for (auto s : shared) tokens.push_back(word(picks[s]));
            while (tokens.size() < kDocLen) {
                auto w = uniform_index(rng, kVocab);
                if (!query_words.contains(w)) tokens.push_back(word(w));
            }
            for (std::size_t i = tokens.size(); i > 1; --i) std::swap(tokens[i - 1], tokens[uniform_index(rng, i)]);
            Document doc;
            std::snprintf(buf, sizeof buf, "%s_d%02d", g.query_id.c_str(), d);
            doc.doc_id = buf;
            for (const auto& t : tokens) doc.text += (doc.text.empty() ? "" : " ") + t;
            g.candidates.push_back(std::move(doc));
            if (is_pos) g.labels[g.candidates.back().doc_id] = 1;
        }
        out.push_back(std::move(g));
    }
    return out;
}

void write_step_stats(const PolicyStepStats& s, std::ostream& out) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "{\"step\":%d,\"mean_reward\":%.6f,\"objective\":%.6f,\"mean_kl\":%.6f,"
                  "\"clip_fraction\":%.6f,\"grad_norm\":%.6f,\"ndcg_at_10\":%.6f}\n",
                  s.step, s.mean_reward, s.objective, s.mean_kl, s.clip_fraction, s.grad_norm, s.ndcg_at_10);
    out << buf;
}

}  // namespace pwrank
