#include "pwrank/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "pwrank/dataset_io.hpp"
#include "pwrank/errors.hpp"
#include "pwrank/parallel.hpp"
#include "pwrank/random.hpp"

namespace pwrank {

using nlohmann::json;

void RetrievalRanking::validate() const {
    if (docs.size() > kMaxRetrievalDepth)
        throw DataError("ranking for " + query_id + " is deeper than " + std::to_string(kMaxRetrievalDepth));
    std::set<std::string> seen;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (!seen.insert(docs[i].doc_id).second)
            throw DataError("ranking for " + query_id + " repeats " + docs[i].doc_id);
        if (i > 0 && docs[i].score > docs[i - 1].score)
            throw DataError("ranking for " + query_id + " has increasing scores at rank " + std::to_string(i + 1));
    }
}

std::map<std::string, RetrievalRanking> rankings_from_run(const std::vector<RunEntry>& entries) {
    std::map<std::string, RetrievalRanking> out;
    for (const auto& [qid, rows] : group_run(entries)) {
        RetrievalRanking r{qid, {}};
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].rank != static_cast<int>(i) + 1)
                throw DataError("ranking for " + qid + " has a gap at rank " + std::to_string(i + 1));
            r.docs.push_back({rows[i].doc_id, rows[i].score});
        }
        r.validate();
        out.emplace(qid, std::move(r));
    }
    return out;
}

std::string_view to_string(Stratum stratum) {
    switch (stratum) {
        case Stratum::positive: return "positive";
        case Stratum::hard: return "hard";
        case Stratum::medium: return "medium";
        case Stratum::easy: return "easy";
        case Stratum::synthetic: return "synthetic";
    }
    return "?";
}

std::string_view to_string(DropReason reason) {
    switch (reason) {
        case DropReason::backend_failure: return "backend_failure";
        case DropReason::unformatted: return "unformatted";
        case DropReason::too_long: return "too_long";
        case DropReason::sampling_shortfall: return "sampling_shortfall";
    }
    return "?";
}

SourceProfile source_profile(std::string_view name) {
    if (name == "reasonir_hq") return {"reasonir_hq", 1};
    if (name == "msmarco" || name == "promptriever") return {std::string(name), 0};
    throw UsageError("unknown source profile: " + std::string(name));
}

void SynthesisConfig::validate() const {
    auto ok = [](RankRange r) { return r.first >= 1 && r.last >= r.first; };
    if (!ok(hard) || !ok(medium) || !ok(easy) || medium.first <= hard.last || easy.first <= medium.last)
        throw UsageError("synthesis rank ranges must be non-empty, disjoint and ordered");
    if (easy.last > static_cast<int>(kMaxRetrievalDepth))
        throw UsageError("easy range ends beyond the retrieval depth");
    if (docs_per_query < 2) throw UsageError("docs_per_query must be >= 2");
    if (consensus_samples < 1) throw UsageError("consensus_samples must be >= 1");
    if (max_output_tokens < 1) throw UsageError("max_output_tokens must be >= 1");
    if (teacher_attempts < 1) throw UsageError("teacher_attempts must be >= 1");
    if (parallelism < 1) throw UsageError("parallelism must be >= 1");
}

NegativeCounts SynthesisConfig::counts_for(const SourceProfile& profile) const {
    NegativeCounts c;
    c.synthetic = profile.synthetic_negatives;
    c.hard = hard.last - hard.first + 1;
    const int rest = docs_per_query - 1 - c.hard - c.synthetic;
    if (rest < 0) throw UsageError("docs_per_query too small for the hard range of profile " + profile.name);
    c.medium = (rest + 1) / 2;
    c.easy = rest / 2;
    return c;
}

std::vector<SampledNegative> sample_negatives(const RetrievalRanking& ranking, const std::set<std::string>& excluded,
                                              const NegativeCounts& counts, const SynthesisConfig& config,
                                              std::uint64_t seed) {
    const RankRange ranges[] = {config.hard, config.medium, config.easy};
    const Stratum strata[] = {Stratum::hard, Stratum::medium, Stratum::easy};
    const int wanted[] = {counts.hard, counts.medium, counts.easy};

    std::vector<SampledNegative> out;
    Rng rng(hash_mix(seed, ranking.query_id));
    int carry = 0;
    for (int s = 0; s < 3; ++s) {
        std::vector<std::size_t> pool;  // positions into ranking.docs
        const auto last = std::min<std::size_t>(static_cast<std::size_t>(ranges[s].last), ranking.docs.size());
        for (std::size_t pos = static_cast<std::size_t>(ranges[s].first) - 1; pos < last; ++pos)
            if (!excluded.contains(ranking.docs[pos].doc_id)) pool.push_back(pos);

        const auto need = static_cast<std::size_t>(wanted[s] + carry);
        std::vector<std::size_t> picked;
        if (s == 0 && need >= pool.size()) {
            picked = pool;
        } else {
            for (auto i : sample_without_replacement(rng, pool.size(), need)) picked.push_back(pool[i]);
            std::sort(picked.begin(), picked.end());
        }
        carry = static_cast<int>(need - picked.size());
        for (auto pos : picked) out.push_back({ranking.docs[pos].doc_id, static_cast<int>(pos) + 1, strata[s]});
    }
    if (carry > 0)
        throw SamplingShortfall("query " + ranking.query_id + ": easy range [" + std::to_string(config.easy.first) + ", " +
                        std::to_string(config.easy.last) + "] is short by " + std::to_string(carry) +
                        " negatives (ranking depth " + std::to_string(ranking.docs.size()) + ")");
    return out;
}

ConsensusChoice consensus_select(const std::vector<ParsedOutput>& generations) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& g : generations)
        if (g.formatted && g.score) {
            sum += *g.score;
            ++n;
        }
    if (n == 0) throw DataError("consensus needs at least one formatted generation");
    ConsensusChoice c;
    c.consensus = sum / static_cast<double>(n);
    double best = 0.0;
    bool found = false;
    for (std::size_t i = 0; i < generations.size(); ++i) {
        const auto& g = generations[i];
        if (!g.formatted || !g.score) continue;
        const double d = std::abs(*g.score - c.consensus);
        if (!found || d < best) {
            best = d;
            c.index = i;
            found = true;
        }
    }
    return c;
}

std::size_t filter_by_length(std::vector<SftRecord>& records, std::size_t max_tokens, const Tokenizer& tokenizer) {
    const auto before = records.size();
    std::erase_if(records, [&](const SftRecord& r) { return tokenizer.count(r.trajectory) > max_tokens; });
    return before - records.size();
}

void write_synthesis_report(std::ostream& out, const SynthesisReport& report) {
    out << "queries_in\t" << report.queries_in << '\n'
        << "queries_emitted\t" << report.queries_emitted << '\n'
        << "pairs_requested\t" << report.pairs_requested << '\n'
        << "pairs_emitted\t" << report.pairs_emitted << '\n'
        << "unformatted_generations\t" << report.unformatted_generations << '\n';
    for (auto s : {Stratum::positive, Stratum::hard, Stratum::medium, Stratum::easy, Stratum::synthetic}) {
        auto it = report.pairs_by_stratum.find(s);
        out << "stratum." << to_string(s) << '\t' << (it == report.pairs_by_stratum.end() ? 0 : it->second) << '\n';
    }
    for (auto r : {DropReason::backend_failure, DropReason::unformatted, DropReason::too_long,
                   DropReason::sampling_shortfall}) {
        auto p = report.dropped_pairs.find(r);
        auto q = report.dropped_queries.find(r);
        out << "dropped_pairs." << to_string(r) << '\t' << (p == report.dropped_pairs.end() ? 0 : p->second) << '\n'
            << "dropped_queries." << to_string(r) << '\t' << (q == report.dropped_queries.end() ? 0 : q->second)
            << '\n';
    }
    for (const auto& f : report.failures) out << "failure\t" << f << '\n';
}

namespace {

struct Slot {
    std::string query_id;
    std::string doc_id;
    Stratum stratum;
    int retrieval_rank;
    std::string text;
};

struct Outcome {
    std::optional<SftRecord> record;
    std::optional<DropReason> dropped;
    std::size_t unformatted = 0;
    std::string error;
};

Outcome judge(const Slot& slot, const std::string& prompt, const std::string& profile, ScorerBackend& teacher,
              const SynthesisConfig& config, const PromptTemplate& tmpl, const Tokenizer& tokenizer) {
    Outcome out;
    ScoreRequest req{prompt, tmpl.scheme(), config.consensus_samples, config.temperature, slot.query_id, slot.doc_id, 0};
    ScoreResponse resp;
    for (int attempt = 0;; ++attempt) {
        req.attempt = static_cast<std::uint32_t>(attempt);
        try {
            resp = teacher.generate(req);
            break;
        } catch (const BackendError& e) {
            if (e.retryable() && attempt + 1 < config.teacher_attempts) continue;
            out.dropped = DropReason::backend_failure;
            out.error = e.what();
            return out;
        }
    }

    std::vector<ParsedOutput> parsed;
    for (const auto& gen : resp.generations) {
        parsed.push_back(parse_output(gen.text, tmpl.scheme()));
        out.unformatted += parsed.back().formatted ? 0 : 1;
    }
    if (out.unformatted == parsed.size()) {
        out.dropped = DropReason::unformatted;
        return out;
    }
    const auto choice = consensus_select(parsed);
    SftRecord rec{slot.query_id, slot.doc_id, profile, slot.stratum, slot.retrieval_rank, prompt,
                  parsed[choice.index].raw_text, *parsed[choice.index].score, choice.consensus};
    std::vector<SftRecord> one{std::move(rec)};
    if (filter_by_length(one, config.max_output_tokens, tokenizer) > 0) {
        out.dropped = DropReason::too_long;
        return out;
    }
    out.record = std::move(one.front());
    return out;
}

}  // namespace

SftDataset build_sft_dataset(const std::vector<SynthesisQuery>& queries,
                             const std::map<std::string, RetrievalRanking>& rankings,
                             const std::map<std::string, std::string>& corpus, ScorerBackend& teacher,
                             const SynthesisConfig& config, const PromptTemplate& tmpl, const Tokenizer& tokenizer) {
    config.validate();
    SftDataset out;
    auto& report = out.report;
    report.queries_in = queries.size();

    auto text_of = [&](const QueryGroup& g, const std::string& doc_id) -> const std::string& {
        for (const auto& d : g.candidates)
            if (d.doc_id == doc_id) return d.text;
        auto it = corpus.find(doc_id);
        if (it == corpus.end()) throw DataError("query " + g.query_id + ": no text for document " + doc_id);
        return it->second;
    };

    for (const auto& q : queries) {
        const auto& g = q.group;
        const auto profile = source_profile(q.profile);
        const auto counts = config.counts_for(profile);

        std::vector<std::string> positives, synthetic;
        for (const auto& d : g.candidates) (g.is_positive(d.doc_id) ? positives : synthetic).push_back(d.doc_id);
        if (positives.size() != 1)
            throw DataError("query " + g.query_id + " needs exactly one positive, found " +
                            std::to_string(positives.size()));
        if (static_cast<int>(synthetic.size()) != counts.synthetic)
            throw DataError("query " + g.query_id + ": profile " + profile.name + " expects " +
                            std::to_string(counts.synthetic) + " synthetic negatives, found " +
                            std::to_string(synthetic.size()));
        auto rit = rankings.find(g.query_id);
        if (rit == rankings.end()) throw DataError("no retrieval ranking for query " + g.query_id);

        std::set<std::string> excluded(positives.begin(), positives.end());
        excluded.insert(synthetic.begin(), synthetic.end());

        std::vector<Slot> slots;
        int positive_rank = 0;
        for (std::size_t i = 0; i < rit->second.docs.size(); ++i)
            if (rit->second.docs[i].doc_id == positives.front()) positive_rank = static_cast<int>(i) + 1;
        slots.push_back({g.query_id, positives.front(), Stratum::positive, positive_rank, text_of(g, positives.front())});
        for (const auto& id : synthetic) slots.push_back({g.query_id, id, Stratum::synthetic, 0, text_of(g, id)});

        try {
            for (auto& neg : sample_negatives(rit->second, excluded, counts, config, config.seed))
                slots.push_back({g.query_id, neg.doc_id, neg.stratum, neg.retrieval_rank, text_of(g, neg.doc_id)});
        } catch (const SamplingShortfall& e) {
            ++report.dropped_queries[DropReason::sampling_shortfall];
            report.failures.push_back(g.query_id + ": " + e.what());
            continue;
        }

        report.pairs_requested += slots.size();
        const auto& instruction = g.instruction.empty() ? instruction_for(profile.name) : g.instruction;
        std::vector<Outcome> outcomes(slots.size());
        parallel_for(slots.size(), config.parallelism, [&](std::size_t i) {
            try {
                const auto prompt = render_prompt(tmpl, instruction, g.query_text, slots[i].text, tokenizer).text;
                outcomes[i] = judge(slots[i], prompt, profile.name, teacher, config, tmpl, tokenizer);
            } catch (const std::exception& e) {
                outcomes[i].dropped = DropReason::backend_failure;
                outcomes[i].error = e.what();
            }
        });

        std::optional<DropReason> query_drop;
        for (std::size_t i = 0; i < slots.size(); ++i) {
            report.unformatted_generations += outcomes[i].unformatted;
            if (outcomes[i].dropped) {
                ++report.dropped_pairs[*outcomes[i].dropped];
                if (!query_drop) query_drop = outcomes[i].dropped;
                if (!outcomes[i].error.empty())
                    report.failures.push_back(g.query_id + "/" + slots[i].doc_id + ": " + outcomes[i].error);
            }
        }
        if (query_drop) {
            ++report.dropped_queries[*query_drop];
            continue;
        }
        ++report.queries_emitted;
        for (auto& o : outcomes) {
            ++report.pairs_by_stratum[o.record->stratum];
            ++report.pairs_emitted;
            out.records.push_back(std::move(*o.record));
        }
    }
    return out;
}

void write_sft_records(std::ostream& out, const std::vector<SftRecord>& records) {
    for (const auto& r : records) {
        json j = {{"query_id", r.query_id},
                  {"doc_id", r.doc_id},
                  {"source_profile", r.profile},
                  {"stratum", std::string(to_string(r.stratum))},
                  {"retrieval_rank", r.retrieval_rank},
                  {"prompt", r.prompt},
                  {"trajectory", r.trajectory},
                  {"score", r.selected_score},
                  {"consensus_score", r.consensus_score}};
        out << j.dump() << '\n';
    }
}

void write_sft_records(const std::filesystem::path& path, const std::vector<SftRecord>& records) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    write_sft_records(out, records);
}

}  // namespace pwrank
