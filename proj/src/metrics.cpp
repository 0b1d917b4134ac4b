#include "pwrank/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include "pwrank/dataset_io.hpp"
#include "pwrank/errors.hpp"

namespace pwrank {

std::vector<std::string> RankedList::doc_ids() const {
    std::vector<std::string> ids;
    ids.reserve(docs.size());
    for (const auto& d : docs) ids.push_back(d.doc_id);
    return ids;
}

std::vector<RunEntry> RankedList::to_run(const std::string& run_tag) const {
    std::vector<RunEntry> run;
    run.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i)
        run.push_back({query_id, docs[i].doc_id, static_cast<int>(i) + 1, docs[i].score, run_tag});
    return run;
}

RankedList rank_scored(std::string query_id, std::vector<ScoredDoc> docs) {
    std::sort(docs.begin(), docs.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
    return {std::move(query_id), std::move(docs)};
}

RankedList rank_by_score(const QueryGroup& group, const std::map<std::string, double>& scores) {
    std::vector<ScoredDoc> docs;
    docs.reserve(group.candidates.size());
    for (const auto& d : group.candidates) {
        auto it = scores.find(d.doc_id);
        if (it == scores.end())
            throw DataError("query " + group.query_id + ": no score for doc_id " + d.doc_id);
        docs.push_back({d.doc_id, it->second});
    }
    return rank_scored(group.query_id, std::move(docs));
}

double dcg_at_k(std::span<const int> ranked_grades, int k) {
    double dcg = 0.0;
    auto depth = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), ranked_grades.size());
    for (std::size_t i = 0; i < depth; ++i)
        dcg += (std::exp2(ranked_grades[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    return dcg;
}

double ndcg_at_k(std::span<const int> ranked_grades, std::span<const int> all_grades, int k) {
    std::vector<int> ideal(all_grades.begin(), all_grades.end());
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = dcg_at_k(ideal, k);
    if (idcg <= 0.0) return 0.0;
    return dcg_at_k(ranked_grades, k) / idcg;
}

double mrr(std::span<const int> ranked_grades) {
    for (std::size_t i = 0; i < ranked_grades.size(); ++i)
        if (ranked_grades[i] > 0) return 1.0 / static_cast<double>(i + 1);
    return 0.0;
}

namespace {

template <class Range, class Get>
double mean_of(const Range& range, Get get) {
    if (range.empty()) return 0.0;
    double s = 0.0;
    for (const auto& x : range) s += get(x);
    return s / static_cast<double>(range.size());
}

void write_row(std::ostream& out, const char* scope, const GroupMean& m) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s\t%s\t%.6f\t%.6f\t%zu\n", scope, m.name.c_str(), m.ndcg, m.mrr,
                  m.queries);
    out << buf;
}

}  // namespace

MetricReport evaluate_run(const std::vector<RunEntry>& run, const RelevanceJudgments& qrels, int k,
                          const std::map<std::string, SubsetAssignment>& subsets) {
    if (k < 1) throw UsageError("k must be >= 1");
    MetricReport report;
    report.k = k;

    for (const auto& [qid, entries] : group_run(run)) {
        const auto* judged = qrels.query(qid);
        if (!judged) continue;
        std::vector<int> ranked;
        ranked.reserve(entries.size());
        for (const auto& e : entries) ranked.push_back(qrels.grade(qid, e.doc_id));
        auto all = qrels.grades_for(qid);
        report.per_query.push_back({qid, ndcg_at_k(ranked, all, k), mrr(ranked)});
    }
    if (report.per_query.empty()) throw DataError("run and qrels share no query ids");

    report.overall = {"all", mean_of(report.per_query, [](auto& q) { return q.ndcg; }),
                      mean_of(report.per_query, [](auto& q) { return q.mrr; }), report.per_query.size()};

    if (!subsets.empty()) {
        std::map<std::string, std::vector<const QueryMetrics*>> by_subset;
        std::map<std::string, std::string> subset_benchmark;
        for (const auto& q : report.per_query) {
            auto it = subsets.find(q.query_id);
            if (it == subsets.end()) continue;
            by_subset[it->second.subset].push_back(&q);
            subset_benchmark[it->second.subset] = it->second.benchmark;
        }
        std::map<std::string, std::vector<const GroupMean*>> by_benchmark;
        for (const auto& [name, qs] : by_subset) {
            report.subsets.push_back({name, mean_of(qs, [](auto* q) { return q->ndcg; }),
                                      mean_of(qs, [](auto* q) { return q->mrr; }), qs.size()});
        }
        for (const auto& s : report.subsets) by_benchmark[subset_benchmark[s.name]].push_back(&s);
        for (const auto& [name, ss] : by_benchmark) {
            std::size_t n = 0;
            for (auto* s : ss) n += s->queries;
            report.benchmarks.push_back({name, mean_of(ss, [](auto* s) { return s->ndcg; }),
                                         mean_of(ss, [](auto* s) { return s->mrr; }), n});
        }
        auto total = [](const std::vector<GroupMean>& v) {
            std::size_t n = 0;
            for (const auto& g : v) n += g.queries;
            return n;
        };
        report.subset_macro = {"subset_macro", mean_of(report.subsets, [](auto& s) { return s.ndcg; }),
                               mean_of(report.subsets, [](auto& s) { return s.mrr; }), total(report.subsets)};
        report.benchmark_macro = {"benchmark_macro",
                                  mean_of(report.benchmarks, [](auto& s) { return s.ndcg; }),
                                  mean_of(report.benchmarks, [](auto& s) { return s.mrr; }),
                                  total(report.benchmarks)};
    }
    return report;
}

void write_metric_report(const MetricReport& report, std::ostream& out) {
    out << "scope\tname\tndcg@" << report.k << "\tmrr\tqueries\n";
    for (const auto& q : report.per_query) write_row(out, "query", {q.query_id, q.ndcg, q.mrr, 1});
    for (const auto& s : report.subsets) write_row(out, "subset", s);
    for (const auto& b : report.benchmarks) write_row(out, "benchmark", b);
    if (!report.subsets.empty()) {
        write_row(out, "mean", report.subset_macro);
        write_row(out, "mean", report.benchmark_macro);
    }
    write_row(out, "mean", report.overall);
}

std::map<std::string, SubsetAssignment> parse_subset_map(std::istream& in) {
    std::map<std::string, SubsetAssignment> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
        std::istringstream fields(line);
        std::string qid;
        SubsetAssignment a;
        if (!(fields >> qid >> a.subset)) throw DataError("subset map line " + std::to_string(line_no) + ": expected 'query_id subset [benchmark]'");
        if (!(fields >> a.benchmark)) a.benchmark = a.subset;
        out[qid] = a;
    }
    return out;
}

}  // namespace pwrank
