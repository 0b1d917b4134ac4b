#include "pwrank/dataset_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pwrank/errors.hpp"

namespace pwrank {

using nlohmann::json;

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return in;
}

bool is_blank(const std::string& line) {
    return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

std::string at_line(std::size_t line_no) { return "line " + std::to_string(line_no) + ": "; }

const json& required(const json& obj, const char* key, std::size_t line_no) {
    auto it = obj.find(key);
    if (it == obj.end()) throw DataError(at_line(line_no) + "missing field '" + key + "'");
    return *it;
}

std::string required_string(const json& obj, const char* key, std::size_t line_no) {
    const json& v = required(obj, key, line_no);
    if (!v.is_string()) throw DataError(at_line(line_no) + "field '" + key + "' must be a string");
    return v.get<std::string>();
}

QueryGroup group_from_json(const json& rec, std::size_t line_no) {
    if (!rec.is_object()) throw DataError(at_line(line_no) + "record is not an object");
    QueryGroup g;
    g.query_id = required_string(rec, "query_id", line_no);
    g.query_text = required_string(rec, "query", line_no);
    if (auto it = rec.find("instruction"); it != rec.end()) {
        if (!it->is_string()) throw DataError(at_line(line_no) + "field 'instruction' must be a string");
        g.instruction = it->get<std::string>();
    }
    const json& cands = required(rec, "candidates", line_no);
    if (!cands.is_array()) throw DataError(at_line(line_no) + "field 'candidates' must be an array");
    for (const auto& c : cands) {
        if (!c.is_object()) throw DataError(at_line(line_no) + "candidate is not an object");
        Document d;
        d.doc_id = required_string(c, "doc_id", line_no);
        if (auto it = c.find("text"); it != c.end()) {
            if (!it->is_string()) throw DataError(at_line(line_no) + "candidate text must be a string");
            d.text = it->get<std::string>();
        }
        if (auto it = c.find("first_stage_score"); it != c.end() && !it->is_null()) {
            if (!it->is_number())
                throw DataError(at_line(line_no) + "first_stage_score must be a number");
            d.first_stage_score = it->get<double>();
        }
        g.candidates.push_back(std::move(d));
    }
    if (auto it = rec.find("labels"); it != rec.end() && !it->is_null()) {
        if (!it->is_object()) throw DataError(at_line(line_no) + "field 'labels' must be an object");
        for (const auto& [doc_id, grade] : it->items()) {
            if (!grade.is_number_integer())
                throw DataError(at_line(line_no) + "label for " + doc_id + " must be an integer");
            g.labels[doc_id] = grade.get<int>();
        }
    }
    try {
        validate(g);
    } catch (const DataError& e) {
        throw DataError(at_line(line_no) + e.what());
    }
    return g;
}

json group_to_json(const QueryGroup& g) {
    json cands = json::array();
    for (const auto& d : g.candidates) {
        json c = {{"doc_id", d.doc_id}, {"text", d.text}};
        if (d.first_stage_score) c["first_stage_score"] = *d.first_stage_score;
        cands.push_back(std::move(c));
    }
    json labels = json::object();
    for (const auto& [doc_id, grade] : g.labels) labels[doc_id] = grade;
    return {{"query_id", g.query_id},
            {"query", g.query_text},
            {"instruction", g.instruction},
            {"candidates", std::move(cands)},
            {"labels", std::move(labels)}};
}

}  // namespace

std::vector<QueryGroup> parse_query_groups(std::istream& in) {
    std::vector<QueryGroup> groups;
    std::set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) continue;
        json rec = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (rec.is_discarded()) throw DataError(at_line(line_no) + "malformed JSON");
        QueryGroup g = group_from_json(rec, line_no);
        if (!ids.insert(g.query_id).second)
            throw DataError(at_line(line_no) + "duplicate query_id " + g.query_id);
        groups.push_back(std::move(g));
    }
    return groups;
}

std::vector<QueryGroup> load_query_groups(const std::filesystem::path& path) {
    auto in = open_input(path);
    try {
        return parse_query_groups(in);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_query_groups(const std::vector<QueryGroup>& groups, std::ostream& out) {
    for (const auto& g : groups) out << group_to_json(g).dump() << '\n';
}

RelevanceJudgments parse_qrels(std::istream& in) {
    RelevanceJudgments qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) continue;
        std::istringstream fields(line);
        std::string qid, iter, docid, grade_text, extra;
        if (!(fields >> qid >> iter >> docid >> grade_text) || (fields >> extra))
            throw DataError(at_line(line_no) + "expected 4 columns 'qid iter docid grade'");
        std::size_t consumed = 0;
        int grade = 0;
        try {
            grade = std::stoi(grade_text, &consumed);
        } catch (const std::exception&) {
            consumed = 0;
        }
        if (consumed != grade_text.size() || consumed == 0)
            throw DataError(at_line(line_no) + "non-integer grade '" + grade_text + "'");
        // Negative grades (e.g. -1 for spam in some TREC tracks) count as non-relevant.
        qrels.set(qid, docid, std::max(grade, 0));
    }
    return qrels;
}

RelevanceJudgments load_qrels(const std::filesystem::path& path) {
    auto in = open_input(path);
    try {
        return parse_qrels(in);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

RelevanceJudgments judgments_from_groups(const std::vector<QueryGroup>& groups) {
    RelevanceJudgments qrels;
    for (const auto& g : groups)
        for (const auto& d : g.candidates) qrels.set(g.query_id, d.doc_id, g.grade(d.doc_id));
    return qrels;
}

void validate_run(const std::vector<RunEntry>& entries) {
    for (const auto& [qid, list] : group_run(entries)) {
        for (std::size_t i = 0; i < list.size(); ++i) {
            const auto& e = list[i];
            if (e.rank != static_cast<int>(i) + 1)
                throw DataError("run for query " + qid + ": rank gap at rank " + std::to_string(e.rank) +
                                " (expected " + std::to_string(i + 1) + ")");
            if (!std::isfinite(e.score))
                throw DataError("run for query " + qid + ": non-finite score for " + e.doc_id);
            if (i > 0 && e.score > list[i - 1].score)
                throw DataError("run for query " + qid + ": score increases at rank " +
                                std::to_string(e.rank));
            if (e.query_id.empty() || e.doc_id.empty() || e.run_tag.empty())
                throw DataError("run for query " + qid + ": empty field at rank " + std::to_string(e.rank));
        }
    }
}

std::string format_run_line(const RunEntry& e) {
    char score[64];
    std::snprintf(score, sizeof score, "%.6f", e.score);
    return e.query_id + " Q0 " + e.doc_id + " " + std::to_string(e.rank) + " " + score + " " + e.run_tag;
}

void write_run(const std::vector<RunEntry>& entries, std::ostream& out) {
    validate_run(entries);
    for (const auto& e : entries) out << format_run_line(e) << '\n';
}

void write_run(const std::vector<RunEntry>& entries, const std::filesystem::path& path) {
    validate_run(entries);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& e : entries) out << format_run_line(e) << '\n';
}

std::vector<RunEntry> parse_run(std::istream& in) {
    std::vector<RunEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) continue;
        std::istringstream fields(line);
        RunEntry e;
        std::string q0, rank_text, score_text, extra;
        if (!(fields >> e.query_id >> q0 >> e.doc_id >> rank_text >> score_text >> e.run_tag) ||
            (fields >> extra))
            throw DataError(at_line(line_no) + "expected 6 columns 'qid Q0 docid rank score tag'");
        try {
            std::size_t used = 0;
            e.rank = std::stoi(rank_text, &used);
            if (used != rank_text.size()) throw std::invalid_argument("rank");
            e.score = std::stod(score_text, &used);
            if (used != score_text.size()) throw std::invalid_argument("score");
        } catch (const std::exception&) {
            throw DataError(at_line(line_no) + "bad rank or score");
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

std::vector<RunEntry> load_run(const std::filesystem::path& path) {
    auto in = open_input(path);
    try {
        return parse_run(in);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::map<std::string, std::vector<RunEntry>> group_run(const std::vector<RunEntry>& entries) {
    std::map<std::string, std::vector<RunEntry>> out;
    for (const auto& e : entries) out[e.query_id].push_back(e);
    for (auto& [_, list] : out)
        std::stable_sort(list.begin(), list.end(),
                         [](const RunEntry& a, const RunEntry& b) { return a.rank < b.rank; });
    return out;
}

std::map<std::string, std::string> load_corpus(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::map<std::string, std::string> corpus;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object())
            throw DataError(path.string() + ": " + at_line(line_no) + "malformed JSON");
        corpus[required_string(rec, "doc_id", line_no)] = required_string(rec, "text", line_no);
    }
    return corpus;
}

}  // namespace pwrank
