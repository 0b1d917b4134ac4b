// Brute-force reference implementations used by the unit and acceptance
// tests. Written directly from the definitions, without sharing code with the
// library.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace oracle {

inline double dcg(const std::vector<int>& grades, int k) {
    double s = 0.0;
    for (int i = 0; i < k && i < static_cast<int>(grades.size()); ++i)
        s += (std::pow(2.0, grades[i]) - 1.0) / std::log2(i + 2.0);
    return s;
}

/// IDCG as the best DCG over every permutation of the judged grades.
inline double ndcg(const std::vector<int>& ranked, std::vector<int> judged, int k) {
    std::sort(judged.begin(), judged.end());
    double best = 0.0;
    do {
        best = std::max(best, dcg(judged, k));
    } while (std::next_permutation(judged.begin(), judged.end()));
    return best == 0.0 ? 0.0 : dcg(ranked, k) / best;
}

/// One rollout: score when formatted.
using Cell = std::optional<int>;

struct Instance {
    std::vector<bool> positive;            // [doc]
    std::vector<double> reference;         // [doc]
    std::vector<std::vector<Cell>> cells;  // [doc][rollout]
};

/// Rank of a score = 1 + number of formatted rollouts scoring strictly higher.
inline int rank_of(const Instance& in, int score) {
    int higher = 0;
    for (const auto& row : in.cells)
        for (const auto& c : row)
            if (c && *c > score) ++higher;
    return higher + 1;
}

enum class Kind { rr, ndcg };

/// Listwise reward straight from the case definition. Returns -1 everywhere
/// when nothing is formatted.
inline std::vector<std::vector<double>> listwise(const Instance& in, Kind kind) {
    const auto n = in.cells.size();
    const auto g = in.cells.front().size();
    std::vector<std::vector<double>> out(n, std::vector<double>(g, -1.0));

    int formatted = 0, positives = 0;
    for (std::size_t i = 0; i < n; ++i) {
        positives += in.positive[i] ? 1 : 0;
        for (const auto& c : in.cells[i]) formatted += c ? 1 : 0;
    }
    if (formatted == 0) return out;

    int pmin = 1 << 30, pmax = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (in.positive[i])
            for (const auto& c : in.cells[i])
                if (c) {
                    pmin = std::min(pmin, rank_of(in, *c));
                    pmax = std::max(pmax, rank_of(in, *c));
                }
    if (pmax == 0) pmin = pmax = formatted + 1;  // no formatted positive rollout

    auto f = [&](int r) { return kind == Kind::rr ? 1.0 / r : 1.0 / std::log2(r + 1.0); };
    double idcg = 0.0;
    for (int k = 1; k <= positives * static_cast<int>(g); ++k) idcg += 1.0 / std::log2(k + 1.0);
    const double norm = kind == Kind::rr ? 1.0 : idcg;

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < g; ++j) {
            const auto& c = in.cells[i][j];
            if (!c) continue;
            const int r = rank_of(in, *c);
            if (in.positive[i])
                out[i][j] = f(r) / norm;
            else if (r <= pmax)
                out[i][j] = -f(pmin) / norm;
            else
                out[i][j] = 1.0 - (*c - in.reference[i]) * (*c - in.reference[i]) / 100.0;
        }
    return out;
}

}  // namespace oracle
