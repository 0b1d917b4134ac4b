// Shared builders for tests.
#pragma once

#include <random>
#include <string>

#include "oracles.hpp"
#include "pwrank/rewards.hpp"

namespace fixtures {

inline pwrank::ParsedOutput scored(int s) {
    pwrank::ParsedOutput p;
    p.formatted = true;
    p.score = s;
    p.answer_token_prob = 1.0;
    return p;
}

inline pwrank::ParsedOutput unformatted() { return {}; }

inline pwrank::RolloutMatrix to_matrix(const oracle::Instance& in) {
    pwrank::RolloutMatrix m{"q", {}};
    for (std::size_t i = 0; i < in.cells.size(); ++i) {
        pwrank::DocRollouts d{"d" + std::to_string(i), in.positive[i], in.reference[i], {}};
        for (const auto& c : in.cells[i]) d.rollouts.push_back(c ? scored(*c) : unformatted());
        m.docs.push_back(std::move(d));
    }
    return m;
}

/// Random instance with N <= max_n docs, G <= max_g rollouts, at least one
/// positive, small score range so ties are common.
inline oracle::Instance random_instance(std::mt19937_64& rng, int max_n, int max_g, double malformed) {
    std::uniform_int_distribution<int> n_dist(1, max_n), g_dist(1, max_g), score(0, 10), ref(0, 10);
    std::uniform_real_distribution<double> u(0, 1);
    oracle::Instance in;
    const int n = n_dist(rng), g = g_dist(rng);
    for (int i = 0; i < n; ++i) {
        in.positive.push_back(u(rng) < 0.4);
        in.reference.push_back(ref(rng));
        std::vector<oracle::Cell> row;
        for (int j = 0; j < g; ++j) row.push_back(u(rng) < malformed ? oracle::Cell{} : oracle::Cell{score(rng)});
        in.cells.push_back(std::move(row));
    }
    if (std::find(in.positive.begin(), in.positive.end(), true) == in.positive.end())
        in.positive[std::uniform_int_distribution<int>(0, n - 1)(rng)] = true;
    return in;
}

/// The worked three-document scenario: A positive [9, 7], B [8, 3] with
/// t = 3, C [2, 2] with t = 4.
inline oracle::Instance worked_scenario() {
    oracle::Instance in;
    in.positive = {true, false, false};
    in.reference = {0.0, 3.0, 4.0};
    in.cells = {{9, 7}, {8, 3}, {2, 2}};
    return in;
}

}  // namespace fixtures
