#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "qsdlab/chain.hpp"

// Shared fixtures: small closed-form chains and a generator for random
// finite irreducible substochastic chains.

namespace qsdlab::testing {

// S = {0}, p(0,0) = s, p(0,Delta) = 1 - s.
inline ChainSpec one_state(double s = 0.5) {
    return make_explicit_discrete({0}, {{0, Row{{{0, s}}, 1.0 - s}}}, "one-state");
}

// S = {0,1}: p(0,1) = 1, p(1,0) = 1/2, p(1,Delta) = 1/2.
inline ChainSpec two_state_ring() {
    return make_explicit_discrete(
        {0, 1}, {{0, Row{{{1, 1.0}}, 0.0}}, {1, Row{{{0, 0.5}}, 0.5}}}, "two-state-ring");
}

// Random irreducible chain on n states: a random cycle guarantees strong
// connectivity, extra random edges plus absorption mass on a random subset.
inline ChainSpec random_finite_chain(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    std::vector<StateId> states(n);
    for (int i = 0; i < n; ++i) states[i] = i;
    std::vector<StateId> perm = states;
    std::shuffle(perm.begin(), perm.end(), rng);

    std::unordered_map<StateId, Row> rows;
    std::vector<std::vector<double>> w(n, std::vector<double>(n + 1, 0.0));
    for (int i = 0; i < n; ++i) {
        int j = static_cast<int>(perm[(std::find(perm.begin(), perm.end(), i) - perm.begin() + 1) %
                                      n]);
        w[i][j] += unif(rng);  // cycle edge
        int extra = static_cast<int>(rng() % 3);
        for (int k = 0; k < extra; ++k) w[i][rng() % n] += unif(rng);
        if (rng() % 3 == 0) w[i][n] += unif(rng);  // absorption
    }
    // Guarantee at least one absorbing exit somewhere.
    w[static_cast<int>(rng() % n)][n] += unif(rng);
    for (int i = 0; i < n; ++i) {
        double total = 0.0;
        for (double v : w[i]) total += v;
        Row r;
        for (int j = 0; j < n; ++j)
            if (w[i][j] > 0.0) r.to_states.push_back({j, w[i][j] / total});
        r.to_absorbing = w[i][n] / total;
        // push rounding residue into the largest interior entry
        double sum = r.to_absorbing;
        for (auto& e : r.to_states) sum += e.value;
        auto big = std::max_element(r.to_states.begin(), r.to_states.end(),
                                    [](const RowEntry& a, const RowEntry& b) {
                                        return a.value < b.value;
                                    });
        big->value += 1.0 - sum;
        rows[i] = r;
    }
    return make_explicit_discrete(states, rows, "random-finite");
}

}  // namespace qsdlab::testing
