#include "qsdlab/chain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qsdlab {

namespace {

// Tarjan-free strong connectivity: forward and backward reachability from
// state 0 over the window digraph.
bool strongly_connected(const FiniteChain& fc) {
    const std::int64_t n = fc.size();
    if (n <= 1) return true;
    std::vector<std::vector<std::int64_t>> fwd(n), bwd(n);
    for (std::int64_t i = 0; i < n; ++i) {
        for (const auto& [j, v] : fc.rows[i]) {
            if (v > 0.0) {
                fwd[i].push_back(j);
                bwd[j].push_back(i);
            }
        }
    }
    auto reach_all = [n](const std::vector<std::vector<std::int64_t>>& adj) {
        std::vector<char> seen(n, 0);
        std::vector<std::int64_t> stack{0};
        seen[0] = 1;
        std::int64_t cnt = 1;
        while (!stack.empty()) {
            auto u = stack.back();
            stack.pop_back();
            for (auto v : adj[u]) {
                if (!seen[v]) {
                    seen[v] = 1;
                    ++cnt;
                    stack.push_back(v);
                }
            }
        }
        return cnt == n;
    };
    return reach_all(fwd) && reach_all(bwd);
}

// gcd of directed cycle lengths through state 0, via BFS levels; 0 when the
// window has no cycle through 0.
int window_period(const FiniteChain& fc) {
    const std::int64_t n = fc.size();
    std::vector<std::int64_t> level(n, -1);
    level[0] = 0;
    std::vector<std::int64_t> queue{0};
    std::int64_t g = 0;
    for (std::size_t h = 0; h < queue.size(); ++h) {
        auto u = queue[h];
        for (const auto& [v, p] : fc.rows[u]) {
            if (p <= 0.0) continue;
            if (level[v] < 0) {
                level[v] = level[u] + 1;
                queue.push_back(v);
            } else {
                g = std::gcd(g, std::abs(level[u] + 1 - level[v]));
            }
        }
    }
    return static_cast<int>(g);
}

FiniteChain truncate_spec(const ChainSpec& spec, std::int64_t n) {
    FiniteChain fc;
    fc.kind = spec.kind;
    fc.states.reserve(n);
    for (std::int64_t i = 0; i < n; ++i) {
        StateId s = spec.state_at(i);
        fc.index.emplace(s, i);
        fc.states.push_back(s);
    }
    fc.rows.resize(n);
    fc.absorb.resize(n, 0.0);
    if (spec.kind == TimeKind::Continuous) fc.total_rate.resize(n, 0.0);
    fc.log_scale.resize(n, 0.0);
    if (spec.log_scale_hint)
        for (std::int64_t i = 0; i < n; ++i) fc.log_scale[i] = spec.log_scale_hint(fc.states[i]);
    fc.exact = spec.finite_size && n >= *spec.finite_size;
    for (std::int64_t i = 0; i < n; ++i) {
        Row r = spec.row(fc.states[i]);
        double out = r.to_absorbing;
        double total = r.to_absorbing;
        for (const auto& e : r.to_states) {
            total += e.value;
            auto it = fc.index.find(e.to);
            if (it != fc.index.end()) {
                fc.rows[i].emplace_back(it->second, e.value);
            } else {
                out += e.value;  // exits the window: redirect to Delta
            }
        }
        fc.absorb[i] = out;
        if (spec.kind == TimeKind::Continuous) fc.total_rate[i] = total;
    }
    return fc;
}

}  // namespace

ValidatedChain validate(const ChainSpec& spec, std::int64_t check_window) {
    if (!spec.row || !spec.state_at) throw ChainError("chain spec is missing row or enumeration");
    std::int64_t n = check_window;
    if (spec.finite_size) n = std::min(n, *spec.finite_size);
    if (n < 1) throw ChainError("validation window must be nonempty");

    FiniteChain fc = truncate_spec(spec, n);

    bool any_absorption = false;
    for (std::int64_t i = 0; i < n; ++i) {
        const StateId s = fc.states[i];
        Row r = spec.row(s);
        double sum = r.to_absorbing;
        if (r.to_absorbing < 0.0)
            throw RowSumError("negative absorption entry at state " + std::to_string(s));
        for (const auto& e : r.to_states) {
            if (e.value < 0.0)
                throw RowSumError("negative entry at state " + std::to_string(s));
            if (e.to == kDelta)
                throw RowSumError("Delta must be encoded via to_absorbing, state " +
                                  std::to_string(s));
            sum += e.value;
        }
        if (spec.kind == TimeKind::Discrete) {
            if (std::abs(sum - 1.0) > kRowSumTol)
                throw RowSumError("row of state " + std::to_string(s) + " sums to " +
                                  std::to_string(sum));
        } else {
            if (!(sum > 0.0) || !std::isfinite(sum))
                throw RowSumError("total jump rate at state " + std::to_string(s) +
                                  " must be in (0, inf)");
        }
        if (r.to_absorbing > 0.0) any_absorption = true;
    }
    if (!any_absorption)
        throw NoAbsorptionError("no state in the window has positive absorption");

    if (spec.irreducible_on_S && !strongly_connected(fc))
        throw ReducibleError("S-restriction is not strongly connected on the window");

    int period = spec.kind == TimeKind::Discrete ? window_period(fc) : 0;
    return ValidatedChain(std::make_shared<ChainSpec>(spec), n, period);
}

FiniteChain truncate(const ValidatedChain& chain, Window window) {
    std::int64_t n = window.n;
    if (chain.is_finite()) n = std::min(n, chain.finite_size());
    if (n < 1) throw EmptyWindowError("window must contain at least one state");
    return truncate_spec(chain.spec(), n);
}

ChainSpec make_explicit_discrete(std::vector<StateId> states,
                                 std::unordered_map<StateId, Row> rows, std::string name) {
    ChainSpec spec;
    spec.kind = TimeKind::Discrete;
    spec.name = std::move(name);
    spec.finite_size = static_cast<std::int64_t>(states.size());
    auto shared_states = std::make_shared<std::vector<StateId>>(std::move(states));
    auto shared_rows = std::make_shared<std::unordered_map<StateId, Row>>(std::move(rows));
    spec.state_at = [shared_states](std::int64_t i) { return shared_states->at(i); };
    spec.row = [shared_rows](StateId x) {
        auto it = shared_rows->find(x);
        if (it == shared_rows->end()) throw ChainError("no row for state " + std::to_string(x));
        return it->second;
    };
    return spec;
}

ChainSpec make_explicit_continuous(std::vector<StateId> states,
                                   std::unordered_map<StateId, Row> rows, std::string name) {
    ChainSpec spec = make_explicit_discrete(std::move(states), std::move(rows), std::move(name));
    spec.kind = TimeKind::Continuous;
    return spec;
}

}  // namespace qsdlab
