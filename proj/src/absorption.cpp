#include "qsdlab/absorption.hpp"

#include <algorithm>
#include <cmath>

namespace qsdlab {

WindowSchedule WindowSchedule::up_to(std::int64_t max_size) {
    WindowSchedule s;
    s.sizes.clear();
    for (std::int64_t w = 50; w <= max_size; w *= 2) s.sizes.push_back(w);
    if (s.sizes.empty() || s.sizes.back() < max_size) s.sizes.push_back(max_size);
    return s;
}

WindowSchedule WindowSchedule::single(std::int64_t size) {
    WindowSchedule s;
    s.sizes = {size};
    return s;
}

std::string to_string(Regime r) {
    switch (r) {
        case Regime::FiniteMGF: return "finite";
        case Regime::InfiniteMGF: return "infinite";
        default: return "undetermined";
    }
}

double MgfField::at(StateId s) const {
    for (std::size_t i = 0; i < states.size(); ++i)
        if (states[i] == s) return values[static_cast<Eigen::Index>(i)];
    throw std::out_of_range("state not in MGF window");
}

TabooSolver::TabooSolver(const FiniteChain& fc, double lambda, std::optional<std::int64_t> taboo)
    : fc_(fc),
      elam_(std::exp(lambda)),
      taboo_(taboo),
      solver_(window_matrix(fc, taboo), std::exp(lambda)) {}

std::optional<Vec> TabooSolver::absorb_mgf() const {
    const auto n = fc_.size();
    Vec rhs(n);
    for (std::int64_t i = 0; i < n; ++i) rhs[i] = elam_ * fc_.absorb[i];
    return solver_.solve(rhs);
}

std::optional<Vec> TabooSolver::hit_mgf() const {
    if (!taboo_) return std::nullopt;
    const auto n = fc_.size();
    Vec rhs = Vec::Zero(n);
    for (std::int64_t i = 0; i < n; ++i)
        for (const auto& [j, v] : fc_.rows[i])
            if (j == *taboo_) rhs[i] += elam_ * v;
    return solver_.solve(rhs);
}

std::optional<Vec> TabooSolver::time_weighted_hit() const {
    auto g = hit_mgf();
    if (!g) return std::nullopt;
    // u = e^l (B(u+g) + p(.,y))  =>  (I - e^l B) u = g
    return solver_.solve(*g);
}

namespace {

std::vector<std::int64_t> clamp_sizes(const ValidatedChain& chain, const WindowSchedule& sched) {
    std::vector<std::int64_t> sizes;
    for (auto w : sched.sizes) {
        if (chain.is_finite() && w >= chain.finite_size()) {
            sizes.push_back(chain.finite_size());
            break;
        }
        sizes.push_back(w);
    }
    if (sizes.empty()) sizes.push_back(chain.is_finite() ? chain.finite_size() : 50);
    return sizes;
}

struct ScheduleProbe {
    bool converged = false;
    bool diverged = false;
    std::int64_t window = 0;
    std::string note;
};

// What a window solve reports back to the schedule driver.
struct WindowProbe {
    SolveStatus status = SolveStatus::Ok;
    std::vector<double> values;

    static WindowProbe failed(SolveStatus s) { return {s, {}}; }
    static WindowProbe of(std::vector<double> v) { return {SolveStatus::Ok, std::move(v)}; }
};

// Runs `solve_window` over the schedule, tracking the probe values it
// returns.  Window values of these functionals increase monotonically, so
// agreement certifies convergence and sustained growth (or an unsolvable
// window) is divergence evidence.  A window covering all of S is exact and
// converges outright.
template <typename SolveFn>
ScheduleProbe run_schedule(const ValidatedChain& chain, const WindowSchedule& sched,
                           SolveFn&& solve_window) {
    ScheduleProbe probe;
    std::optional<std::vector<double>> prev;
    int growth_hits = 0;
    for (auto size : clamp_sizes(chain, sched)) {
        bool exact = chain.is_finite() && size >= chain.finite_size();
        WindowProbe wp = solve_window(size);
        if (wp.status == SolveStatus::Singular) {
            // e^l >= 1 / rho(P_W): the truncated functional is already
            // infinite, and window functionals only grow.
            probe.window = size;
            probe.diverged = true;
            probe.note = "window " + std::to_string(size) + " unsolvable";
            return probe;
        }
        if (wp.status == SolveStatus::Overflow) {
            // Far-state values left the floating-point range; deeper windows
            // cannot be represented, so stop with what previous windows gave.
            probe.note = "stopped at window " + std::to_string(size) + " (value overflow)";
            return probe;
        }
        probe.window = size;
        std::vector<double>* curp = &wp.values;
        std::vector<double>& cur = *curp;
        if (exact) {
            probe.converged = true;
            return probe;
        }
        double worst = 0.0;
        for (double v : cur) worst = std::max(worst, std::abs(v));
        if (worst > sched.blowup) {
            probe.diverged = true;
            probe.note = "values exceed blowup threshold";
            return probe;
        }
        if (prev) {
            double growth = 0.0;
            double rel = 0.0;
            for (std::size_t i = 0; i < cur.size(); ++i) {
                double a = (*prev)[i], b = cur[i];
                if (a != 0.0) growth = std::max(growth, b / a);
                rel = std::max(rel, std::abs(b - a) / std::max(1.0, std::abs(b)));
            }
            if (growth > sched.growth_factor) {
                if (++growth_hits >= sched.growth_times) {
                    probe.diverged = true;
                    probe.note = "sustained growth across windows";
                    return probe;
                }
            }
            if (rel <= sched.rtol) {
                probe.converged = true;
                return probe;
            }
        }
        prev = std::move(cur);
    }
    probe.note = "schedule exhausted";
    return probe;
}

}  // namespace

MgfField absorption_mgf(const ValidatedChain& chain, double lambda, const WindowSchedule& schedule,
                        const std::vector<StateId>& requested) {
    if (chain.kind() != TimeKind::Discrete)
        throw std::invalid_argument("absorption_mgf expects a discrete chain");
    std::vector<StateId> req = requested;
    if (req.empty()) {
        for (std::int64_t i = 0; i < std::min<std::int64_t>(4, schedule.sizes.front()); ++i)
            req.push_back(chain.state_at(i));
    }
    MgfField field;
    field.lambda = lambda;
    field.variant = MgfVariant::Absorption;

    auto probe = run_schedule(chain, schedule, [&](std::int64_t size) -> WindowProbe {
        FiniteChain fc = truncate(chain, Window{size});
        TabooSolver solver(fc, lambda, std::nullopt);
        auto f = solver.absorb_mgf();
        if (!f) return WindowProbe::failed(solver.last_status());
        field.states = fc.states;
        field.values = *f;
        field.window = size;
        std::vector<double> probe_vals;
        for (auto s : req)
            if (fc.contains(s)) probe_vals.push_back((*f)[fc.index_of(s)]);
        return WindowProbe::of(std::move(probe_vals));
    });
    field.converged = probe.converged;
    field.diverged = probe.diverged;
    field.note = probe.note;
    if (field.states.empty() && !field.diverged)
        throw ScheduleExhausted("no window produced an absorption MGF");
    return field;
}

StoppedMgf stopped_mgf(const ValidatedChain& chain, double lambda, StateId x0,
                       const WindowSchedule& schedule) {
    StoppedMgf out;
    auto probe = run_schedule(chain, schedule, [&](std::int64_t size) -> WindowProbe {
        FiniteChain fc = truncate(chain, Window{size});
        if (!fc.contains(x0)) return WindowProbe::of({0.0, 0.0});
        auto ix = fc.index_of(x0);
        TabooSolver solver(fc, lambda, ix);
        auto f = solver.absorb_mgf();
        auto g = solver.hit_mgf();
        if (!f || !g) return WindowProbe::failed(solver.last_status());
        out.absorb_part = (*f)[ix];
        out.return_part = (*g)[ix];
        out.window = size;
        return WindowProbe::of({out.return_part, out.absorb_part});
    });
    out.converged = probe.converged;
    out.diverged = probe.diverged;
    return out;
}

StoppedMgf hit_mgf_schedule(const ValidatedChain& chain, double lambda, StateId x, StateId y,
                            const WindowSchedule& schedule) {
    StoppedMgf out;
    auto probe = run_schedule(chain, schedule, [&](std::int64_t size) -> WindowProbe {
        FiniteChain fc = truncate(chain, Window{size});
        if (!fc.contains(x) || !fc.contains(y)) return WindowProbe::of({0.0});
        TabooSolver solver(fc, lambda, fc.index_of(y));
        auto g = solver.hit_mgf();
        if (!g) return WindowProbe::failed(solver.last_status());
        out.return_part = (*g)[fc.index_of(x)];
        out.window = size;
        return WindowProbe::of({out.return_part});
    });
    out.converged = probe.converged;
    out.diverged = probe.diverged;
    return out;
}

CriticalParameter critical_parameter(const ValidatedChain& chain, double tol,
                                     const WindowSchedule& schedule, bool classify) {
    if (chain.kind() != TimeKind::Discrete)
        throw std::invalid_argument("critical_parameter expects a discrete chain");
    CriticalParameter cp;
    std::vector<double> lams;
    for (auto size : clamp_sizes(chain, schedule)) {
        FiniteChain fc = truncate(chain, Window{size});
        SpMat p = scaled_window_matrix(fc);
        PerronResult root;
        try {
            root = perron_root(p, 1e-13, 10000, 977 + static_cast<std::uint64_t>(size));
        } catch (const PowerIterationStall&) {
            // The window Perron vector decays past the representable range;
            // stop the schedule here and extrapolate from completed windows.
            if (lams.empty()) throw;
            break;
        }
        double lam = -std::log(root.value());
        cp.window_estimates.emplace_back(size, lam);
        lams.push_back(lam);
        if (fc.exact) break;
    }
    double last = lams.back();
    if (lams.size() == 1) {
        cp.lower = last - tol;
        cp.upper = last + (chain.is_finite() ? tol : 0.0);
    } else {
        double extrap = aitken_limit(lams);
        // estimates decrease toward the limit; keep the bracket ordered even
        // if extrapolation overshoots
        cp.lower = std::min(extrap, last) - tol;
        cp.upper = last;
    }
    if (classify) cp.regime = regime_classify(chain, cp, schedule);
    return cp;
}

Regime regime_classify(const ValidatedChain& chain, const CriticalParameter& bracket,
                       const WindowSchedule& schedule) {
    // Finite S is always in the infinite regime.
    if (chain.is_finite()) return Regime::InfiniteMGF;

    // Divergence probe strictly above the bracket: the MGF must blow up
    // across the schedule there in either regime (the deepest scheduled
    // window is unsolvable just above its own estimate); failure to do so
    // means the bracket itself is suspect.
    double lam_above = bracket.upper + std::max(10.0 * bracket.width(), 1e-6 * std::max(1.0, bracket.upper));
    MgfField above = absorption_mgf(chain, lam_above, schedule);
    if (!above.diverged) return Regime::Undetermined;

    // Return-functional signature just below the bracket: in the infinite
    // regime E_x[e^{l t_x}, t_x < tD] -> 1 at the critical parameter for
    // every x; in the finite regime it stays strictly below 1.
    double lam_below = bracket.lower;
    double worst_return = 0.0;
    bool solved = false;
    for (std::int64_t i = 0; i < 3; ++i) {
        StateId x = chain.state_at(i);
        StoppedMgf sm = stopped_mgf(chain, lam_below, x, schedule);
        if (sm.diverged) continue;
        solved = true;
        worst_return = std::max(worst_return, sm.return_part);
    }
    if (!solved) return Regime::Undetermined;
    if (worst_return >= 1.0 - 1e-4) return Regime::InfiniteMGF;
    if (worst_return <= 1.0 - 1e-3) return Regime::FiniteMGF;
    return Regime::Undetermined;
}

GreenKernel green_kernel(const ValidatedChain& chain, double lambda, StateId x, Window window) {
    FiniteChain fc = truncate(chain, window);
    if (!fc.contains(x)) throw std::invalid_argument("source state outside window");
    const auto n = fc.size();
    SpMat pt = SpMat(window_matrix(fc).transpose());
    NeumannSolver solver(pt, std::exp(lambda));
    Vec rhs = Vec::Zero(n);
    rhs[fc.index_of(x)] = 1.0;
    auto g = solver.solve(rhs);
    if (!g) throw DivergentGreenError("Green row solve failed: lambda outside the finite regime");
    GreenKernel out;
    out.source = x;
    out.lambda = lambda;
    out.states = fc.states;
    out.g = *g;
    out.mass = g->sum();

    // Identity check against the absorption MGF on the same window.
    TabooSolver ts(fc, lambda, std::nullopt);
    auto f = ts.absorb_mgf();
    if (f) {
        double expect = ((*f)[fc.index_of(x)] - 1.0) / (std::exp(lambda) - 1.0);
        if (std::abs(expect - out.mass) > 1e-8 * std::max(1.0, std::abs(out.mass)))
            throw DivergentGreenError("Green mass disagrees with the absorption MGF identity");
    }
    out.k = out.g / out.mass;
    return out;
}

double c_kernel(const ValidatedChain& chain, double lambda, StateId x, StateId y, Window window) {
    FiniteChain fc = truncate(chain, window);
    if (!fc.contains(x) || !fc.contains(y)) throw std::invalid_argument("state outside window");
    TabooSolver plain(fc, lambda, std::nullopt);
    auto f = plain.absorb_mgf();
    if (!f) throw DivergentGreenError("absorption MGF diverges at lambda");
    TabooSolver taboo(fc, lambda, fc.index_of(y));
    auto hit = taboo.hit_mgf();
    if (!hit) throw DivergentGreenError("taboo hit solve diverges at lambda");
    double numer = (*hit)[fc.index_of(x)] * (*f)[fc.index_of(y)];
    return numer / ((*f)[fc.index_of(x)] - 1.0);
}

RCritical r_critical(const ValidatedChain& chain, StateId x, double tol,
                     const WindowSchedule& schedule, double r_cap) {
    RCritical rc;
    rc.tol = tol;
    auto return_value_reaches_one = [&](double r) {
        double lambda = std::log(r);
        bool reached = false;
        auto probe = run_schedule(chain, schedule, [&](std::int64_t size) -> WindowProbe {
            FiniteChain fc = truncate(chain, Window{size});
            if (!fc.contains(x)) return WindowProbe::of({0.0});
            TabooSolver solver(fc, lambda, fc.index_of(x));
            auto g = solver.hit_mgf();
            if (!g) return WindowProbe::failed(solver.last_status());
            double v = (*g)[fc.index_of(x)];
            if (v >= 1.0) reached = true;  // window values only grow
            return WindowProbe::of({v});
        });
        bool hit = reached || probe.diverged;
        rc.trace.emplace_back(r, hit);
        return hit;
    };

    double lo = 1.0, hi = 2.0;
    while (!return_value_reaches_one(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > r_cap) throw BracketError("no R below the cap reaches a unit return value");
    }
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        if (return_value_reaches_one(mid))
            hi = mid;
        else
            lo = mid;
    }
    rc.value = 0.5 * (lo + hi);
    return rc;
}

double aitken_limit(const std::vector<double>& xs) {
    if (xs.size() < 3) return xs.back();
    // Iterated Aitken on the tail of the sequence.
    std::vector<double> cur = xs;
    while (cur.size() >= 3) {
        std::vector<double> next;
        for (std::size_t i = 0; i + 2 < cur.size(); ++i) {
            double d1 = cur[i + 1] - cur[i];
            double d2 = cur[i + 2] - cur[i + 1];
            double denom = d2 - d1;
            if (std::abs(denom) < 1e-300 ||
                std::abs(denom) < 1e-12 * std::max(std::abs(d1), std::abs(d2))) {
                next.push_back(cur[i + 2]);
            } else {
                next.push_back(cur[i + 2] - d2 * d2 / denom);
            }
        }
        cur = std::move(next);
    }
    return cur.back();
}

}  // namespace qsdlab
