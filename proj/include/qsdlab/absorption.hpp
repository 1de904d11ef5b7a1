#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qsdlab/chain.hpp"
#include "qsdlab/spectral.hpp"

// Exponential functionals of absorption and hitting times by first-step
// linear solves on truncation windows, the critical absorption parameter,
// regime classification, and the Green / normalized entrance kernels.

namespace qsdlab {

struct ScheduleExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DivergentGreenError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BracketError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Geometric window schedule; window values of absorption functionals are
// monotone in the window, so agreement between consecutive windows certifies
// convergence and sustained growth certifies divergence evidence.
struct WindowSchedule {
    std::vector<std::int64_t> sizes{50, 100, 200, 400, 800, 1600, 3200};
    double rtol = 1e-8;
    double blowup = 1e12;
    double growth_factor = 10.0;
    int growth_times = 3;

    static WindowSchedule up_to(std::int64_t max_size);
    static WindowSchedule single(std::int64_t size);
};

enum class MgfVariant {
    Absorption,
    AbsorptionBeforeReturn,
    ReturnBeforeAbsorption,
    Stopped,
    HitBeforeAbsorption,
};

struct MgfField {
    double lambda = 0.0;
    MgfVariant variant = MgfVariant::Absorption;
    std::optional<StateId> anchor;
    std::vector<StateId> states;  // largest solved window
    Vec values;
    std::int64_t window = 0;
    bool converged = false;
    bool diverged = false;  // divergence evidence (MGF = infinity), not failure
    std::string note;

    double at(StateId s) const;
};

struct StoppedMgf {
    double return_part = 0.0;  // E_x[e^{l t_x}, t_x < t_D]
    double absorb_part = 0.0;  // E_x[e^{l t_D}, t_D < t_x]
    std::int64_t window = 0;
    bool converged = false;
    bool diverged = false;
};

enum class Regime { FiniteMGF, InfiniteMGF, Undetermined };

std::string to_string(Regime r);

struct CriticalParameter {
    double lower = 0.0;
    double upper = 0.0;
    Regime regime = Regime::Undetermined;
    // (window size, lambda_cr(window)) trace; estimates are nonincreasing.
    std::vector<std::pair<std::int64_t, double>> window_estimates;

    double mid() const { return 0.5 * (lower + upper); }
    double width() const { return upper - lower; }
};

struct GreenKernel {
    StateId source = 0;
    double lambda = 0.0;
    std::vector<StateId> states;
    Vec g;        // G^l(x, .)
    double mass;  // G^l(x, 1)
    Vec k;        // normalized kernel row, sums to 1
};

// Per-window first-step solver.  With a taboo state y, the interior matrix
// has column y zeroed (paths entering y are killed), so
//   absorb_mgf(z) = E_z[e^{l tD}, tD < t_y]
//   hit_mgf(z)    = E_z[e^{l t_y}, t_y < tD]
//   time_weighted_hit(z) = E_z[e^{l t_y} t_y, t_y < tD]
// and without taboo absorb_mgf is the plain absorption MGF.  All three share
// one factorization of (I - e^l B).
class TabooSolver {
  public:
    TabooSolver(const FiniteChain& fc, double lambda, std::optional<std::int64_t> taboo);
    bool ok() const { return solver_.ok(); }
    std::optional<Vec> absorb_mgf() const;
    std::optional<Vec> hit_mgf() const;
    std::optional<Vec> time_weighted_hit() const;
    SolveStatus last_status() const { return solver_.last_status(); }

  private:
    const FiniteChain& fc_;
    double elam_;
    std::optional<std::int64_t> taboo_;
    NeumannSolver solver_;
};

// E_x[e^{l tD}] per window state, resolved over the schedule.
MgfField absorption_mgf(const ValidatedChain& chain, double lambda, const WindowSchedule& schedule,
                        const std::vector<StateId>& requested = {});

// (return part, absorb part) of the stopped functional at x0.
StoppedMgf stopped_mgf(const ValidatedChain& chain, double lambda, StateId x0,
                       const WindowSchedule& schedule);

// E_x[e^{l t_y}, t_y < tD] resolved over the schedule (value at x).
StoppedMgf hit_mgf_schedule(const ValidatedChain& chain, double lambda, StateId x, StateId y,
                            const WindowSchedule& schedule);

// Critical absorption parameter by window spectral radii:
// e^{-lambda(W)} = rho(P_W); estimates decrease in W and the bracket is
// [extrapolated - tol, smallest estimate].  Regime is filled by
// regime_classify unless classify=false.
CriticalParameter critical_parameter(const ValidatedChain& chain, double tol,
                                     const WindowSchedule& schedule, bool classify = true);

Regime regime_classify(const ValidatedChain& chain, const CriticalParameter& bracket,
                       const WindowSchedule& schedule);

GreenKernel green_kernel(const ValidatedChain& chain, double lambda, StateId x, Window window);

// C^l(x,y): taboo-decomposed ratio used for existence criteria.
double c_kernel(const ValidatedChain& chain, double lambda, StateId x, StateId y, Window window);

struct RCritical {
    double value = 0.0;
    double tol = 0.0;
    std::vector<std::pair<double, bool>> trace;  // (R, predicate) bisection trace
};

// Convergence-parameter radius: infimum over R > 1 with
// E_x[R^{t_x}, t_x < tD] >= 1, by bisection on the taboo return solve.
RCritical r_critical(const ValidatedChain& chain, StateId x, double tol,
                     const WindowSchedule& schedule, double r_cap = 64.0);

// Aitken delta-squared limit of a monotone sequence; returns the last value
// when the second difference is too small to extrapolate safely.
double aitken_limit(const std::vector<double>& xs);

}  // namespace qsdlab
