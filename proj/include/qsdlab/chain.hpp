#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

// Absorbed Markov chains on a countable state space S plus one absorbing
// state.  Chains are either explicit (finite, fully listed) or generated
// (rule-backed, countable).  All numerical work happens on finite windows
// obtained by truncation: probability mass leaving the window is redirected
// to the absorbing state, so truncated absorption times are stochastically
// smaller than the full-chain ones and window quantities converge
// monotonically.

namespace qsdlab {

using StateId = std::int64_t;

// Sentinel for the absorbing state; never a member of S.
inline constexpr StateId kDelta = std::numeric_limits<StateId>::min();

inline constexpr double kRowSumTol = 1e-12;

struct RowEntry {
    StateId to;
    double value;  // probability (discrete) or jump rate (continuous)
};

// One row of the transition function restricted to S, plus the mass (or
// rate) going directly to the absorbing state.
struct Row {
    std::vector<RowEntry> to_states;
    double to_absorbing = 0.0;
};

enum class TimeKind { Discrete, Continuous };

// Declarative chain description.  `row` must return the finitely many
// nonzero entries of the row of x; `state_at` enumerates S (a bijection
// S <-> Z+ used for windowing).  For two-sided chains the conventional
// enumeration interleaves 0, 1, -1, 2, -2, ...
struct ChainSpec {
    TimeKind kind = TimeKind::Discrete;
    std::string name = "chain";
    std::function<Row(StateId)> row;
    std::function<StateId(std::int64_t)> state_at;
    std::optional<std::int64_t> finite_size;  // set iff S is finite
    // Asserted by the caller for generated chains; validation confirms it on
    // finite windows when set, and skips the check when false (global
    // irreducibility of a rule-generated chain is the caller's
    // responsibility).
    bool irreducible_on_S = true;
    // Optional growth potential: log of a per-state similarity weight under
    // which window eigenvectors are well scaled (a ground-state transform).
    // Spectral routines use it to avoid running out of floating-point range
    // on deep windows; it never changes any computed quantity.
    std::function<double(StateId)> log_scale_hint;
};

struct ChainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RowSumError : ChainError {
    using ChainError::ChainError;
};
struct NoAbsorptionError : ChainError {
    using ChainError::ChainError;
};
struct ReducibleError : ChainError {
    using ChainError::ChainError;
};
struct EmptyWindowError : ChainError {
    using ChainError::ChainError;
};

struct Window {
    std::int64_t n = 0;  // number of enumerated states
};

// Finite truncation of a chain.  Rows hold window-interior transitions by
// window index; `absorb` is p(x, Delta) plus all mass exiting the window
// (for continuous chains: rates, with `total_rate` = q_x).
struct FiniteChain {
    TimeKind kind = TimeKind::Discrete;
    std::vector<StateId> states;  // enumeration order
    std::unordered_map<StateId, std::int64_t> index;
    std::vector<std::vector<std::pair<std::int64_t, double>>> rows;
    std::vector<double> absorb;
    std::vector<double> total_rate;  // continuous only: q_x per state
    std::vector<double> log_scale;   // per-state scaling hint (zeros if none)
    bool exact = false;              // window covers all of S

    std::int64_t size() const { return static_cast<std::int64_t>(states.size()); }
    bool contains(StateId s) const { return index.count(s) != 0; }
    std::int64_t index_of(StateId s) const { return index.at(s); }
};

// Immutable handle produced by validate(); shares the spec and carries the
// facts established during validation.
class ValidatedChain {
  public:
    ValidatedChain(std::shared_ptr<const ChainSpec> spec, std::int64_t checked_window,
                   int period)
        : spec_(std::move(spec)), checked_window_(checked_window), period_(period) {}

    const ChainSpec& spec() const { return *spec_; }
    TimeKind kind() const { return spec_->kind; }
    bool is_finite() const { return spec_->finite_size.has_value(); }
    std::int64_t finite_size() const { return spec_->finite_size.value(); }
    std::int64_t checked_window() const { return checked_window_; }
    // Period of the S-restriction observed on the validation window; existence
    // results tolerate periodicity, so this is reported but never gates a
    // computation.
    int period() const { return period_; }

    Row row(StateId x) const { return spec_->row(x); }
    StateId state_at(std::int64_t i) const { return spec_->state_at(i); }

  private:
    std::shared_ptr<const ChainSpec> spec_;
    std::int64_t checked_window_;
    int period_;
};

// Checks row sums (1 within 1e-12 for discrete; rates nonnegative with
// q_x > 0 for continuous), presence of absorption, and strong connectivity
// of the S-restriction on the requested window.  Throws RowSumError,
// NoAbsorptionError or ReducibleError.
ValidatedChain validate(const ChainSpec& spec, std::int64_t check_window = 200);

// Truncates to the first `window.n` states of the enumeration.  Interior
// entries are copied verbatim; everything else is redirected to Delta.
FiniteChain truncate(const ValidatedChain& chain, Window window);

// Convenience: explicit finite discrete chain from listed rows.
ChainSpec make_explicit_discrete(std::vector<StateId> states,
                                 std::unordered_map<StateId, Row> rows,
                                 std::string name = "explicit");

// Convenience: explicit finite continuous chain (entries are rates).
ChainSpec make_explicit_continuous(std::vector<StateId> states,
                                   std::unordered_map<StateId, Row> rows,
                                   std::string name = "explicit-cts");

}  // namespace qsdlab
