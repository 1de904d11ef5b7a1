#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "qsdlab/absorption.hpp"
#include "qsdlab/chain.hpp"

// Parametric model families with closed-form oracles.  Oracles are evaluated
// from their explicit formulas, independently of the generic solver
// pipeline, so the two sides can be compared in tests.

namespace qsdlab {

struct ParamRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MomentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SupercriticalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotSkipFree : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Finite-support probability mass function on {0, 1, ...}.
struct Pmf {
    std::vector<double> p;  // p[j] = mass at j

    double mean() const;
    // sum_j p_j e^{lambda j}
    double exp_moment(double lambda) const;
    static Pmf point(std::int64_t k);
    // Geometric(beta) on {0,1,...} truncated where the remaining tail,
    // weighted by e^{lambda_hint * j}, is below 1e-15; the tail is lumped
    // into the last atom so rows still sum to one exactly.
    static Pmf geometric(double beta, double lambda_hint);
};

struct GalleryModel {
    std::string name;
    std::map<std::string, double> params;
    ChainSpec chain;

    std::optional<double> oracle_lambda_cr;
    std::optional<Regime> oracle_regime;
    // Closed-form QSD weights (lambda, state) where the family has one.
    std::function<double(double, StateId)> oracle_qsd;
    // Closed-form absorption MGF from the zero state, where available.
    std::function<double(double)> oracle_mgf0;
    std::optional<double> oracle_r_cr;
    std::optional<bool> oracle_minimal_qsd_exists;
    bool skip_free = false;  // unique QSD per parameter when set
    std::string notes;
};

// Skip-free cyclic transfer: unit steps down, a redistribution row at zero.
// mu_analytic, when provided, is the exact exponential-moment function used
// by the critical-parameter oracle (otherwise the finite sum over mu).
GalleryModel cyclic_transfer(double q, const Pmf& mu,
                             std::function<double(double)> mu_analytic = nullptr);

// Two birth-death spokes glued at a hub with self-loop alpha*sqrt(q(1-q))
// and absorption only from the hub.
GalleryModel hub_two_spokes(double q, double alpha);

// Exponential killing at rate rho applied to a chain with no absorption of
// its own: entries scaled by e^{-rho}, the deficit goes to the absorbing
// state.  `base_lambda_cr` is the oracle critical parameter of the base
// (0 when the base has no absorption).
GalleryModel killed_chain(const ChainSpec& base, double rho, double base_lambda_cr = 0.0);

// Killed drifted walk on Z with step bias eps; no QSD exists for any eps.
GalleryModel killed_drifted_walk(double eps, double rho);

// Killed deterministic two-state ring; QSD is uniform at parameter rho.
GalleryModel killed_two_state_ring(double rho);

// Subcritical branching with finite-support offspring law; absorbing state
// is extinction.  The S-restriction is not irreducible in general, so the
// chain carries irreducible_on_S = false.
GalleryModel subcritical_branching(const Pmf& offspring);

// Validates the downward skip-free structure (in enumeration-index space)
// of an existing chain and attaches the uniqueness oracle.  Throws
// NotSkipFree.
GalleryModel skip_free(const ChainSpec& spec);

// Generating-function residual of the branching fixed-point equation for a
// candidate minimal QSD given as weights on {1..n}:
//   max over the s-grid of |B(f(s)) - m B(s) - (1 - m)|.
double branching_equation_residual(const Pmf& offspring, const std::vector<double>& weights,
                                   int grid_points = 21);

// Closed-form internals of the hub model, used directly by the oracles and
// exposed for unit tests.
namespace hub {
double rho(double q);
double e_lambda0(double q);
double e_lambda_cr(double q, double alpha);
double kappa(double q, double lambda);
// E_1[e^{lambda t_0}]
double a_to_zero(double q, double lambda);
double c_const(double q, double alpha, double lambda);
double r_ell(double q, double alpha, double lambda, std::int64_t ell);
// E_x[e^{lambda tD}]
double mgf_to_delta(double q, double alpha, double lambda, StateId x);
// E_0[e^{lambda t_x}, t_x < tD], x >= 1
double forward_mgf(double q, double alpha, double lambda, StateId x);
// E_x[e^{lambda t_x}, t_x < tD]
double return_self(double q, double alpha, double lambda, StateId x);
// G^lambda(y, y)
double green_diag(double q, double alpha, double lambda, StateId y);
// Moebius step for the forward functionals and its fixed points.
double moebius_step(double q, double lambda, double z);
std::pair<double, double> moebius_fixed_points(double q, double lambda);
// minimal QSD, alpha in [1, 1/rho)
double nu_cr(double q, double alpha, StateId y);
// two-sided QSDs at lambda in the finite regime; sign = +1 or -1
double nu_pm(double q, double alpha, double lambda, int sign, StateId y);
}  // namespace hub

}  // namespace qsdlab
