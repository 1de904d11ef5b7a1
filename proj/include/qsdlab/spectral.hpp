#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qsdlab/chain.hpp"

// Sparse spectral and linear-solve primitives for substochastic window
// matrices.  The Perron root is bracketed by Collatz-Wielandt ratios and the
// iterate is advanced by inverse iteration with a shift just above the upper
// bound, which converges on diffusive windows where plain power iteration
// stalls.

namespace qsdlab {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

struct PowerIterationStall : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SingularSystemError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// P_W as a sparse matrix (row i -> transitions of window state i).
// `taboo` (a window index) zeroes that column: paths entering the taboo
// state are killed, which is the matrix of excursions avoiding it.
SpMat window_matrix(const FiniteChain& fc, std::optional<std::int64_t> taboo = std::nullopt);

// Similarity-transformed window matrix D^{-1} P_W D with D from the chain's
// log-scale hint.  Same spectrum; eigenvectors are flattened into the
// representable range on deep windows.
SpMat scaled_window_matrix(const FiniteChain& fc, std::optional<std::int64_t> taboo = std::nullopt);

struct PerronResult {
    double lower = 0.0;  // certified Collatz-Wielandt bounds on the root
    double upper = 0.0;
    Vec right;           // Perron vector (L1-normalized, positive)
    int iterations = 0;
    double value() const { return 0.5 * (lower + upper); }
    double width() const { return upper - lower; }
};

// Perron root of an irreducible nonnegative sparse matrix.  tol bounds the
// bracket width; throws PowerIterationStall past max_iter.  The random
// positive start is seeded for reproducibility.
PerronResult perron_root(const SpMat& mat, double tol = 1e-12, int max_iter = 10000,
                         std::uint64_t seed = 12345);

// Left Perron vector (L1-normalized) refined until the eigen-residual
// max_j |(vP)_j - rho v_j| drops below tol * max(v).
Vec left_perron_vector(const SpMat& mat, const PerronResult& root, double tol = 1e-12,
                       int max_iter = 10000, std::uint64_t seed = 54321);

// Solves (I - s*M) x = rhs with a positivity/residual check.  Returns
// nullopt when s is at or beyond 1/rho(M) (system singular or the solution
// is not the Neumann-series limit, i.e. has materially negative entries).
std::optional<Vec> neumann_solve(const SpMat& mat, double s, const Vec& rhs);

enum class SolveStatus {
    Ok,
    Singular,  // s at or beyond 1/rho: the series itself is infinite
    Overflow,  // far-state values left the floating-point range
};

// Cached factorization of (I - s*M) for repeated right-hand sides.
// Not thread-safe per instance (status of the last solve is recorded);
// concurrent callers construct their own solver.
class NeumannSolver {
  public:
    NeumannSolver(const SpMat& mat, double s);
    bool ok() const { return ok_; }
    // Solve; nullopt when the factorization failed or the solution fails the
    // sign/residual sanity check for a Neumann limit.
    std::optional<Vec> solve(const Vec& rhs) const;
    SolveStatus last_status() const { return last_status_; }

  private:
    Eigen::SparseMatrix<double> sys_;
    Eigen::SparseLU<SpMat> lu_;
    bool ok_ = false;
    mutable SolveStatus last_status_ = SolveStatus::Ok;
};

// Pairwise (tree) summation; order-independent reduction contract.
double pairwise_sum(const std::vector<double>& xs);

}  // namespace qsdlab
