#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "helpers.hpp"
#include "qsdlab/gallery.hpp"
#include "qsdlab/spectral.hpp"

using namespace qsdlab;

namespace {

// Dense eigensolver oracle for the spectral radius.
double dense_rho(const SpMat& m) {
    Eigen::MatrixXd d = Eigen::MatrixXd(m);
    Eigen::EigenSolver<Eigen::MatrixXd> es(d, false);
    double best = 0.0;
    for (Eigen::Index i = 0; i < d.rows(); ++i) best = std::max(best, std::abs(es.eigenvalues()[i]));
    return best;
}

}  // namespace

TEST_CASE("perron root of the two-state ring window matches 1/sqrt(2)") {
    auto chain = validate(testing::two_state_ring());
    SpMat p = window_matrix(truncate(chain, Window{2}));
    auto r = perron_root(p);
    CHECK(r.width() <= 1e-12);
    CHECK(r.value() == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("perron root matches a dense eigensolver on random windows") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 25; ++rep) {
        auto spec = testing::random_finite_chain(rng, 2 + static_cast<int>(rng() % 13));
        SpMat p = window_matrix(truncate(validate(spec), Window{20}));
        auto r = perron_root(p, 1e-12);
        CHECK(std::abs(r.value() - dense_rho(p)) <= 1e-10);
    }
}

TEST_CASE("perron root on a large diffusive hub window stays within bracket tolerance") {
    auto model = hub_two_spokes(0.95, 0.5);
    auto chain = validate(model.chain);
    SpMat p = window_matrix(truncate(chain, Window{800}));
    auto r = perron_root(p, 1e-12);
    CHECK(r.width() <= 1e-12);
    // the window root is strictly below the closed-form limit and close to it
    double limit = 1.0 / hub::e_lambda0(0.95);
    CHECK(r.value() < limit);
    CHECK(limit - r.value() < 1e-4);
}

TEST_CASE("left perron vector solves the left eigenproblem") {
    std::mt19937_64 rng(13);
    auto spec = testing::random_finite_chain(rng, 10);
    SpMat p = window_matrix(truncate(validate(spec), Window{10}));
    auto root = perron_root(p, 1e-13);
    Vec v = left_perron_vector(p, root, 1e-13);
    Vec resid = SpMat(p.transpose()) * v - root.value() * v;
    CHECK(resid.cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(v.minCoeff() > 0.0);
    CHECK(v.sum() == doctest::Approx(1.0));
}

TEST_CASE("neumann solve refuses parameters at or beyond the spectral radius") {
    auto chain = validate(testing::two_state_ring());
    SpMat p = window_matrix(truncate(chain, Window{2}));
    Vec rhs = Vec::Ones(2);
    CHECK(neumann_solve(p, 1.2, rhs).has_value());       // 1.2 < sqrt(2)
    CHECK(!neumann_solve(p, 1.5, rhs).has_value());      // 1.5 > sqrt(2)
    CHECK(!neumann_solve(p, std::sqrt(2.0), rhs).has_value());
}

TEST_CASE("neumann solve reproduces the geometric series") {
    auto chain = validate(testing::one_state(0.5));
    SpMat p = window_matrix(truncate(chain, Window{1}));
    Vec rhs = Vec::Ones(1);
    auto x = neumann_solve(p, 1.5, rhs);
    REQUIRE(x.has_value());
    CHECK((*x)[0] == doctest::Approx(1.0 / (1.0 - 0.75)).epsilon(1e-12));
}

TEST_CASE("pairwise sum matches sequential sum") {
    std::vector<double> xs;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    double seq = 0.0;
    for (int i = 0; i < 1000; ++i) {
        xs.push_back(unif(rng));
        seq += xs.back();
    }
    CHECK(pairwise_sum(xs) == doctest::Approx(seq).epsilon(1e-12));
}
