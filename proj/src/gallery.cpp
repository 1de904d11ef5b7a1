#include "qsdlab/gallery.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>

namespace qsdlab {

double Pmf::mean() const {
    double m = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) m += static_cast<double>(j) * p[j];
    return m;
}

double Pmf::exp_moment(double lambda) const {
    double s = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) s += p[j] * std::exp(lambda * static_cast<double>(j));
    return s;
}

Pmf Pmf::point(std::int64_t k) {
    Pmf out;
    out.p.assign(static_cast<std::size_t>(k) + 1, 0.0);
    out.p.back() = 1.0;
    return out;
}

Pmf Pmf::geometric(double beta, double lambda_hint) {
    if (!(beta > 0.0 && beta < 1.0)) throw ParamRange("geometric beta must be in (0,1)");
    if (lambda_hint <= 0.0) lambda_hint = 0.97 * std::log(1.0 / beta);
    double w = beta * std::exp(lambda_hint);
    if (w >= 1.0) throw MomentError("exponential moment diverges at the requested hint");
    Pmf out;
    double tail_weight = 1.0;
    for (std::size_t j = 0; j < 200000; ++j) {
        out.p.push_back((1.0 - beta) * std::pow(beta, static_cast<double>(j)));
        tail_weight = std::pow(w, static_cast<double>(j + 1)) / (1.0 - w);
        if (tail_weight < 1e-15) break;
    }
    // Lump the remaining geometric tail into the last atom so the row is an
    // exact probability vector.
    double partial = 0.0;
    for (std::size_t j = 0; j + 1 < out.p.size(); ++j) partial += out.p[j];
    out.p.back() = 1.0 - partial;
    return out;
}

GalleryModel cyclic_transfer(double q, const Pmf& mu, std::function<double(double)> mu_analytic) {
    if (!(q > 0.0 && q < 1.0)) throw ParamRange("cyclic transfer requires q in (0,1)");
    if (mu.p.empty()) throw MomentError("mu has empty support");
    const std::int64_t max_supp = static_cast<std::int64_t>(mu.p.size()) - 1;

    GalleryModel m;
    m.name = "cyclic-transfer";
    m.params = {{"q", q}};
    m.skip_free = true;

    auto mu_shared = std::make_shared<Pmf>(mu);
    ChainSpec spec;
    spec.kind = TimeKind::Discrete;
    spec.name = "cyclic-transfer";
    spec.finite_size = max_supp + 1;  // S = {0..max supp}
    spec.state_at = [](std::int64_t i) { return i; };
    spec.row = [q, mu_shared](StateId x) {
        Row r;
        if (x >= 1) {
            r.to_states.push_back({x - 1, 1.0});
            return r;
        }
        r.to_absorbing = q;
        for (std::size_t j = 0; j < mu_shared->p.size(); ++j)
            if (mu_shared->p[j] > 0.0)
                r.to_states.push_back({static_cast<StateId>(j), (1.0 - q) * mu_shared->p[j]});
        return r;
    };
    m.chain = spec;

    std::function<double(double)> phi =
        mu_analytic ? mu_analytic : [mu_shared](double lam) { return mu_shared->exp_moment(lam); };

    // (1-q) e^l phi(l) = 1 has a unique root: the left side is increasing.
    // Past the radius of the exponential moment, phi is infinite (an
    // analytic continuation may go negative); either way the root lies below.
    auto h = [q, phi](double lam) {
        double p = phi(lam);
        if (!std::isfinite(p) || p <= 0.0) return std::numeric_limits<double>::infinity();
        double v = (1.0 - q) * std::exp(lam) * p;
        return std::isfinite(v) ? v - 1.0 : std::numeric_limits<double>::infinity();
    };
    double lo = 0.0, hi = 0.25;
    while (h(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 700.0) throw MomentError("critical parameter bracket not found");
    }
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
        double mid = 0.5 * (lo + hi);
        (h(mid) < 0.0 ? lo : hi) = mid;
    }
    double lam_cr = 0.5 * (lo + hi);
    // window eigenvectors grow like e^{lambda_cr x}; scale them flat
    spec.log_scale_hint = [lam_cr](StateId x) { return lam_cr * static_cast<double>(x); };
    m.chain = spec;
    m.oracle_lambda_cr = lam_cr;
    m.oracle_regime = Regime::InfiniteMGF;
    m.oracle_minimal_qsd_exists = true;
    m.oracle_mgf0 = [q, phi](double lam) {
        return std::exp(lam) * q / (1.0 - std::exp(lam) * (1.0 - q) * phi(lam));
    };
    m.oracle_qsd = [q, mu_shared](double lam, StateId y) {
        if (y < 0) return 0.0;
        double partial = 0.0;
        for (std::int64_t j = 0; j < y && j < static_cast<std::int64_t>(mu_shared->p.size()); ++j)
            partial += mu_shared->p[j] * std::exp(lam * static_cast<double>(j + 1));
        return std::exp(-lam * static_cast<double>(y + 1)) * (std::exp(lam) - 1.0) *
               (1.0 - (1.0 - q) * partial) / q;
    };
    m.notes = "unique QSD per parameter; critical parameter from the scalar root";
    return m;
}

namespace hub {

double rho(double q) { return std::sqrt((1.0 - q) / q); }

double e_lambda0(double q) { return 1.0 / (2.0 * std::sqrt(q * (1.0 - q))); }

double e_lambda_cr(double q, double alpha) {
    double base = e_lambda0(q);
    if (alpha <= 1.0) return base;
    return base * 2.0 / (alpha + 1.0 / alpha);
}

double kappa(double q, double lambda) {
    double v = 1.0 - 4.0 * std::exp(2.0 * lambda) * q * (1.0 - q);
    return std::sqrt(std::max(v, 0.0));
}

double a_to_zero(double q, double lambda) {
    return (1.0 - kappa(q, lambda)) / (2.0 * std::exp(lambda) * (1.0 - q));
}

double c_const(double q, double alpha, double lambda) {
    double r = alpha * std::sqrt(q * (1.0 - q));
    double k = kappa(q, lambda);
    return (1.0 - 2.0 * std::exp(lambda) * r) / (1.0 + k - 2.0 * std::exp(lambda) * r);
}

double r_ell(double q, double alpha, double lambda, std::int64_t ell) {
    double k = kappa(q, lambda);
    double ratio = (1.0 - k) / (1.0 + k);
    return 1.0 - std::pow(ratio, static_cast<double>(ell + 1)) * c_const(q, alpha, lambda);
}

double mgf_to_delta(double q, double alpha, double lambda, StateId x) {
    double r = alpha * std::sqrt(q * (1.0 - q));
    double delta = q - r;
    double k = kappa(q, lambda);
    double base = 2.0 * std::exp(lambda) * delta / (1.0 + k - 2.0 * std::exp(lambda) * r);
    return base * std::pow(a_to_zero(q, lambda), static_cast<double>(std::abs(x)));
}

double forward_mgf(double q, double alpha, double lambda, StateId x) {
    double k = kappa(q, lambda);
    double base = (1.0 - k) / (2.0 * std::exp(lambda) * q);
    return std::pow(base, static_cast<double>(x)) * r_ell(q, alpha, lambda, -1) /
           r_ell(q, alpha, lambda, x - 1);
}

double return_self(double q, double alpha, double lambda, StateId x) {
    double r = alpha * std::sqrt(q * (1.0 - q));
    double k = kappa(q, lambda);
    if (x == 0) return 0.5 * (1.0 - k) + std::exp(lambda) * r;
    return 1.0 - k / r_ell(q, alpha, lambda, std::abs(x) - 1);
}

double green_diag(double q, double alpha, double lambda, StateId y) {
    double r = alpha * std::sqrt(q * (1.0 - q));
    double k = kappa(q, lambda);
    if (y == 0) return 2.0 / (1.0 + k - 2.0 * std::exp(lambda) * r);
    return r_ell(q, alpha, lambda, std::abs(y) - 1) / k;
}

double moebius_step(double q, double lambda, double z) {
    return std::exp(lambda) * (1.0 - q) / (1.0 - std::exp(lambda) * q * z);
}

std::pair<double, double> moebius_fixed_points(double q, double lambda) {
    double k = kappa(q, lambda);
    double denom = 2.0 * std::exp(lambda) * q;
    return {(1.0 - k) / denom, (1.0 + k) / denom};
}

double nu_cr(double q, double alpha, StateId y) {
    double ratio = rho(q) / alpha;
    double head = 1.0 - ratio;
    if (y == 0) return head;
    return head * 0.5 * std::pow(ratio, static_cast<double>(std::abs(y)));
}

double nu_pm(double q, double alpha, double lambda, int sign, StateId y) {
    double r = alpha * std::sqrt(q * (1.0 - q));
    double delta = q - r;
    double lam0 = std::log(e_lambda0(q));
    if (std::abs(lambda - lam0) < 1e-11) {
        // critical-parameter form, alpha in [0,1)
        double rh = rho(q);
        double head = (1.0 - rh) * (1.0 - rh) / (1.0 - rh * alpha);
        if (y == 0) return head;
        double ypm = sign > 0 ? std::max<StateId>(0, y) : std::max<StateId>(0, -y);
        return head * std::pow(rh, static_cast<double>(std::abs(y))) *
               (0.5 + (1.0 - alpha) * static_cast<double>(ypm));
    }
    double k = kappa(q, lambda);
    double c = c_const(q, alpha, lambda);
    double head = (std::exp(lambda) - 1.0) / (2.0 * std::exp(lambda) * delta);
    if (y == 0) return 2.0 * head;
    double big = (1.0 + k) / (2.0 * std::exp(lambda) * q);
    double small = 2.0 * std::exp(lambda) * (1.0 - q) / (1.0 + k);
    double ay = std::abs(y);
    bool same_side = (sign > 0) == (y > 0);
    if (same_side)
        return head * (std::pow(big, ay) - c * std::pow(small, ay)) / (1.0 - c);
    return head * std::pow(small, ay);
}

}  // namespace hub

GalleryModel hub_two_spokes(double q, double alpha) {
    if (!(q > 0.5 && q < 1.0)) throw ParamRange("hub model requires q in (1/2, 1)");
    double inv_rho = 1.0 / hub::rho(q);
    if (!(alpha >= 0.0 && alpha < inv_rho)) throw ParamRange("hub model requires alpha in [0, 1/rho)");
    double r = alpha * std::sqrt(q * (1.0 - q));
    double delta = q - r;

    GalleryModel m;
    m.name = "hub";
    m.params = {{"q", q}, {"alpha", alpha}};

    ChainSpec spec;
    spec.kind = TimeKind::Discrete;
    spec.name = "hub";
    // symmetric-ball windows: 0, 1, -1, 2, -2, ...
    spec.state_at = [](std::int64_t i) {
        if (i == 0) return StateId{0};
        return (i % 2 == 1) ? StateId{(i + 1) / 2} : StateId{-i / 2};
    };
    spec.row = [q, r, delta](StateId x) {
        Row row;
        if (x == 0) {
            row.to_states.push_back({1, 0.5 * (1.0 - q)});
            row.to_states.push_back({-1, 0.5 * (1.0 - q)});
            if (r > 0.0) row.to_states.push_back({0, r});
            row.to_absorbing = delta;
        } else if (x > 0) {
            row.to_states.push_back({x + 1, 1.0 - q});
            row.to_states.push_back({x - 1, q});
        } else {
            row.to_states.push_back({x - 1, 1.0 - q});
            row.to_states.push_back({x + 1, q});
        }
        return row;
    };
    // ground-state scale: the inward drift q vs 1-q symmetrizes under
    // (q/(1-q))^{|x|/2}
    double half_log = 0.5 * std::log(q / (1.0 - q));
    spec.log_scale_hint = [half_log](StateId x) {
        return -half_log * static_cast<double>(std::abs(x));
    };
    m.chain = spec;

    double lam_cr = std::log(hub::e_lambda_cr(q, alpha));
    m.oracle_lambda_cr = lam_cr;
    m.oracle_regime = alpha < 1.0 ? Regime::FiniteMGF : Regime::InfiniteMGF;
    m.oracle_minimal_qsd_exists = true;
    m.oracle_mgf0 = [q, alpha](double lam) { return hub::mgf_to_delta(q, alpha, lam, 0); };
    m.oracle_qsd = [q, alpha, lam_cr](double lam, StateId y) {
        if (alpha >= 1.0 && lam >= lam_cr - 1e-12) return hub::nu_cr(q, alpha, y);
        return hub::nu_pm(q, alpha, lam, +1, y);
    };
    m.notes = "two-sided cone in the finite regime (oracle_qsd reports the +infinity kernel limit)";
    return m;
}

GalleryModel killed_chain(const ChainSpec& base, double rho, double base_lambda_cr) {
    if (!(rho > 0.0)) throw ParamRange("killing rate must be positive");
    GalleryModel m;
    m.name = "killed-" + base.name;
    m.params = {{"rho", rho}};
    ChainSpec spec = base;
    spec.name = m.name;
    double keep = std::exp(-rho);
    auto base_row = base.row;
    spec.row = [base_row, keep](StateId x) {
        Row r = base_row(x);
        double sum = 0.0;
        for (auto& e : r.to_states) {
            e.value *= keep;
            sum += e.value;
        }
        r.to_absorbing = 1.0 - sum;
        return r;
    };
    m.chain = spec;
    m.oracle_lambda_cr = base_lambda_cr + rho;
    m.oracle_regime = Regime::InfiniteMGF;
    return m;
}

GalleryModel killed_drifted_walk(double eps, double rho) {
    if (!(eps >= 0.0 && eps < 1.0)) throw ParamRange("drift must be in [0,1)");
    ChainSpec base;
    base.kind = TimeKind::Discrete;
    base.name = "drifted-walk";
    base.state_at = [](std::int64_t i) {
        if (i == 0) return StateId{0};
        return (i % 2 == 1) ? StateId{(i + 1) / 2} : StateId{-i / 2};
    };
    base.row = [eps](StateId x) {
        Row r;
        r.to_states.push_back({x + 1, 0.5 * (1.0 + eps)});
        r.to_states.push_back({x - 1, 0.5 * (1.0 - eps)});
        return r;
    };
    if (eps > 0.0) {
        double half_log = 0.5 * std::log((1.0 - eps) / (1.0 + eps));
        base.log_scale_hint = [half_log](StateId x) { return half_log * static_cast<double>(x); };
    }
    GalleryModel m = killed_chain(base, rho, 0.0);
    m.name = "killed-walk";
    m.params = {{"eps", eps}, {"rho", rho}};
    m.oracle_r_cr = std::exp(rho) / std::sqrt(1.0 - eps * eps);
    // The base walk has no stationary distribution for any eps (transient
    // when eps != 0, null recurrent when eps = 0), so no QSD exists.
    m.oracle_minimal_qsd_exists = false;
    return m;
}

GalleryModel killed_two_state_ring(double rho) {
    ChainSpec base;
    base.kind = TimeKind::Discrete;
    base.name = "two-ring";
    base.finite_size = 2;
    base.state_at = [](std::int64_t i) { return i; };
    base.row = [](StateId x) {
        Row r;
        r.to_states.push_back({1 - x, 1.0});
        return r;
    };
    GalleryModel m = killed_chain(base, rho, 0.0);
    m.name = "killed-ring";
    m.params = {{"rho", rho}};
    m.chain.finite_size = 2;
    m.oracle_minimal_qsd_exists = true;
    m.oracle_qsd = [](double, StateId) { return 0.5; };
    return m;
}

GalleryModel subcritical_branching(const Pmf& offspring) {
    double mean = offspring.mean();
    if (mean >= 1.0) throw SupercriticalError("offspring mean must be below 1");
    if (mean <= 0.0) throw ParamRange("offspring mean must be positive");
    if (offspring.p.empty() || offspring.p[0] <= 0.0)
        throw ParamRange("extinction requires positive mass at zero offspring");

    GalleryModel m;
    m.name = "branching";
    m.params = {{"m", mean}};

    auto b = std::make_shared<Pmf>(offspring);
    // k-fold convolutions of the offspring law, memoized; computed by direct
    // convolution.
    struct ConvCache {
        std::mutex mu;
        std::vector<std::vector<double>> rows;  // rows[k] = law of population after one step from k
    };
    auto cache = std::make_shared<ConvCache>();
    cache->rows.push_back({1.0});  // from 0 individuals (unused: 0 is absorbing)
    cache->rows.push_back(b->p);

    ChainSpec spec;
    spec.kind = TimeKind::Discrete;
    spec.name = "branching";
    spec.state_at = [](std::int64_t i) { return i + 1; };  // S = {1, 2, ...}
    spec.irreducible_on_S = false;  // parity classes are possible; caller-asserted
    spec.row = [b, cache](StateId x) {
        std::lock_guard<std::mutex> lock(cache->mu);
        while (static_cast<StateId>(cache->rows.size()) <= x) {
            const auto& prev = cache->rows.back();
            std::vector<double> next(prev.size() + b->p.size() - 1, 0.0);
            for (std::size_t i = 0; i < prev.size(); ++i) {
                if (prev[i] == 0.0) continue;
                for (std::size_t j = 0; j < b->p.size(); ++j) next[i + j] += prev[i] * b->p[j];
            }
            cache->rows.push_back(std::move(next));
        }
        const auto& pmf = cache->rows[static_cast<std::size_t>(x)];
        Row r;
        r.to_absorbing = pmf[0];
        for (std::size_t j = 1; j < pmf.size(); ++j)
            if (pmf[j] > 0.0) r.to_states.push_back({static_cast<StateId>(j), pmf[j]});
        return r;
    };
    m.chain = spec;
    m.oracle_lambda_cr = std::log(1.0 / mean);
    m.oracle_regime = Regime::InfiniteMGF;
    m.oracle_minimal_qsd_exists = true;
    m.notes = "minimal QSD characterized by the generating-function fixed point";
    return m;
}

GalleryModel skip_free(const ChainSpec& spec) {
    std::int64_t check = spec.finite_size ? *spec.finite_size : 200;
    for (std::int64_t i = 0; i < check; ++i) {
        if (spec.state_at(i) != i)
            throw NotSkipFree("skip-free structure requires the identity enumeration on Z+");
        Row r = spec.row(i);
        bool has_down_one = false;
        for (const auto& e : r.to_states) {
            if (e.to == i - 1 && e.value > 0.0) has_down_one = true;
            if (e.to < i - 1 && e.value > 0.0)
                throw NotSkipFree("downward jump of size >= 2 from state " + std::to_string(i));
        }
        if (i == 0) {
            if (!(r.to_absorbing > 0.0)) throw NotSkipFree("state 0 must absorb with positive probability");
        } else {
            if (r.to_absorbing > 0.0)
                throw NotSkipFree("absorption from state " + std::to_string(i) + " skips states");
            if (!has_down_one && !(spec.finite_size && i >= *spec.finite_size))
                throw NotSkipFree("missing unit downward step from state " + std::to_string(i));
        }
    }
    GalleryModel m;
    m.name = "skip-free:" + spec.name;
    m.chain = spec;
    m.skip_free = true;
    m.notes = "unique QSD per absorption parameter; equality in the domination bound";
    return m;
}

double branching_equation_residual(const Pmf& offspring, const std::vector<double>& weights,
                                   int grid_points) {
    double mean = offspring.mean();
    double worst = 0.0;
    for (int g = 0; g < grid_points; ++g) {
        double s = grid_points == 1 ? 1.0 : static_cast<double>(g) / (grid_points - 1);
        double fs = 0.0;
        for (std::size_t j = 0; j < offspring.p.size(); ++j)
            fs += offspring.p[j] * std::pow(s, static_cast<double>(j));
        double gen_at_fs = 0.0, gen_at_s = 0.0;
        for (std::size_t k = 0; k < weights.size(); ++k) {
            gen_at_fs += weights[k] * std::pow(fs, static_cast<double>(k + 1));
            gen_at_s += weights[k] * std::pow(s, static_cast<double>(k + 1));
        }
        worst = std::max(worst, std::abs(gen_at_fs - mean * gen_at_s - (1.0 - mean)));
    }
    return worst;
}

}  // namespace qsdlab
