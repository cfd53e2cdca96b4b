#pragma once

// Brute-force reference computations for the variational updates, shared by
// the unit tests and the acceptance runner.

#include "test_support.hpp"
#include "ttb/vi_engine.hpp"

#include <Eigen/Dense>

namespace ttb::testing {

// E[G (x) G] for one slice, assembled entry by entry.
inline Eigen::MatrixXd kron_second(const CorePosterior& c, std::size_t j) {
    const std::size_t L = c.mean.rows(), R = c.mean.cols();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(L * L), static_cast<Eigen::Index>(R * R));
    for (std::size_t k = 0; k < L; ++k)
        for (std::size_t k2 = 0; k2 < L; ++k2)
            for (std::size_t l = 0; l < R; ++l)
                for (std::size_t l2 = 0; l2 < R; ++l2) {
                    double v = c.mean(k, l, j) * c.mean(k2, l2, j);
                    if (k == k2 && l == l2) v += c.var(k, l, j);
                    out(static_cast<Eigen::Index>(k * L + k2), static_cast<Eigen::Index>(l * R + l2)) = v;
                }
    return out;
}

// b^(<c) as a vector of length L_c^2 for one full index.
inline Eigen::VectorXd left_b(const ModelState& s, std::size_t c, const std::vector<std::size_t>& idx) {
    Eigen::MatrixXd b = Eigen::MatrixXd::Ones(1, 1);
    for (std::size_t n = 0; n < c; ++n) b = b * kron_second(s.cores[n], idx[n]);
    return b.transpose();
}

inline Eigen::VectorXd right_b(const ModelState& s, std::size_t c, const std::vector<std::size_t>& idx) {
    Eigen::MatrixXd b = Eigen::MatrixXd::Ones(1, 1);
    for (std::size_t n = s.order(); n-- > c + 1;) b = kron_second(s.cores[n], idx[n]) * b;
    return b;
}

// c(j) by direct summation over observed entries.
inline std::vector<double> direct_c(const ModelState& s, const MaskTensor& o, std::size_t c, std::size_t k,
                                    std::size_t l) {
    const std::size_t L = s.ranks[c], R = s.ranks[c + 1];
    std::vector<double> out(s.cores[c].mean.depth(), 0.0);
    for (std::size_t i = 0; i < o.size(); ++i) {
        if (!o.observed(i)) continue;
        const auto idx = unravel(i, o.dims());
        out[idx[c]] += left_b(s, c, idx)(static_cast<Eigen::Index>(k * L + k)) *
                       right_b(s, c, idx)(static_cast<Eigen::Index>(l * R + l));
    }
    return out;
}

// Terms of the negative ELBO that depend on core c.
inline double core_objective(const ModelState& s, const DenseTensor& a, const MaskTensor& o, std::size_t c) {
    double f = 0.5 * s.tau.mean() * expected_sq_residual(s, a, o);
    const auto& p = s.cores[c];
    for (std::size_t j = 0; j < p.mean.depth(); ++j)
        for (std::size_t l = 0; l < p.mean.cols(); ++l)
            for (std::size_t k = 0; k < p.mean.rows(); ++k) {
                const double prec = s.lambdas.mean(c, k) * s.lambdas.mean(c + 1, l);
                f += 0.5 * prec * p.second_moment(k, l, j) - 0.5 * std::log(p.var(k, l, j));
            }
    return f;
}

struct ElementGap {
    /// Newton step to the minimiser along the mean, relative to 1 + |m|.
    double mean = 0.0;
    /// Relative distance of the variance from its coordinate optimum.
    double var = 0.0;
    bool convex = true;
};

// Distance of element (k, l, j) of core c from the exact minimiser of the
// brute-force objective along its own mean and variance coordinates. The
// objective is quadratic in the mean, so one central-difference Newton step
// is exact up to rounding.
inline ElementGap core_element_gap(const ModelState& s, const DenseTensor& a, const MaskTensor& o, std::size_t c,
                                   std::size_t k, std::size_t l, std::size_t j) {
    ModelState t = s;
    const double m0 = s.cores[c].mean(k, l, j), v0 = s.cores[c].var(k, l, j);
    const double h = 0.5 * (1.0 + std::abs(m0));
    auto at_mean = [&](double m) {
        t.cores[c].mean(k, l, j) = m;
        return core_objective(t, a, o, c);
    };
    const double fp = at_mean(m0 + h), f0 = at_mean(m0), fm = at_mean(m0 - h);
    t.cores[c].mean(k, l, j) = m0;
    const double grad = (fp - fm) / (2.0 * h), curv = (fp - 2.0 * f0 + fm) / (h * h);
    ElementGap g;
    g.convex = curv > 0.0;
    g.mean = std::abs(grad / curv) / (1.0 + std::abs(m0));
    // Objective + log(v)/2 is linear in v; its slope fixes the optimum.
    auto lin = [&](double v) {
        t.cores[c].var(k, l, j) = v;
        return core_objective(t, a, o, c) + 0.5 * std::log(v);
    };
    const double slope = (lin(2.0 * v0) - lin(v0)) / v0;
    g.var = rel_diff(0.5 / slope, v0);
    return g;
}

inline double core_optimality_gap(const ModelState& s, const DenseTensor& a, const MaskTensor& o, std::size_t c) {
    double worst = 0.0;
    const auto& p = s.cores[c];
    for (std::size_t j = 0; j < p.mean.depth(); ++j)
        for (std::size_t l = 0; l < p.mean.cols(); ++l)
            for (std::size_t k = 0; k < p.mean.rows(); ++k) {
                const ElementGap g = core_element_gap(s, a, o, c, k, l, j);
                worst = std::max({worst, g.mean, g.var, g.convex ? 0.0 : 1.0});
            }
    return worst;
}

// Numerically optimal Gamma factor for lambda_k on interface i given the
// current cores.
inline GammaParams lambda_oracle(const ModelState& s, std::size_t i, std::size_t k) {
    double a = s.prior.alpha[i][k], b = s.prior.beta[i][k];
    for (std::size_t c = 0; c < s.order(); ++c) {
        const auto& p = s.cores[c];
        for (std::size_t j = 0; j < p.mean.depth(); ++j)
            for (std::size_t l = 0; l < p.mean.cols(); ++l)
                for (std::size_t r = 0; r < p.mean.rows(); ++r) {
                    const bool as_row = c == i && r == k, as_col = c + 1 == i && l == k;
                    if (!as_row && !as_col) continue;
                    const double other = as_row ? s.lambdas.mean(c + 1, l) : s.lambdas.mean(c, r);
                    a += 0.5;
                    b += 0.5 * other * p.second_moment(r, l, j);
                }
    }
    return optimal_gamma_numeric(a, b, {1.0, 1.0});
}

inline GammaParams tau_oracle(const ModelState& s, const DenseTensor& a, const MaskTensor& o) {
    const double shape = s.prior.alpha_tau + 0.5 * static_cast<double>(o.observed_count());
    const double rate = s.prior.beta_tau + 0.5 * expected_sq_residual(s, a, o);
    return optimal_gamma_numeric(shape, rate, {1.0, 1.0});
}

struct Instance {
    ModelState s;
    DenseTensor a;
    MaskTensor o;
};

inline Instance random_instance(Rng& rng, const Dims& dims, const std::vector<std::size_t>& ranks, double p_obs) {
    Instance in{random_state(rng, dims, ranks), random_tensor(rng, dims), MaskTensor(dims, true)};
    if (p_obs < 1.0) {
        do {
            in.o = random_mask_prob(rng, dims, p_obs);
        } while (in.o.observed_count() == 0);
    }
    return in;
}

inline void update_core_fresh(ModelState& s, const DenseTensor& a, const MaskTensor& o, std::size_t c,
                              const UpdateOptions& uo = {}) {
    const ObservedData data(a, o);
    update_core(s, ContractionCaches::build(s, c, true), data, c, uo);
}

inline void update_tau_fresh(ModelState& s, const DenseTensor& a, const MaskTensor& o, const UpdateOptions& uo = {}) {
    const ObservedData data(a, o);
    update_tau(s, ContractionCaches::build(s, s.order() - 1, true), data, uo);
}

inline double max_rel_diff(std::span<const double> x, std::span<const double> y) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]) / std::max(1.0, std::abs(y[i])));
    return m;
}

}  // namespace ttb::testing
