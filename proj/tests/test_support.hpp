#pragma once

#include "ttb/model.hpp"
#include "ttb/rng.hpp"
#include "ttb/tensor.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace ttb::testing {

inline std::vector<std::size_t> unravel(std::size_t lin, const Dims& dims) {
    std::vector<std::size_t> idx(dims.size());
    for (std::size_t d = 0; d < dims.size(); ++d) {
        idx[d] = lin % dims[d];
        lin /= dims[d];
    }
    return idx;
}

inline DenseTensor random_tensor(Rng& rng, const Dims& dims) {
    DenseTensor t(dims);
    for (double& v : t.data()) v = rng.normal();
    return t;
}

inline std::size_t uniform_int(Rng& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng.uniform() * static_cast<double>(hi - lo + 1));
}

inline TTCores random_cores(Rng& rng, const Dims& dims, const std::vector<std::size_t>& ranks) {
    TTCores tt;
    for (std::size_t c = 0; c < dims.size(); ++c) {
        CoreArray core(ranks[c], ranks[c + 1], dims[c]);
        for (double& v : core.data()) v = rng.normal();
        tt.cores.push_back(std::move(core));
    }
    return tt;
}

/// Random variational state with strictly positive variances and Gamma
/// parameters spread over a few orders of magnitude.
inline ModelState random_state(Rng& rng, const Dims& dims, const std::vector<std::size_t>& ranks) {
    ModelState s;
    s.ranks = ranks;
    const std::size_t D = dims.size();
    for (std::size_t c = 0; c < D; ++c) {
        CorePosterior p;
        p.mean = CoreArray(ranks[c], ranks[c + 1], dims[c]);
        p.var = CoreArray(ranks[c], ranks[c + 1], dims[c]);
        for (double& v : p.mean.data()) v = rng.normal();
        for (double& v : p.var.data()) v = 0.05 + rng.uniform();
        s.cores.push_back(std::move(p));
    }
    s.lambdas.iface.resize(D + 1);
    for (std::size_t i = 1; i < D; ++i)
        for (std::size_t k = 0; k < ranks[i]; ++k)
            s.lambdas.iface[i].push_back({0.5 + 3.0 * rng.uniform(), 0.5 + 3.0 * rng.uniform()});
    s.tau.shape = 1.0 + 5.0 * rng.uniform();
    s.tau.rate = 0.5 + 2.0 * rng.uniform();
    s.prior = PriorHyper{}.resized(ranks);
    return s;
}

inline MaskTensor random_mask_prob(Rng& rng, const Dims& dims, double p_observed) {
    MaskTensor m(dims, true);
    for (std::size_t i = 0; i < m.size(); ++i) m.set(i, rng.uniform() < p_observed);
    return m;
}

/// Element of a TT by explicit summation over all rank paths.
inline double tt_element_bruteforce(const std::vector<CoreArray>& cores, const std::vector<std::size_t>& idx) {
    const std::size_t D = cores.size();
    std::vector<std::size_t> path(D + 1, 0);
    double total = 0.0;
    for (;;) {
        double prod = 1.0;
        for (std::size_t c = 0; c < D; ++c) prod *= cores[c](path[c], path[c + 1], idx[c]);
        total += prod;
        std::size_t i = 1;
        while (i < D) {
            if (++path[i] < cores[i].rows()) break;
            path[i] = 0;
            ++i;
        }
        if (i >= D) break;
    }
    return total;
}

/// E[y] and E[y^2] for one entry under the mean-field posterior, by summing
/// over pairs of rank paths with E[G G'] = m m' + [same element] v.
inline std::array<double, 2> moments_bruteforce(const ModelState& s, const std::vector<std::size_t>& idx) {
    const std::size_t D = s.order();
    std::vector<CoreArray> means;
    for (const auto& c : s.cores) means.push_back(c.mean);
    const double ey = tt_element_bruteforce(means, idx);

    std::vector<std::vector<std::size_t>> paths;
    std::vector<std::size_t> path(D + 1, 0);
    for (;;) {
        paths.push_back(path);
        std::size_t i = 1;
        while (i < D) {
            if (++path[i] < s.ranks[i]) break;
            path[i] = 0;
            ++i;
        }
        if (i >= D) break;
    }
    double ey2 = 0.0;
    for (const auto& p : paths)
        for (const auto& q : paths) {
            double prod = 1.0;
            for (std::size_t c = 0; c < D; ++c) {
                const auto& core = s.cores[c];
                double e = core.mean(p[c], p[c + 1], idx[c]) * core.mean(q[c], q[c + 1], idx[c]);
                if (p[c] == q[c] && p[c + 1] == q[c + 1]) e += core.var(p[c], p[c + 1], idx[c]);
                prod *= e;
            }
            ey2 += prod;
        }
    return {ey, ey2};
}

/// sum over observed entries of E[(a - y)^2].
inline double expected_sq_residual(const ModelState& s, const DenseTensor& a, const MaskTensor& o) {
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!o.observed(i)) continue;
        const auto [ey, ey2] = moments_bruteforce(s, unravel(i, a.dims()));
        total += a[i] * a[i] - 2.0 * a[i] * ey + ey2;
    }
    return total;
}

inline double golden_section(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iters && hi - lo > 1e-15 * (1.0 + std::abs(lo) + std::abs(hi)); ++i) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    return 0.5 * (lo + hi);
}

/// Nelder-Mead on R^2 with restarts.
inline std::array<double, 2> nelder_mead(const std::function<double(const std::array<double, 2>&)>& f,
                                         std::array<double, 2> x0, double step = 0.5) {
    using P = std::array<double, 2>;
    for (int restart = 0; restart < 6; ++restart) {
        std::array<P, 3> s = {x0, P{x0[0] + step, x0[1]}, P{x0[0], x0[1] + step}};
        std::array<double, 3> fs = {f(s[0]), f(s[1]), f(s[2])};
        for (int it = 0; it < 4000; ++it) {
            std::array<int, 3> o = {0, 1, 2};
            std::sort(o.begin(), o.end(), [&](int a, int b) { return fs[a] < fs[b]; });
            const P best = s[o[0]], mid = s[o[1]], worst = s[o[2]];
            const double fb = fs[o[0]], fm = fs[o[1]], fw = fs[o[2]];
            if (std::abs(fw - fb) <= 1e-16 * (std::abs(fb) + 1e-300) &&
                std::hypot(worst[0] - best[0], worst[1] - best[1]) < 1e-13)
                break;
            const P c = {(best[0] + mid[0]) / 2, (best[1] + mid[1]) / 2};
            auto at = [&](double t) { return P{c[0] + t * (worst[0] - c[0]), c[1] + t * (worst[1] - c[1])}; };
            const P r = at(-1.0);
            const double fr = f(r);
            P next;
            double fn;
            if (fr < fb) {
                const P e = at(-2.0);
                const double fe = f(e);
                next = fe < fr ? e : r;
                fn = std::min(fe, fr);
            } else if (fr < fm) {
                next = r;
                fn = fr;
            } else {
                const P k = fr < fw ? at(-0.5) : at(0.5);
                const double fk = f(k);
                if (fk < std::min(fr, fw)) {
                    next = k;
                    fn = fk;
                } else {
                    s = {best, P{(best[0] + mid[0]) / 2, (best[1] + mid[1]) / 2},
                         P{(best[0] + worst[0]) / 2, (best[1] + worst[1]) / 2}};
                    fs = {fb, f(s[1]), f(s[2])};
                    continue;
                }
            }
            s[o[2]] = next;
            fs[o[2]] = fn;
        }
        int bi = 0;
        for (int i = 1; i < 3; ++i)
            if (fs[i] < fs[bi]) bi = i;
        x0 = s[bi];
        step *= 0.1;
    }
    return x0;
}

inline double gamma_entropy(double shape, double rate) {
    return shape - std::log(rate) + std::lgamma(shape) + (1.0 - shape) * boost::math::digamma(shape);
}

/// Minimises -E_q[(a-1) ln x - b x] - H[q] over Gamma(shape, rate) numerically.
inline GammaParams optimal_gamma_numeric(double a, double b, const GammaParams& start) {
    auto neg_elbo = [&](const std::array<double, 2>& p) {
        const double shape = std::exp(p[0]), rate = std::exp(p[1]);
        const double eln = boost::math::digamma(shape) - std::log(rate);
        return -((a - 1.0) * eln - b * shape / rate) - gamma_entropy(shape, rate);
    };
    const auto x = nelder_mead(neg_elbo, {std::log(start.shape), std::log(start.rate)});
    return {std::exp(x[0]), std::exp(x[1])};
}

inline std::string temp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "ttb_tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace ttb::testing
