#include "ttb/tt_init.hpp"

#include "ttb/errors.hpp"
#include "ttb/linalg.hpp"
#include "ttb/rng.hpp"

#include <algorithm>
#include <string>

namespace ttb {

TTCores tt_svd(const DenseTensor& t, const std::vector<std::size_t>& ranks) {
    const std::size_t D = t.order();
    if (ranks.size() != D + 1 || ranks.front() != 1 || ranks.back() != 1)
        throw ShapeError("tt_svd: ranks must have D+1 entries with unit ends");

    TTCores out;
    out.cores.reserve(D);
    // Remainder, column-major: rows = L_c * J_c, cols = prod_{n>c} J_n.
    Eigen::MatrixXd rest = Eigen::Map<const Eigen::MatrixXd>(
        t.data().data(), static_cast<Eigen::Index>(t.dim(0)),
        static_cast<Eigen::Index>(t.size() / t.dim(0)));

    for (std::size_t c = 0; c + 1 < D; ++c) {
        const std::size_t left = ranks[c], depth = t.dim(c), right = ranks[c + 1];
        const auto rows = static_cast<std::size_t>(rest.rows());
        const auto cols = static_cast<std::size_t>(rest.cols());
        if (right < 1 || right > std::min(rows, cols))
            throw ShapeError("tt_svd: rank " + std::to_string(right) + " at interface " +
                             std::to_string(c + 1) + " exceeds feasible bound " +
                             std::to_string(std::min(rows, cols)));
        SvdResult f = truncated_svd(rest, right);

        CoreArray core(left, right, depth);
        for (std::size_t j = 0; j < depth; ++j)
            for (std::size_t l = 0; l < right; ++l)
                for (std::size_t k = 0; k < left; ++k)
                    core(k, l, j) = f.U(static_cast<Eigen::Index>(k + left * j), static_cast<Eigen::Index>(l));
        out.cores.push_back(std::move(core));

        Eigen::MatrixXd next = f.S.asDiagonal() * f.V.transpose();  // right x cols
        const std::size_t next_depth = t.dim(c + 1);
        rest = Eigen::Map<const Eigen::MatrixXd>(next.data(), static_cast<Eigen::Index>(right * next_depth),
                                                 static_cast<Eigen::Index>(cols / next_depth));
    }

    const std::size_t left = ranks[D - 1], depth = t.dim(D - 1);
    if (static_cast<std::size_t>(rest.rows()) != left * depth || rest.cols() != 1)
        throw ShapeError("tt_svd: internal shape mismatch");
    CoreArray last(left, 1, depth);
    for (std::size_t j = 0; j < depth; ++j)
        for (std::size_t k = 0; k < left; ++k) last(k, 0, j) = rest(static_cast<Eigen::Index>(k + left * j), 0);
    out.cores.push_back(std::move(last));
    return out;
}

std::vector<std::size_t> max_ranks(const DenseTensor& t, const InitConfig& cfg) {
    if (cfg.rank_cap_multiplier < 1) throw std::invalid_argument("rank_cap_multiplier must be >= 1");
    const std::size_t D = t.order();
    std::vector<std::size_t> ranks(D + 1, 1);
    for (std::size_t i = 1; i < D; ++i) {
        const Eigen::MatrixXd m = unfold(t, i);
        const double tol = cfg.svd_rel_tol.value_or(default_rank_tolerance(m));
        std::size_t r = numerical_rank(m, tol);
        r = std::min(r, cfg.rank_cap_multiplier * t.dim(i));
        // Keep the left-to-right sweep feasible after earlier caps.
        std::size_t right_extent = 1;
        for (std::size_t n = i; n < D; ++n) right_extent *= t.dim(n);
        r = std::min({r, ranks[i - 1] * t.dim(i - 1), right_extent});
        ranks[i] = std::max<std::size_t>(r, 1);
    }
    return ranks;
}

DenseTensor fill_missing(const DenseTensor& a, const MaskTensor& o, std::uint64_t seed) {
    if (a.dims() != o.dims()) throw ShapeError("fill_missing: dims mismatch");
    DenseTensor out = a;
    Rng rng(seed);
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!o.observed(i)) out[i] = rng.normal();
    return out;
}

ModelState init_state(const DenseTensor& a, const MaskTensor& o, const InitConfig& cfg,
                      const PriorHyper& prior) {
    prior.validate();
    const DenseTensor filled = fill_missing(a, o, cfg.fill_seed);
    const auto ranks = max_ranks(filled, cfg);
    const TTCores tt = tt_svd(filled, ranks);

    ModelState s;
    s.ranks = ranks;
    s.prior = prior.resized(ranks);
    const std::size_t D = tt.order();
    s.lambdas.iface.resize(D + 1);
    for (std::size_t i = 1; i < D; ++i) {
        s.lambdas.iface[i].resize(ranks[i]);
        for (std::size_t k = 0; k < ranks[i]; ++k)
            s.lambdas.iface[i][k] = {s.prior.alpha[i][k], s.prior.beta[i][k]};
    }
    s.tau.shape = s.prior.alpha_tau;
    s.tau.rate = s.prior.beta_tau;

    if (cfg.relative_init_variance && !(*cfg.relative_init_variance > 0.0))
        throw std::invalid_argument("relative_init_variance must be positive");
    s.cores.reserve(D);
    for (std::size_t c = 0; c < D; ++c) {
        const auto& core = tt.cores[c];
        CorePosterior p;
        p.mean = core;
        p.var = CoreArray(core.rows(), core.cols(), core.depth());
        double energy = 0.0;
        for (double m : core.data()) energy += m * m;
        const double rel = cfg.relative_init_variance
                               ? std::max(*cfg.relative_init_variance * energy / static_cast<double>(core.size()),
                                          kPositiveFloor)
                               : 0.0;
        for (std::size_t j = 0; j < core.depth(); ++j)
            for (std::size_t l = 0; l < core.cols(); ++l)
                for (std::size_t k = 0; k < core.rows(); ++k)
                    p.var(k, l, j) = cfg.relative_init_variance
                                         ? rel
                                         : 1.0 / (s.lambdas.mean(c, k) * s.lambdas.mean(c + 1, l));
        s.cores.push_back(std::move(p));
    }
    s.validate();
    return s;
}

}  // namespace ttb
