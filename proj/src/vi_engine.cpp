#include "ttb/vi_engine.hpp"

#include "parallel.hpp"
#include "ttb/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ttb {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Index ix(std::size_t v) { return static_cast<Index>(v); }

void check_core_index(const ModelState& s, std::size_t core) {
    if (core >= s.order()) throw ShapeError("core index out of range");
}

// b' = M^T b M + diag(V^T diag(b)) for one prefix step.
void left_second_step(const Eigen::Ref<const MatrixXd>& b, const Eigen::Ref<const MatrixXd>& m,
                      const Eigen::Ref<const MatrixXd>& v, Eigen::Map<MatrixXd> out) {
    out.noalias() = m.transpose() * b * m;
    out.diagonal().noalias() += v.transpose() * b.diagonal();
}

// b' = M b M^T + diag(V diag(b)) for one suffix step.
void right_second_step(const Eigen::Ref<const MatrixXd>& b, const Eigen::Ref<const MatrixXd>& m,
                       const Eigen::Ref<const MatrixXd>& v, Eigen::Map<MatrixXd> out) {
    out.noalias() = m * b * m.transpose();
    out.diagonal().noalias() += v * b.diagonal();
}

ChainTable left_table(const ModelState& s, std::size_t core, bool second) {
    ChainTable tab;
    tab.has_second = second;
    tab.t = {1.0};
    if (second) tab.b = {1.0};
    for (std::size_t n = 0; n < core; ++n) {
        const auto& post = s.cores[n];
        const std::size_t rin = post.mean.rows(), rout = post.mean.cols(), depth = post.mean.depth();
        ChainTable next;
        next.rank = rout;
        next.count = tab.count * depth;
        next.has_second = second;
        next.t.resize(next.count * rout);
        if (second) next.b.resize(next.count * rout * rout);
        const Eigen::Map<const MatrixXd> tin(tab.t.data(), ix(rin), ix(tab.count));
        for (std::size_t j = 0; j < depth; ++j) {
            const auto m = post.mean.slice(j);
            const auto v = post.var.slice(j);
            Eigen::Map<MatrixXd>(next.t.data() + j * tab.count * rout, ix(rout), ix(tab.count)).noalias() =
                m.transpose() * tin;
            if (!second) continue;
            for (std::size_t p = 0; p < tab.count; ++p) {
                const std::size_t e = p + tab.count * j;
                left_second_step(tab.second(p), m, v,
                                 Eigen::Map<MatrixXd>(next.b.data() + e * rout * rout, ix(rout), ix(rout)));
            }
        }
        tab = std::move(next);
    }
    return tab;
}

ChainTable right_table(const ModelState& s, std::size_t core, bool second) {
    ChainTable tab;
    tab.has_second = second;
    tab.t = {1.0};
    if (second) tab.b = {1.0};
    for (std::size_t n = s.order(); n-- > core + 1;) {
        const auto& post = s.cores[n];
        const std::size_t rout = post.mean.rows(), depth = post.mean.depth();
        ChainTable next;
        next.rank = rout;
        next.count = tab.count * depth;
        next.has_second = second;
        next.t.resize(next.count * rout);
        if (second) next.b.resize(next.count * rout * rout);
        for (std::size_t j = 0; j < depth; ++j) {
            const auto m = post.mean.slice(j);
            const auto v = post.var.slice(j);
            for (std::size_t q = 0; q < tab.count; ++q) {
                const std::size_t e = j + depth * q;
                Eigen::Map<VectorXd>(next.t.data() + e * rout, ix(rout)).noalias() = m * tab.mean(q);
                if (second)
                    right_second_step(tab.second(q), m, v,
                                      Eigen::Map<MatrixXd>(next.b.data() + e * rout * rout, ix(rout), ix(rout)));
            }
        }
        tab = std::move(next);
    }
    return tab;
}

// c += sign * kron(r, l) with fiber index k + L * l.
void add_kron(MatrixXd& c, const Eigen::Ref<const MatrixXd>& r, const Eigen::Ref<const MatrixXd>& l, double sign) {
    const Index lc = l.rows();
    for (Index b = 0; b < r.cols(); ++b)
        for (Index a = 0; a < r.rows(); ++a) c.block(a * lc, b * lc, lc, lc) += (sign * r(a, b)) * l;
}

struct Split {
    std::size_t p, j, s;
};

Split split_index(std::size_t idx, std::size_t prefixes, std::size_t depth) {
    const std::size_t rest = idx / prefixes;
    return {idx % prefixes, rest % depth, rest / depth};
}

// C[j] += sign * sum_{idx in list, j_c = j} kron(b_right(s), b_left(p)).
// Entries sharing a suffix (or prefix) are summed first, so each group costs
// one Kronecker accumulation. The cheaper grouping is chosen by buffer size.
void accumulate_second(std::vector<MatrixXd>& c, std::span<const std::size_t> list, const ContractionCaches& cc,
                       std::size_t depth, double sign, std::size_t threads) {
    if (list.empty()) return;
    const std::size_t P = cc.left.count, S = cc.right.count;
    const std::size_t ll = cc.left.rank, lr = cc.right.rank;
    const bool by_suffix = depth * S * ll * ll <= P * depth * lr * lr;
    const std::size_t groups = by_suffix ? depth * S : P * depth;
    const std::size_t side = by_suffix ? ll : lr;
    std::vector<double> buf(groups * side * side, 0.0);
    std::vector<std::uint8_t> used(groups, 0);
    for (std::size_t idx : list) {
        const Split sp = split_index(idx, P, depth);
        const std::size_t g = by_suffix ? sp.j + depth * sp.s : sp.p + P * sp.j;
        Eigen::Map<MatrixXd> acc(buf.data() + g * side * side, ix(side), ix(side));
        if (by_suffix)
            acc += cc.left.second(sp.p);
        else
            acc += cc.right.second(sp.s);
        used[g] = 1;
    }
    detail::parallel_for(depth, threads, [&](std::size_t j) {
        if (by_suffix) {
            for (std::size_t s = 0; s < S; ++s) {
                const std::size_t g = j + depth * s;
                if (!used[g]) continue;
                add_kron(c[j], cc.right.second(s),
                         Eigen::Map<const MatrixXd>(buf.data() + g * side * side, ix(side), ix(side)), sign);
            }
        } else {
            for (std::size_t p = 0; p < P; ++p) {
                const std::size_t g = p + P * j;
                if (!used[g]) continue;
                add_kron(c[j], Eigen::Map<const MatrixXd>(buf.data() + g * side * side, ix(side), ix(side)),
                         cc.left.second(p), sign);
            }
        }
    });
}

enum class CPath { full, subtractive, direct };

CPath choose_path(const ObservedData& data, double threshold) {
    if (data.fully_observed()) return CPath::full;
    if (data.fraction() >= threshold) return CPath::subtractive;
    return CPath::direct;
}

void check_caches(const ModelState& s, const ContractionCaches& cc, std::size_t core, const ObservedData& data) {
    if (cc.core != core) throw std::logic_error("contraction caches built for a different core");
    const auto& post = s.cores[core];
    if (cc.left.rank != post.mean.rows() || cc.right.rank != post.mean.cols() ||
        cc.left.count * post.mean.depth() * cc.right.count != data.total())
        throw ShapeError("contraction caches do not match the state");
}

double floor_positive(double v) { return std::max(v, kPositiveFloor); }

}  // namespace

ObservedData::ObservedData(const DenseTensor& a, const MaskTensor& o) : dims_(a.dims()), total_(a.size()) {
    if (a.dims() != o.dims()) throw ShapeError("data and mask dims differ");
    for (std::size_t i = 0; i < total_; ++i) {
        if (o.observed(i)) {
            const double v = a[i];
            if (!std::isfinite(v)) throw NumericalError("non-finite observed value");
            index_.push_back(i);
            value_.push_back(v);
            energy_ += v * v;
        } else {
            missing_.push_back(i);
        }
    }
}

ContractionCaches ContractionCaches::build(const ModelState& s, std::size_t core, bool second_moments) {
    check_core_index(s, core);
    ContractionCaches cc;
    cc.core = core;
    cc.left = left_table(s, core, second_moments);
    cc.right = right_table(s, core, second_moments);
    return cc;
}

MatrixXd summed_left_second_moment(const ModelState& s, std::size_t core) {
    if (core > s.order()) throw ShapeError("core index out of range");
    MatrixXd b = MatrixXd::Ones(1, 1);
    for (std::size_t n = 0; n < core; ++n) {
        const auto& post = s.cores[n];
        const std::size_t r = post.mean.cols();
        MatrixXd sum = MatrixXd::Zero(ix(r), ix(r));
        MatrixXd step(ix(r), ix(r));
        for (std::size_t j = 0; j < post.mean.depth(); ++j) {
            left_second_step(b, post.mean.slice(j), post.var.slice(j), Eigen::Map<MatrixXd>(step.data(), ix(r), ix(r)));
            sum += step;
        }
        b = std::move(sum);
    }
    return b;
}

MatrixXd summed_right_second_moment(const ModelState& s, std::size_t core) {
    check_core_index(s, core);
    MatrixXd b = MatrixXd::Ones(1, 1);
    for (std::size_t n = s.order(); n-- > core + 1;) {
        const auto& post = s.cores[n];
        const std::size_t r = post.mean.rows();
        MatrixXd sum = MatrixXd::Zero(ix(r), ix(r));
        MatrixXd step(ix(r), ix(r));
        for (std::size_t j = 0; j < post.mean.depth(); ++j) {
            right_second_step(b, post.mean.slice(j), post.var.slice(j), Eigen::Map<MatrixXd>(step.data(), ix(r), ix(r)));
            sum += step;
        }
        b = std::move(sum);
    }
    return b;
}

MatrixXd expected_kron_slice(const CorePosterior& core, std::size_t j) {
    if (j >= core.mean.depth()) throw ShapeError("slice index out of range");
    const MatrixXd m = core.mean.slice(j);
    MatrixXd out = kron(m, m);
    const std::size_t L = core.mean.rows(), R = core.mean.cols();
    for (std::size_t l = 0; l < R; ++l)
        for (std::size_t k = 0; k < L; ++k) out(ix(k * L + k), ix(l * R + l)) += core.var(k, l, j);
    return out;
}

void update_core(ModelState& s, const ContractionCaches& cc, const ObservedData& data, std::size_t core,
                 const UpdateOptions& opts) {
    check_core_index(s, core);
    check_caches(s, cc, core, data);
    auto& post = s.cores[core];
    const std::size_t L = post.mean.rows(), R = post.mean.cols(), J = post.mean.depth();
    const std::size_t n = L * R;
    const std::size_t P = cc.left.count;
    const CPath path = choose_path(data, opts.fast_path_observed_fraction);
    if (path != CPath::full && !(cc.left.has_second && cc.right.has_second))
        throw std::logic_error("update_core needs second-moment tables when data are partially observed");

    std::vector<MatrixXd> c(J);
    if (path == CPath::direct) {
        for (auto& m : c) m = MatrixXd::Zero(ix(n), ix(n));
        accumulate_second(c, data.indices(), cc, J, 1.0, opts.threads);
    } else {
        const MatrixXd base = kron(summed_right_second_moment(s, core), summed_left_second_moment(s, core));
        for (auto& m : c) m = base;
        if (path == CPath::subtractive) accumulate_second(c, data.missing(), cc, J, -1.0, opts.threads);
    }

    std::vector<VectorXd> h(J, VectorXd::Zero(ix(n)));
    const auto idx = data.indices();
    const auto val = data.values();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const Split sp = split_index(idx[i], P, J);
        Eigen::Map<MatrixXd>(h[sp.j].data(), ix(L), ix(R)).noalias() +=
            val[i] * cc.left.mean(sp.p) * cc.right.mean(sp.s).transpose();
    }

    const double tau = s.tau.mean();
    std::vector<double> prec(n);
    for (std::size_t l = 0; l < R; ++l)
        for (std::size_t k = 0; k < L; ++k) prec[k + L * l] = s.lambdas.mean(core, k) * s.lambdas.mean(core + 1, l);

    detail::parallel_for(J, opts.threads, [&](std::size_t j) {
        MatrixXd a = tau * c[j];
        for (std::size_t f = 0; f < n; ++f) a(ix(f), ix(f)) += prec[f];
        const VectorXd rhs = tau * h[j];
        VectorXd m;
        Eigen::LLT<MatrixXd> llt(a);
        if (llt.info() == Eigen::Success) {
            m = llt.solve(rhs);
        } else {
            Eigen::LDLT<MatrixXd> ldlt(a);
            if (ldlt.info() != Eigen::Success) throw NumericalError("core system factorization failed");
            m = ldlt.solve(rhs);
        }
        if (!m.allFinite()) throw NumericalError("non-finite core mean");
        Eigen::Map<VectorXd>(post.mean.slice(j).data(), ix(n)) = m;
        auto var = post.var.slice(j);
        for (std::size_t f = 0; f < n; ++f) {
            const double d = a(ix(f), ix(f));
            if (!(d > 0.0) || !std::isfinite(d)) throw NumericalError("non-positive core precision");
            var.data()[f] = std::max(1.0 / d, std::numeric_limits<double>::min());
        }
    });
}

void update_lambda(ModelState& s, std::size_t iface) {
    const std::size_t D = s.order();
    if (iface < 1 || iface >= D) throw ShapeError("lambda interface must lie in [1, D-1]");
    const auto& left = s.cores[iface - 1];   // lateral slices G_{:,k,:}
    const auto& right = s.cores[iface];      // horizontal slices G_{k,:,:}
    const std::size_t r = s.ranks[iface];
    const std::size_t lrows = left.mean.rows(), ldepth = left.mean.depth();
    const std::size_t rcols = right.mean.cols(), rdepth = right.mean.depth();
    const double shape_base = 0.5 * static_cast<double>(rdepth * rcols) + 0.5 * static_cast<double>(ldepth * lrows);
    for (std::size_t k = 0; k < r; ++k) {
        double br = 0.0;
        for (std::size_t j = 0; j < rdepth; ++j)
            for (std::size_t l = 0; l < rcols; ++l) br += right.second_moment(k, l, j) * s.lambdas.mean(iface + 1, l);
        double bl = 0.0;
        for (std::size_t j = 0; j < ldepth; ++j)
            for (std::size_t l = 0; l < lrows; ++l) bl += left.second_moment(l, k, j) * s.lambdas.mean(iface - 1, l);
        auto& g = s.lambdas.iface[iface][k];
        g.shape = shape_base + s.prior.alpha[iface][k];
        g.rate = floor_positive(0.5 * (br + bl) + s.prior.beta[iface][k]);
        if (!std::isfinite(g.rate)) throw NumericalError("non-finite lambda rate");
    }
}

void update_tau(ModelState& s, const ContractionCaches& cc, const ObservedData& data, const UpdateOptions& opts) {
    const std::size_t last = s.order() - 1;
    check_caches(s, cc, last, data);
    const auto& post = s.cores[last];
    const std::size_t P = cc.left.count;
    const CPath path = choose_path(data, opts.fast_path_observed_fraction);
    if (path != CPath::full && !cc.left.has_second)
        throw std::logic_error("update_tau needs second-moment tables when data are partially observed");

    auto second = [&](std::size_t p, std::size_t j) {
        const auto m = post.mean.slice(j).col(0);
        const auto v = post.var.slice(j).col(0);
        const auto b = cc.left.second(p);
        return m.dot(b * m) + b.diagonal().dot(v);
    };

    double res2 = 0.0, yhat2 = 0.0, ey2 = 0.0;
    const auto idx = data.indices();
    const auto val = data.values();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const std::size_t p = idx[i] % P, j = idx[i] / P;
        const double y = cc.left.mean(p).dot(post.mean.slice(j).col(0));
        res2 += (val[i] - y) * (val[i] - y);
        yhat2 += y * y;
        if (path == CPath::direct) ey2 += second(p, j);
    }
    if (path != CPath::direct) {
        ey2 = summed_left_second_moment(s, s.order())(0, 0);
        if (path == CPath::subtractive)
            for (std::size_t m : data.missing()) ey2 -= second(m % P, m / P);
    }
    // sum (a - yhat)^2 + sum (E[y^2] - yhat^2) = ||OA||^2 - 2 sum a yhat + sum E[y^2].
    const double half = 0.5 * (res2 + std::max(ey2 - yhat2, 0.0));
    s.tau.shape = 0.5 * static_cast<double>(data.count()) + s.prior.alpha_tau;
    s.tau.rate = floor_positive(half + s.prior.beta_tau);
    if (!std::isfinite(s.tau.rate)) throw NumericalError("non-finite tau rate");
}

std::vector<double> fast_c(const ModelState& s, const MaskTensor& o, std::size_t core, std::size_t k, std::size_t l,
                           double min_observed_fraction) {
    check_core_index(s, core);
    if (o.dims() != s.dims()) throw ShapeError("mask dims differ from the model");
    const auto& post = s.cores[core];
    if (k >= post.mean.rows() || l >= post.mean.cols()) throw ShapeError("fiber index out of range");
    const double frac = o.observed_fraction();
    if (frac < min_observed_fraction) throw std::logic_error("fast_c requires a mostly observed tensor");

    const MatrixXd sl = summed_left_second_moment(s, core);
    const MatrixXd sr = summed_right_second_moment(s, core);
    const std::size_t J = post.mean.depth();
    std::vector<double> c(J, sl(ix(k), ix(k)) * sr(ix(l), ix(l)));
    if (o.observed_count() == o.size()) return c;

    const ContractionCaches cc = ContractionCaches::build(s, core, true);
    for (std::size_t i = 0; i < o.size(); ++i) {
        if (o.observed(i)) continue;
        const Split sp = split_index(i, cc.left.count, J);
        c[sp.j] -= cc.left.second(sp.p)(ix(k), ix(k)) * cc.right.second(sp.s)(ix(l), ix(l));
    }
    return c;
}

bool PruneResult::any() const {
    return std::any_of(removed.begin(), removed.end(), [](const auto& v) { return !v.empty(); });
}

PruneResult prune_ranks(ModelState& s, double ratio) {
    if (!(ratio > 1.0)) throw std::invalid_argument("prune ratio must exceed 1");
    const std::size_t D = s.order();
    PruneResult out;
    out.removed.resize(D + 1);
    for (std::size_t i = 1; i < D; ++i) {
        const std::size_t r = s.ranks[i];
        double lo = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < r; ++k) lo = std::min(lo, s.lambdas.mean(i, k));
        std::vector<std::size_t> keep;
        for (std::size_t k = 0; k < r; ++k) {
            if (s.lambdas.mean(i, k) > ratio * lo)
                out.removed[i].push_back(k);
            else
                keep.push_back(k);
        }
        if (out.removed[i].empty()) continue;

        auto& left = s.cores[i - 1];
        std::vector<std::size_t> all_rows(left.mean.rows());
        for (std::size_t k = 0; k < all_rows.size(); ++k) all_rows[k] = k;
        left.mean = left.mean.select(all_rows, keep);
        left.var = left.var.select(all_rows, keep);

        auto& right = s.cores[i];
        std::vector<std::size_t> all_cols(right.mean.cols());
        for (std::size_t l = 0; l < all_cols.size(); ++l) all_cols[l] = l;
        right.mean = right.mean.select(keep, all_cols);
        right.var = right.var.select(keep, all_cols);

        auto filter = [&](auto& v) {
            std::remove_reference_t<decltype(v)> kept;
            kept.reserve(keep.size());
            for (std::size_t k : keep) kept.push_back(v[k]);
            v = std::move(kept);
        };
        filter(s.lambdas.iface[i]);
        filter(s.prior.alpha[i]);
        filter(s.prior.beta[i]);
        s.ranks[i] = keep.size();
    }
    return out;
}

DenseTensor reconstruct(const ModelState& s) { return tt_contract(s.mean_cores()); }

void FitOptions::validate() const {
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be positive");
    if (!(prune_ratio > 1.0)) throw std::invalid_argument("prune_ratio must exceed 1");
    if (!(fast_path_observed_fraction > 0.0 && fast_path_observed_fraction <= 1.0))
        throw std::invalid_argument("fast_path_observed_fraction must lie in (0, 1]");
    if (rank_cap_multiplier < 1) throw std::invalid_argument("rank_cap_multiplier must be >= 1");
    if (threads < 1) throw std::invalid_argument("threads must be >= 1");
    if (relative_init_variance && !(*relative_init_variance > 0.0))
        throw std::invalid_argument("relative_init_variance must be positive");
}

std::string to_string(FitStatus s) {
    switch (s) {
        case FitStatus::converged: return "converged";
        case FitStatus::max_iters: return "max_iters";
        case FitStatus::failed: return "failed";
    }
    return "unknown";
}

namespace {

void sweep(ModelState& s, const ObservedData& data, const UpdateOptions& uo, double prune_ratio) {
    const std::size_t D = s.order();
    const bool second = !data.fully_observed();
    for (std::size_t c = 0; c < D; ++c) {
        const ContractionCaches cc = ContractionCaches::build(s, c, second);
        update_core(s, cc, data, c, uo);
    }
    for (std::size_t i = 1; i < D; ++i) update_lambda(s, i);
    const ContractionCaches cc = ContractionCaches::build(s, D - 1, second);
    update_tau(s, cc, data, uo);
    prune_ranks(s, prune_ratio);
}

std::vector<double> gather(const DenseTensor& t, std::span<const std::size_t> idx) {
    std::vector<double> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = t[idx[i]];
    return out;
}

}  // namespace

FitReport run_sweeps(ModelState& s, const DenseTensor& a, const MaskTensor& o, const FitOptions& opts) {
    opts.validate();
    s.validate();
    if (a.dims() != s.dims()) throw ShapeError("data dims differ from the model");
    const ObservedData data(a, o);
    if (data.count() == 0) throw std::invalid_argument("mask has no observed entries");
    const UpdateOptions uo{opts.fast_path_observed_fraction, opts.threads};

    FitReport rep;
    rep.initial_ranks = s.ranks;
    rep.e_tau = s.tau.mean();
    const auto t0 = std::chrono::steady_clock::now();
    const double denom_a = std::sqrt(data.observed_energy());
    std::vector<double> prev = gather(reconstruct(s), data.indices());

    for (std::size_t it = 1; it <= opts.max_iters; ++it) {
        ModelState backup = s;
        std::vector<double> cur;
        try {
            sweep(s, data, uo, opts.prune_ratio);
            cur = gather(reconstruct(s), data.indices());
            for (double v : cur)
                if (!std::isfinite(v)) throw NumericalError("non-finite reconstruction");
        } catch (const NumericalError& e) {
            s = std::move(backup);
            rep.status = FitStatus::failed;
            rep.message = e.what();
            break;
        }
        double diff2 = 0.0, prev2 = 0.0, res2 = 0.0;
        const auto val = data.values();
        for (std::size_t i = 0; i < cur.size(); ++i) {
            diff2 += (cur[i] - prev[i]) * (cur[i] - prev[i]);
            prev2 += prev[i] * prev[i];
            res2 += (val[i] - cur[i]) * (val[i] - cur[i]);
        }
        IterationRecord rec;
        rec.iteration = it;
        rec.ranks = s.ranks;
        rec.rse = denom_a > 0.0 ? std::sqrt(res2) / denom_a : std::sqrt(res2);
        rec.e_tau = s.tau.mean();
        rec.rel_change = prev2 > 0.0 ? std::sqrt(diff2 / prev2)
                                     : (diff2 > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        rep.ranks_history.push_back(rec.ranks);
        rep.rse_history.push_back(rec.rse);
        rep.e_tau = rec.e_tau;
        rep.iterations = it;
        if (opts.on_iteration) opts.on_iteration(rec);
        prev = std::move(cur);
        if (rec.rel_change < opts.rel_tol) {
            rep.status = FitStatus::converged;
            break;
        }
    }
    rep.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

FitResult fit(const DenseTensor& a, const MaskTensor& o, const PriorHyper& prior, const FitOptions& opts) {
    opts.validate();
    if (a.dims() != o.dims()) throw ShapeError("data and mask dims differ");
    if (o.observed_count() == 0) throw std::invalid_argument("mask has no observed entries");
    const auto t0 = std::chrono::steady_clock::now();
    InitConfig ic;
    ic.rank_cap_multiplier = opts.rank_cap_multiplier;
    ic.fill_seed = opts.seed;
    ic.svd_rel_tol = opts.svd_rel_tol;
    ic.relative_init_variance = opts.relative_init_variance;
    FitResult out;
    out.state = init_state(a, o, ic, prior);
    out.report = run_sweeps(out.state, a, o, opts);
    out.report.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

std::string fit_report_json(const FitReport& r, int indent) {
    nlohmann::json j;
    j["ranks_history"] = r.ranks_history;
    j["rse_history"] = r.rse_history;
    j["e_tau"] = r.e_tau;
    j["iterations"] = r.iterations;
    j["wall_time_ms"] = r.wall_time_ms;
    j["status"] = to_string(r.status);
    j["message"] = r.message;
    j["initial_ranks"] = r.initial_ranks;
    return j.dump(indent);
}

std::string iteration_csv_row(const IterationRecord& rec) {
    std::ostringstream os;
    os.precision(17);
    os << rec.iteration << ",\"";
    for (std::size_t i = 0; i < rec.ranks.size(); ++i) os << (i ? ";" : "") << rec.ranks[i];
    os << "\"," << rec.rse << ',' << rec.e_tau;
    return os.str();
}

}  // namespace ttb
