#include "ttb/model.hpp"

#include "ttb/errors.hpp"
#include "ttb/rng.hpp"
#include "ttb/tensor_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>

namespace ttb {

PriorHyper PriorHyper::resized(const std::vector<std::size_t>& ranks) const {
    PriorHyper out = *this;
    out.alpha.resize(ranks.size());
    out.beta.resize(ranks.size());
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        const bool inner = i > 0 && i + 1 < ranks.size();
        const std::size_t n = inner ? ranks[i] : 0;
        out.alpha[i].resize(n, default_alpha);
        out.beta[i].resize(n, default_beta);
    }
    return out;
}

void PriorHyper::validate() const {
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(alpha_tau) || !positive(beta_tau) || !positive(default_alpha) || !positive(default_beta))
        throw std::invalid_argument("prior hyperparameters must be strictly positive");
    for (const auto& v : alpha)
        for (double a : v)
            if (!positive(a)) throw std::invalid_argument("prior alpha must be strictly positive");
    for (const auto& v : beta)
        for (double b : v)
            if (!positive(b)) throw std::invalid_argument("prior beta must be strictly positive");
}

double LambdaPosterior::mean(std::size_t interface, std::size_t k) const {
    if (interface == 0 || interface + 1 >= iface.size()) return 1.0;
    return iface[interface][k].mean();
}

Dims ModelState::dims() const {
    Dims d;
    d.reserve(cores.size());
    for (const auto& c : cores) d.push_back(c.mean.depth());
    return d;
}

TTCores ModelState::mean_cores() const {
    TTCores tt;
    tt.cores.reserve(cores.size());
    for (const auto& c : cores) tt.cores.push_back(c.mean);
    return tt;
}

void ModelState::validate() const {
    const std::size_t D = cores.size();
    if (D == 0) throw ShapeError("model has no cores");
    if (ranks.size() != D + 1 || ranks.front() != 1 || ranks.back() != 1)
        throw ShapeError("rank vector must have D+1 entries with unit ends");
    for (std::size_t c = 0; c < D; ++c) {
        const auto& core = cores[c];
        if (core.mean.rows() != ranks[c] || core.mean.cols() != ranks[c + 1])
            throw ShapeError("core " + std::to_string(c) + " shape disagrees with ranks");
        if (core.var.rows() != core.mean.rows() || core.var.cols() != core.mean.cols() ||
            core.var.depth() != core.mean.depth())
            throw ShapeError("core " + std::to_string(c) + " mean/var shape mismatch");
        for (double v : core.var.data())
            if (!(v > 0.0) || !std::isfinite(v)) throw NumericalError("non-positive core variance");
        for (double m : core.mean.data())
            if (!std::isfinite(m)) throw NumericalError("non-finite core mean");
    }
    if (lambdas.iface.size() != D + 1) throw ShapeError("lambda posterior must have D+1 interfaces");
    for (std::size_t i = 0; i <= D; ++i) {
        const std::size_t expect = (i == 0 || i == D) ? 0 : ranks[i];
        if (lambdas.iface[i].size() != expect) throw ShapeError("lambda count disagrees with rank");
        for (const auto& g : lambdas.iface[i])
            if (!(g.shape > 0.0) || !(g.rate > 0.0)) throw NumericalError("non-positive lambda parameter");
    }
    if (!(tau.shape > 0.0) || !(tau.rate > 0.0)) throw NumericalError("non-positive tau parameter");
    prior.validate();
    if (prior.alpha.size() != D + 1 || prior.beta.size() != D + 1)
        throw ShapeError("prior must have D+1 interfaces");
    for (std::size_t i = 1; i < D; ++i)
        if (prior.alpha[i].size() != ranks[i] || prior.beta[i].size() != ranks[i])
            throw ShapeError("prior size disagrees with rank");
}

namespace {

void put_size(std::ostream& out, std::size_t v) { binio::put_u64(out, static_cast<std::uint64_t>(v)); }
std::size_t get_size(std::istream& in) {
    const auto v = binio::get_u64(in);
    if (v > (std::uint64_t{1} << 40)) throw FormatError("implausible size in model state");
    return static_cast<std::size_t>(v);
}

void put_core_array(std::ostream& out, const CoreArray& a) {
    put_size(out, a.rows());
    put_size(out, a.cols());
    put_size(out, a.depth());
    for (double v : a.data()) binio::put_f64(out, v);
}

CoreArray get_core_array(std::istream& in) {
    const auto r = get_size(in), c = get_size(in), d = get_size(in);
    CoreArray a(r, c, d);
    for (double& v : a.data()) v = binio::get_f64(in);
    return a;
}

void put_reals(std::ostream& out, const std::vector<double>& v) {
    put_size(out, v.size());
    for (double x : v) binio::put_f64(out, x);
}

std::vector<double> get_reals(std::istream& in) {
    std::vector<double> v(get_size(in));
    for (double& x : v) x = binio::get_f64(in);
    return v;
}

}  // namespace

void write_model_state(std::ostream& out, const ModelState& s) {
    binio::put_magic(out, "TTMS");
    binio::put_u32(out, kModelStateVersion);
    put_size(out, s.cores.size());
    for (const auto& c : s.cores) {
        put_core_array(out, c.mean);
        put_core_array(out, c.var);
    }
    put_size(out, s.lambdas.iface.size());
    for (const auto& v : s.lambdas.iface) {
        put_size(out, v.size());
        for (const auto& g : v) {
            binio::put_f64(out, g.shape);
            binio::put_f64(out, g.rate);
        }
    }
    binio::put_f64(out, s.tau.shape);
    binio::put_f64(out, s.tau.rate);
    put_size(out, s.prior.alpha.size());
    for (const auto& v : s.prior.alpha) put_reals(out, v);
    put_size(out, s.prior.beta.size());
    for (const auto& v : s.prior.beta) put_reals(out, v);
    binio::put_f64(out, s.prior.alpha_tau);
    binio::put_f64(out, s.prior.beta_tau);
    binio::put_f64(out, s.prior.default_alpha);
    binio::put_f64(out, s.prior.default_beta);
    put_size(out, s.ranks.size());
    for (auto r : s.ranks) put_size(out, r);
}

ModelState read_model_state(std::istream& in) {
    binio::expect_magic(in, "TTMS");
    const auto version = binio::get_u32(in);
    if (version != kModelStateVersion)
        throw FormatError("unsupported model state version " + std::to_string(version));
    ModelState s;
    s.cores.resize(get_size(in));
    for (auto& c : s.cores) {
        c.mean = get_core_array(in);
        c.var = get_core_array(in);
    }
    s.lambdas.iface.resize(get_size(in));
    for (auto& v : s.lambdas.iface) {
        v.resize(get_size(in));
        for (auto& g : v) {
            g.shape = binio::get_f64(in);
            g.rate = binio::get_f64(in);
        }
    }
    s.tau.shape = binio::get_f64(in);
    s.tau.rate = binio::get_f64(in);
    s.prior.alpha.resize(get_size(in));
    for (auto& v : s.prior.alpha) v = get_reals(in);
    s.prior.beta.resize(get_size(in));
    for (auto& v : s.prior.beta) v = get_reals(in);
    s.prior.alpha_tau = binio::get_f64(in);
    s.prior.beta_tau = binio::get_f64(in);
    s.prior.default_alpha = binio::get_f64(in);
    s.prior.default_beta = binio::get_f64(in);
    s.ranks.resize(get_size(in));
    for (auto& r : s.ranks) r = get_size(in);
    s.validate();
    return s;
}

void save_model_state(const std::string& path, const ModelState& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    write_model_state(out, s);
    if (!out) throw FormatError("write failed: " + path);
}

ModelState load_model_state(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    return read_model_state(in);
}

GammaParams lambda1_conditional(double x, double lambda2, const ProductGammaHyper& h) {
    return {h.alpha1 + 0.5, 0.5 * lambda2 * x * x + h.beta1};
}

namespace {

double gamma_log_pdf(double v, double shape, double rate) {
    return shape * std::log(rate) + (shape - 1.0) * std::log(v) - rate * v - std::lgamma(shape);
}

}  // namespace

double product_gamma_log_joint(double x, double lambda1, double lambda2, const ProductGammaHyper& h) {
    const double precision = lambda1 * lambda2;
    const double log_gauss = 0.5 * std::log(precision) - 0.5 * std::log(2.0 * std::numbers::pi) -
                             0.5 * precision * x * x;
    return log_gauss + gamma_log_pdf(lambda1, h.alpha1, h.beta1) + gamma_log_pdf(lambda2, h.alpha2, h.beta2);
}

bool ConjugacyCheck::within(double sigmas) const {
    return std::abs(empirical_mean - analytic_mean) <= sigmas * mean_stderr &&
           std::abs(empirical_var - analytic_var) <= sigmas * var_stderr;
}

ConjugacyCheck conjugacy_oracle(double x, double lambda2, const ProductGammaHyper& h,
                                std::size_t n_samples, std::uint64_t seed) {
    if (n_samples < 2) throw std::invalid_argument("conjugacy_oracle: need at least two samples");
    if (!(lambda2 > 0.0) || !(h.alpha1 > 0.0) || !(h.beta1 > 0.0) || !(h.alpha2 > 0.0) || !(h.beta2 > 0.0))
        throw std::invalid_argument("conjugacy_oracle: parameters must be positive");

    const GammaParams post = lambda1_conditional(x, lambda2, h);
    const double q_shape = post.shape;
    const double q_rate = 0.7 * post.rate;

    Rng rng(seed);
    std::vector<double> samples(n_samples), logw(n_samples);
    double max_logw = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_samples; ++i) {
        double s = rng.gamma(q_shape, q_rate);
        while (!(s > 0.0)) s = rng.gamma(q_shape, q_rate);
        samples[i] = s;
        logw[i] = product_gamma_log_joint(x, s, lambda2, h) - gamma_log_pdf(s, q_shape, q_rate);
        max_logw = std::max(max_logw, logw[i]);
    }
    double wsum = 0.0, mean = 0.0;
    std::vector<double> w(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        w[i] = std::exp(logw[i] - max_logw);
        wsum += w[i];
        mean += w[i] * samples[i];
    }
    mean /= wsum;
    double var = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double d = samples[i] - mean;
        var += w[i] * d * d;
    }
    var /= wsum;
    // Delta-method standard errors of the self-normalised estimators.
    double se_mean = 0.0, se_var = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double d = samples[i] - mean;
        const double wn = w[i] / wsum;
        se_mean += wn * wn * d * d;
        const double e = d * d - var;
        se_var += wn * wn * e * e;
    }
    ConjugacyCheck out;
    out.empirical_mean = mean;
    out.empirical_var = var;
    out.analytic_mean = post.shape / post.rate;
    out.analytic_var = post.shape / (post.rate * post.rate);
    out.mean_stderr = std::sqrt(se_mean);
    out.var_stderr = std::sqrt(se_var);
    return out;
}

double slice_prior_log_density(const Eigen::MatrixXd& slice, std::size_t depth) {
    if (static_cast<std::size_t>(slice.rows()) != depth)
        throw ShapeError("slice_prior_log_density: slice rows must equal the mode depth");
    double total = 0.0;
    for (Eigen::Index l = 0; l < slice.cols(); ++l) {
        const double energy = slice.col(l).squaredNorm();
        if (energy == 0.0) return -std::numeric_limits<double>::infinity();
        total += -0.5 * static_cast<double>(depth) * std::log(energy);
    }
    return total;
}

}  // namespace ttb
