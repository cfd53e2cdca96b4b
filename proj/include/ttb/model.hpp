#pragma once

#include "ttb/tensor.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ttb {

// Indexing used throughout the engine: cores are 0-based (core c has shape
// (L_c, L_{c+1}, J_c) with ranks[0] = ranks[D] = 1), and rank interfaces are
// numbered 0..D. Interface i sits between core i-1 and core i; the
// precisions lambda live on interfaces 1..D-1, while interfaces 0 and D carry
// the constant 1.

/// Floor applied to rates and variances before they are divided by.
inline constexpr double kPositiveFloor = 1e-12;

/// Gamma distribution in shape-rate form: rate^a x^(a-1) e^(-rate x) / Gamma(a).
struct GammaParams {
    double shape = 1e-6;
    double rate = 1e-6;
    double mean() const { return shape / rate; }
    friend bool operator==(const GammaParams&, const GammaParams&) = default;
};

/// Prior hyperparameters of the Gamma precisions.
///
/// alpha/beta are indexed [interface][k]; interfaces 0 and D are unused and
/// kept empty. When an interface list is shorter than the rank it is padded
/// with default_alpha / default_beta by resized().
struct PriorHyper {
    std::vector<std::vector<double>> alpha;
    std::vector<std::vector<double>> beta;
    double alpha_tau = 1e-6;
    double beta_tau = 1e-6;
    double default_alpha = 1e-6;
    double default_beta = 1e-6;

    PriorHyper resized(const std::vector<std::size_t>& ranks) const;
    void validate() const;
    friend bool operator==(const PriorHyper&, const PriorHyper&) = default;
};

/// Mean-field posterior of one core: independent Gaussians per element.
struct CorePosterior {
    CoreArray mean;
    CoreArray var;
    /// E[G^2] = mean^2 + var.
    double second_moment(std::size_t k, std::size_t l, std::size_t j) const {
        const double m = mean(k, l, j);
        return m * m + var(k, l, j);
    }
    friend bool operator==(const CorePosterior&, const CorePosterior&) = default;
};

/// Gamma posteriors of lambda, indexed [interface][k] like PriorHyper.
struct LambdaPosterior {
    std::vector<std::vector<GammaParams>> iface;

    /// E[lambda_k] on the given interface; 1 on the two outer interfaces.
    double mean(std::size_t interface, std::size_t k) const;
    friend bool operator==(const LambdaPosterior&, const LambdaPosterior&) = default;
};

struct TauPosterior : GammaParams {};

/// Variational posterior over cores, lambdas and the noise precision tau.
struct ModelState {
    std::vector<CorePosterior> cores;
    LambdaPosterior lambdas;
    TauPosterior tau;
    PriorHyper prior;
    std::vector<std::size_t> ranks;

    std::size_t order() const { return cores.size(); }
    Dims dims() const;
    /// Posterior-mean cores as a deterministic TT.
    TTCores mean_cores() const;
    /// Shapes, rank consistency and strict positivity; throws on violation.
    void validate() const;

    friend bool operator==(const ModelState&, const ModelState&) = default;
};

// Checkpoint format: "TTMS" | u32 version | payload in declaration order
// (cores, lambdas, tau, prior, ranks), sizes as u64 and reals as f64,
// little-endian.
inline constexpr std::uint32_t kModelStateVersion = 1;
void write_model_state(std::ostream& out, const ModelState& s);
ModelState read_model_state(std::istream& in);
void save_model_state(const std::string& path, const ModelState& s);
ModelState load_model_state(const std::string& path);

/// Hyperparameters of the univariate Gaussian-product-Gamma model
/// x ~ N(0, 1/(lambda1 lambda2)), lambda_i ~ Gamma(alpha_i, beta_i).
struct ProductGammaHyper {
    double alpha1 = 1.0, beta1 = 1.0, alpha2 = 1.0, beta2 = 1.0;
};

/// Conditional p(lambda1 | x, lambda2): Gamma(alpha1 + 1/2, lambda2 x^2 / 2 + beta1).
GammaParams lambda1_conditional(double x, double lambda2, const ProductGammaHyper& h);

/// Log of the joint density p(x, lambda1, lambda2).
double product_gamma_log_joint(double x, double lambda1, double lambda2, const ProductGammaHyper& h);

struct ConjugacyCheck {
    double empirical_mean = 0.0;
    double empirical_var = 0.0;
    double analytic_mean = 0.0;
    double analytic_var = 0.0;
    /// Monte-Carlo standard errors of the two empirical moments.
    double mean_stderr = 0.0;
    double var_stderr = 0.0;
    bool within(double sigmas) const;
};

/// Self-normalised importance sampling of p(lambda1 | x, lambda2) using the
/// unnormalised joint as target. The proposal is a Gamma with the analytic
/// shape but a 30% smaller rate, so weights are non-trivial and any error in
/// the closed form shows up as a moment mismatch.
ConjugacyCheck conjugacy_oracle(double x, double lambda2, const ProductGammaHyper& h,
                                std::size_t n_samples, std::uint64_t seed);

/// Unnormalised log marginal of a horizontal slice G_{k,:,:} in the
/// alpha, beta -> 0 limit: sum over fibers l of -(J/2) log(sum_j G_{k,l,j}^2).
/// `slice` is J x L_{d+1}, one column per fiber; `depth` must equal J.
/// Returns -inf if any column is all zero.
double slice_prior_log_density(const Eigen::MatrixXd& slice, std::size_t depth);

}  // namespace ttb
