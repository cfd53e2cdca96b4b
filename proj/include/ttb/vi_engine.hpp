#pragma once

#include "ttb/model.hpp"
#include "ttb/tensor.hpp"
#include "ttb/tt_init.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ttb {

/// Observed entries of a data tensor, gathered once per fit.
class ObservedData {
public:
    ObservedData(const DenseTensor& a, const MaskTensor& o);

    const Dims& dims() const { return dims_; }
    std::size_t total() const { return total_; }
    std::size_t count() const { return index_.size(); }
    double fraction() const { return static_cast<double>(count()) / static_cast<double>(total_); }
    bool fully_observed() const { return count() == total_; }

    std::span<const std::size_t> indices() const { return index_; }
    std::span<const double> values() const { return value_; }
    /// Linear indices of unobserved entries.
    std::span<const std::size_t> missing() const { return missing_; }
    /// ||O o A||_F^2.
    double observed_energy() const { return energy_; }

private:
    Dims dims_;
    std::size_t total_ = 0;
    std::vector<std::size_t> index_;
    std::vector<double> value_;
    std::vector<std::size_t> missing_;
    double energy_ = 0.0;
};

/// Expected chain products for every index prefix (left) or suffix (right) of
/// one core.
///
/// Entry e of a left table holds t = prod_{n<c} E[G^(n)_{:,:,j_n}] (length
/// L_c) and, optionally, the Kronecker second moment
/// b = prod_{n<c} E[G^(n)_{:,:,j_n} (x) G^(n)_{:,:,j_n}] stored as the
/// symmetric L_c x L_c matrix whose (k, k') entry is b_{k L_c + k'}. The
/// prefix (j_0..j_{c-1}) maps to e first-index-fastest. Right tables mirror
/// this for suffixes (j_{c+1}..j_{D-1}) with length L_{c+1}.
struct ChainTable {
    std::size_t rank = 1;
    std::size_t count = 1;
    bool has_second = false;
    std::vector<double> t;
    std::vector<double> b;

    Eigen::Map<const Eigen::VectorXd> mean(std::size_t e) const {
        return Eigen::Map<const Eigen::VectorXd>(t.data() + e * rank, static_cast<Eigen::Index>(rank));
    }
    Eigen::Map<const Eigen::MatrixXd> second(std::size_t e) const {
        const auto r = static_cast<Eigen::Index>(rank);
        return Eigen::Map<const Eigen::MatrixXd>(b.data() + e * rank * rank, r, r);
    }
};

/// t^(<d), t^(>d), b^(<d), b^(>d) for one core, tabulated over all index
/// prefixes and suffixes. Valid while every core except `core` is unchanged.
struct ContractionCaches {
    std::size_t core = 0;
    ChainTable left;
    ChainTable right;

    static ContractionCaches build(const ModelState& s, std::size_t core, bool second_moments);
};

/// Sum over all prefixes of b^(<c) as an L_c x L_c matrix (the per-mode sum
/// product used by the fully observed path).
Eigen::MatrixXd summed_left_second_moment(const ModelState& s, std::size_t core);
/// Sum over all suffixes of b^(>c) as an L_{c+1} x L_{c+1} matrix.
Eigen::MatrixXd summed_right_second_moment(const ModelState& s, std::size_t core);

/// E[G_{:,:,j} (x) G_{:,:,j}] = E[G] (x) E[G] + V with V holding v_{k,l,j} at
/// (k L_c + k, l L_{c+1} + l). Shape L_c^2 x L_{c+1}^2.
Eigen::MatrixXd expected_kron_slice(const CorePosterior& core, std::size_t j);

struct UpdateOptions {
    /// Use the subtractive fast path at or above this observed fraction.
    double fast_path_observed_fraction = 0.9;
    std::size_t threads = 1;
};

/// Mean-field update of every fiber of one core.
///
/// Per slice j the fiber updates share the coefficient matrix
/// C_j[(k,l),(k',l')] = sum_{observed, j_c = j} b^(<c)_{k L + k'} b^(>c)_{l L' + l'}
/// and h_j[(k,l)] = sum a t^(<c)_k t^(>c)_l. Variances are
/// 1 / (E[tau] C_j[(k,l),(k,l)] + E[lambda_k] E[lambda_l]); means solve
/// (E[tau] C_j + diag(E[lambda_k] E[lambda_l])) m = E[tau] h_j, the common
/// fixed point of the single-fiber updates, so each fiber ends KL-optimal
/// given all others.
void update_core(ModelState& s, const ContractionCaches& caches, const ObservedData& data,
                 std::size_t core, const UpdateOptions& opts = {});

/// Gamma update of every lambda_k on one interface (1 <= iface <= D-1).
void update_lambda(ModelState& s, std::size_t iface);

/// Gamma update of tau. `caches` must be built for the last core.
void update_tau(ModelState& s, const ContractionCaches& caches, const ObservedData& data,
                const UpdateOptions& opts = {});

/// c(j) = sum_{observed, j_c = j} b^(<c)_{k L + k} b^(>c)_{l L' + l} via
/// per-mode sums; when not fully observed, the missing entries are
/// subtracted. Throws std::logic_error below the observed-fraction threshold.
std::vector<double> fast_c(const ModelState& s, const MaskTensor& o, std::size_t core, std::size_t k,
                           std::size_t l, double min_observed_fraction = 0.9);

struct PruneResult {
    /// Removed indices per interface (original numbering).
    std::vector<std::vector<std::size_t>> removed;
    bool any() const;
};

/// Drop slice pairs whose E[lambda_k] exceeds ratio * min_k E[lambda_k].
PruneResult prune_ranks(ModelState& s, double ratio);

/// Posterior-mean reconstruction.
DenseTensor reconstruct(const ModelState& s);

struct IterationRecord {
    std::size_t iteration = 0;
    std::vector<std::size_t> ranks;
    /// ||O o (A - Yhat)||_F / ||O o A||_F.
    double rse = 0.0;
    double e_tau = 0.0;
    double rel_change = 0.0;
};

struct FitOptions {
    std::size_t max_iters = 100;
    /// Stop when ||O o (Yhat_t - Yhat_{t-1})|| / ||O o Yhat_{t-1}|| < rel_tol.
    double rel_tol = 1e-6;
    double prune_ratio = 100.0;
    double fast_path_observed_fraction = 0.9;
    /// Seed of the initial random fill.
    std::uint64_t seed = 0;
    std::size_t rank_cap_multiplier = 15;
    std::optional<double> svd_rel_tol;
    /// See InitConfig::relative_init_variance.
    std::optional<double> relative_init_variance;
    std::size_t threads = 1;
    /// Called after every sweep.
    std::function<void(const IterationRecord&)> on_iteration;

    void validate() const;
};

enum class FitStatus { converged, max_iters, failed };
std::string to_string(FitStatus s);

struct FitReport {
    std::vector<std::vector<std::size_t>> ranks_history;
    /// Per-iteration fit error on the observed entries.
    std::vector<double> rse_history;
    double e_tau = 0.0;
    std::size_t iterations = 0;
    double wall_time_ms = 0.0;
    FitStatus status = FitStatus::max_iters;
    std::string message;
    std::vector<std::size_t> initial_ranks;
};

struct FitResult {
    ModelState state;
    FitReport report;
};

/// Full variational fit: init, then sweeps of cores -> lambdas -> tau -> prune.
/// On a numerical failure the last valid state is returned with
/// status == failed.
FitResult fit(const DenseTensor& a, const MaskTensor& o, const PriorHyper& prior = {},
              const FitOptions& opts = {});

/// Run sweeps on an existing state (e.g. a resumed checkpoint).
FitReport run_sweeps(ModelState& s, const DenseTensor& a, const MaskTensor& o, const FitOptions& opts);

/// {"ranks_history", "rse_history", "e_tau", "iterations", "wall_time_ms", ...}
std::string fit_report_json(const FitReport& r, int indent = 2);
/// One CSV row: iter,"r1;r2;...",rse,e_tau
std::string iteration_csv_row(const IterationRecord& rec);
inline constexpr const char* kIterationCsvHeader = "iter,ranks,rse,e_tau";

}  // namespace ttb
