#pragma once

#include "ttb/model.hpp"
#include "ttb/tensor.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace ttb {

struct InitConfig {
    /// Initial ranks are capped at rank_cap_multiplier * J_d.
    std::size_t rank_cap_multiplier = 15;
    /// Seed of the N(0, 1) fill for unobserved entries.
    std::uint64_t fill_seed = 0;
    /// Relative tolerance for unfolding ranks; unset uses the linalg default.
    std::optional<double> svd_rel_tol;
    /// Unset: variances start at 1 / (E[lambda_k] E[lambda_l]). Set to r: the
    /// variances of core c start at r times the mean squared entry of its
    /// initial mean.
    std::optional<double> relative_init_variance;
};

/// Left-to-right TT-SVD with prescribed ranks L_1..L_{D+1}.
/// Throws ShapeError when a rank exceeds what the sweep can produce.
TTCores tt_svd(const DenseTensor& t, const std::vector<std::size_t>& ranks);

/// Initial ranks: L_d = min(rank of the unfolding at d-1, cap * J_d), further
/// clamped so the TT-SVD sweep is feasible.
std::vector<std::size_t> max_ranks(const DenseTensor& t, const InitConfig& cfg);

/// Copy of `a` with unobserved entries replaced by seeded N(0, 1) draws.
DenseTensor fill_missing(const DenseTensor& a, const MaskTensor& o, std::uint64_t seed);

/// Initial variational state: TT-SVD means of the filled tensor,
/// E[lambda] = E[tau] = 1 via the prior parameters and, by default, unit
/// variances.
ModelState init_state(const DenseTensor& a, const MaskTensor& o, const InitConfig& cfg,
                      const PriorHyper& prior = {});

}  // namespace ttb
