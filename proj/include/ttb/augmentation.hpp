#pragma once

#include "ttb/tensor.hpp"

#include <string>
#include <utility>
#include <vector>

namespace ttb {

enum class AugmentMode { basic, padded_overlap };

/// Folding of a rows x cols (x channels) image into an order-f tensor
/// (plus a trailing channel mode when the image has one).
///
/// basic: rows = prod M_i, cols = prod N_i. Pixel row m = m_1 + M_1 (m_2 + M_2 (...)),
/// likewise for columns, and mode i has index m_i + M_i n_i (size M_i N_i).
///
/// padded_overlap: the image is replicate-padded by one pixel on the top and
/// left and by prod M_i - rows >= 1 rows (prod N_i - cols columns) on the
/// bottom and right, giving a (prod M_i + 1) x (prod N_i + 1) canvas. Windows
/// of (M_1 + 1) x (N_1 + 1) pixels at strides (M_1, N_1) form mode 1 with
/// index u + (M_1 + 1) v; the window grid is folded as in basic by the
/// remaining factors.
struct AugmentPlan {
    std::vector<std::pair<std::size_t, std::size_t>> factors;
    AugmentMode mode = AugmentMode::basic;
    std::size_t channels = 1;
    /// Source image size.
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t row_product() const;
    std::size_t col_product() const;
    /// Shape of the augmented tensor.
    Dims output_dims() const;
    /// Shape of the source image: (rows, cols) or (rows, cols, channels).
    Dims image_dims() const;
    void validate() const;
};

/// Plan with the given factors whose image size is the factor product
/// (basic) or the product minus one (padded_overlap, the largest image the
/// canvas admits).
AugmentPlan make_plan(std::vector<std::pair<std::size_t, std::size_t>> factors, AugmentMode mode,
                      std::size_t channels = 1);

/// Output linear index -> source pixel linear index.
std::vector<std::size_t> augment_index_map(const AugmentPlan& plan);
/// Source pixel linear index -> output linear index it is read back from.
std::vector<std::size_t> deaugment_index_map(const AugmentPlan& plan);

DenseTensor augment_basic(const DenseTensor& img, const AugmentPlan& plan);
DenseTensor augment_padded(const DenseTensor& img, const AugmentPlan& plan);
/// Dispatches on plan.mode.
DenseTensor augment(const DenseTensor& img, const AugmentPlan& plan);
/// Observation mask carried through the same map (padding copies the mask).
MaskTensor augment_mask(const MaskTensor& mask, const AugmentPlan& plan);
/// Exact inverse; padded tensors are read from each window's top-left
/// M_1 x N_1 base region.
DenseTensor deaugment(const DenseTensor& t, const AugmentPlan& plan);

std::string to_string(AugmentMode m);
AugmentMode parse_augment_mode(const std::string& s);

/// {"factors": [[M1, N1], ...], "mode": "basic" | "padded", "channels": C, "rows": R, "cols": C}
std::string plan_to_json(const AugmentPlan& plan);
AugmentPlan plan_from_json(const std::string& text);
void save_plan(const std::string& path, const AugmentPlan& plan);
AugmentPlan load_plan(const std::string& path);

}  // namespace ttb
