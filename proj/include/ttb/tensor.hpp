#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ttb {

using Dims = std::vector<std::size_t>;

/// Number of elements implied by a dimension list.
std::size_t num_elements(std::span<const std::size_t> dims);

/// Order-D real array stored with the first index varying fastest.
class DenseTensor {
public:
    DenseTensor() = default;
    explicit DenseTensor(Dims dims, double fill = 0.0);
    DenseTensor(Dims dims, std::vector<double> data);

    std::size_t order() const { return dims_.size(); }
    const Dims& dims() const { return dims_; }
    std::size_t dim(std::size_t mode) const { return dims_.at(mode); }
    std::size_t size() const { return data_.size(); }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    double& operator[](std::size_t linear) { return data_[linear]; }
    double operator[](std::size_t linear) const { return data_[linear]; }

    std::size_t linear_index(std::span<const std::size_t> index) const;
    double& at(std::span<const std::size_t> index) { return data_[linear_index(index)]; }
    double at(std::span<const std::size_t> index) const { return data_[linear_index(index)]; }

    double frobenius_norm() const;

    friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

private:
    Dims dims_;
    std::vector<double> data_;
};

/// 0/1 observation indicator with the same layout as DenseTensor.
class MaskTensor {
public:
    MaskTensor() = default;
    explicit MaskTensor(Dims dims, bool observed = true);
    MaskTensor(Dims dims, std::vector<std::uint8_t> bits);

    std::size_t order() const { return dims_.size(); }
    const Dims& dims() const { return dims_; }
    std::size_t size() const { return bits_.size(); }

    bool observed(std::size_t linear) const { return bits_[linear] != 0; }
    void set(std::size_t linear, bool value) { bits_[linear] = value ? 1 : 0; }
    std::span<const std::uint8_t> bits() const { return bits_; }

    /// |Omega|, the number of observed entries.
    std::size_t observed_count() const;
    double observed_fraction() const;
    /// Linear indices of observed entries in increasing order.
    std::vector<std::size_t> observed_indices() const;

    friend bool operator==(const MaskTensor&, const MaskTensor&) = default;

private:
    Dims dims_;
    std::vector<std::uint8_t> bits_;
};

/// Order-3 array shaped (rows, cols, depth), first index fastest. Used for TT
/// cores (L_d, L_{d+1}, J_d) and for the per-element posterior moments.
///
/// Frontal slice j is a contiguous column-major rows x cols matrix; a fiber
/// (k, l, :) is strided by rows * cols.
class CoreArray {
public:
    using SliceMap = Eigen::Map<Eigen::MatrixXd>;
    using ConstSliceMap = Eigen::Map<const Eigen::MatrixXd>;

    CoreArray() = default;
    CoreArray(std::size_t rows, std::size_t cols, std::size_t depth, double fill = 0.0);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t depth() const { return depth_; }
    std::size_t size() const { return data_.size(); }
    std::size_t slice_size() const { return rows_ * cols_; }

    double& operator()(std::size_t k, std::size_t l, std::size_t j) {
        return data_[k + rows_ * (l + cols_ * j)];
    }
    double operator()(std::size_t k, std::size_t l, std::size_t j) const {
        return data_[k + rows_ * (l + cols_ * j)];
    }

    SliceMap slice(std::size_t j);
    ConstSliceMap slice(std::size_t j) const;

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    /// Copy keeping only the listed row / column indices (in order).
    CoreArray select(std::span<const std::size_t> keep_rows,
                     std::span<const std::size_t> keep_cols) const;

    friend bool operator==(const CoreArray&, const CoreArray&) = default;

private:
    std::size_t rows_ = 0, cols_ = 0, depth_ = 0;
    std::vector<double> data_;
};

/// Deterministic tensor-train representation.
struct TTCores {
    std::vector<CoreArray> cores;

    std::size_t order() const { return cores.size(); }
    /// L_1 .. L_{D+1}.
    std::vector<std::size_t> ranks() const;
    Dims dims() const;
    /// Throws ShapeError unless L_1 = L_{D+1} = 1 and interface ranks agree.
    void validate() const;
};

/// Contract TT cores into the full tensor.
DenseTensor tt_contract(const TTCores& cores);

/// Single element of the TT contraction (product of frontal slices).
double tt_element(const TTCores& cores, std::span<const std::size_t> index);

/// Standard Kronecker product.
Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Unfold at split `mode` (1 <= mode <= D-1): rows enumerate the first `mode`
/// indices, columns the rest, both first-index-fastest.
Eigen::MatrixXd unfold(const DenseTensor& t, std::size_t mode);

/// Inverse of unfold for the given dims.
DenseTensor refold(const Eigen::MatrixXd& m, const Dims& dims);

/// ||O o (a - yhat)||_F.
double masked_residual_norm(const DenseTensor& a, const DenseTensor& yhat, const MaskTensor& o);

}  // namespace ttb
