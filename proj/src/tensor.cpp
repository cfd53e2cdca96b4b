#include "ttb/tensor.hpp"

#include "ttb/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ttb {

namespace {

void check_dims(const Dims& dims) {
    if (dims.empty()) throw ShapeError("tensor order must be at least 1");
    for (auto d : dims)
        if (d == 0) throw ShapeError("tensor dimensions must be positive");
}

std::string dims_str(const Dims& dims) {
    std::string s = "[";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(dims[i]);
    }
    return s + "]";
}

}  // namespace

std::size_t num_elements(std::span<const std::size_t> dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

DenseTensor::DenseTensor(Dims dims, double fill) : dims_(std::move(dims)) {
    check_dims(dims_);
    data_.assign(num_elements(dims_), fill);
}

DenseTensor::DenseTensor(Dims dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
    check_dims(dims_);
    if (data_.size() != num_elements(dims_))
        throw ShapeError("data length " + std::to_string(data_.size()) +
                         " does not match dims " + dims_str(dims_));
}

std::size_t DenseTensor::linear_index(std::span<const std::size_t> index) const {
    if (index.size() != dims_.size()) throw ShapeError("index order mismatch");
    std::size_t linear = 0, stride = 1;
    for (std::size_t d = 0; d < dims_.size(); ++d) {
        if (index[d] >= dims_[d]) throw ShapeError("index out of range");
        linear += index[d] * stride;
        stride *= dims_[d];
    }
    return linear;
}

double DenseTensor::frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
}

MaskTensor::MaskTensor(Dims dims, bool observed) : dims_(std::move(dims)) {
    check_dims(dims_);
    bits_.assign(num_elements(dims_), observed ? 1 : 0);
}

MaskTensor::MaskTensor(Dims dims, std::vector<std::uint8_t> bits)
    : dims_(std::move(dims)), bits_(std::move(bits)) {
    check_dims(dims_);
    if (bits_.size() != num_elements(dims_)) throw ShapeError("mask length does not match dims");
    for (auto& b : bits_)
        if (b > 1) throw ShapeError("mask entries must be 0 or 1");
}

std::size_t MaskTensor::observed_count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

double MaskTensor::observed_fraction() const {
    return bits_.empty() ? 0.0
                         : static_cast<double>(observed_count()) / static_cast<double>(bits_.size());
}

std::vector<std::size_t> MaskTensor::observed_indices() const {
    std::vector<std::size_t> idx;
    idx.reserve(bits_.size());
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i]) idx.push_back(i);
    return idx;
}

CoreArray::CoreArray(std::size_t rows, std::size_t cols, std::size_t depth, double fill)
    : rows_(rows), cols_(cols), depth_(depth), data_(rows * cols * depth, fill) {}

CoreArray::SliceMap CoreArray::slice(std::size_t j) {
    return SliceMap(data_.data() + j * slice_size(), static_cast<Eigen::Index>(rows_),
                    static_cast<Eigen::Index>(cols_));
}

CoreArray::ConstSliceMap CoreArray::slice(std::size_t j) const {
    return ConstSliceMap(data_.data() + j * slice_size(), static_cast<Eigen::Index>(rows_),
                         static_cast<Eigen::Index>(cols_));
}

CoreArray CoreArray::select(std::span<const std::size_t> keep_rows,
                            std::span<const std::size_t> keep_cols) const {
    CoreArray out(keep_rows.size(), keep_cols.size(), depth_);
    for (std::size_t j = 0; j < depth_; ++j)
        for (std::size_t l = 0; l < keep_cols.size(); ++l)
            for (std::size_t k = 0; k < keep_rows.size(); ++k)
                out(k, l, j) = (*this)(keep_rows[k], keep_cols[l], j);
    return out;
}

std::vector<std::size_t> TTCores::ranks() const {
    std::vector<std::size_t> r;
    if (cores.empty()) return r;
    r.reserve(cores.size() + 1);
    for (const auto& c : cores) r.push_back(c.rows());
    r.push_back(cores.back().cols());
    return r;
}

Dims TTCores::dims() const {
    Dims d;
    d.reserve(cores.size());
    for (const auto& c : cores) d.push_back(c.depth());
    return d;
}

void TTCores::validate() const {
    if (cores.empty()) throw ShapeError("TT needs at least one core");
    if (cores.front().rows() != 1) throw ShapeError("first TT rank must be 1");
    if (cores.back().cols() != 1) throw ShapeError("last TT rank must be 1");
    for (std::size_t d = 0; d < cores.size(); ++d) {
        const auto& c = cores[d];
        if (c.rows() == 0 || c.cols() == 0 || c.depth() == 0)
            throw ShapeError("core " + std::to_string(d) + " has an empty dimension");
        if (d + 1 < cores.size() && c.cols() != cores[d + 1].rows())
            throw ShapeError("interface rank mismatch between cores " + std::to_string(d) +
                             " and " + std::to_string(d + 1));
    }
}

DenseTensor tt_contract(const TTCores& tt) {
    tt.validate();
    // Rows of `partial` enumerate the leading indices (first fastest), columns
    // the open rank index.
    Eigen::MatrixXd partial = Eigen::MatrixXd::Ones(1, 1);
    for (const auto& core : tt.cores) {
        const auto prefix = partial.rows();
        Eigen::MatrixXd next(prefix * static_cast<Eigen::Index>(core.depth()),
                             static_cast<Eigen::Index>(core.cols()));
        for (std::size_t j = 0; j < core.depth(); ++j)
            next.middleRows(static_cast<Eigen::Index>(j) * prefix, prefix).noalias() =
                partial * core.slice(j);
        partial = std::move(next);
    }
    std::vector<double> data(partial.data(), partial.data() + partial.size());
    return DenseTensor(tt.dims(), std::move(data));
}

double tt_element(const TTCores& tt, std::span<const std::size_t> index) {
    if (index.size() != tt.order()) throw ShapeError("index order mismatch");
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Ones(1);
    for (std::size_t d = 0; d < tt.order(); ++d) row = row * tt.cores[d].slice(index[d]);
    return row(0);
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Eigen::MatrixXd unfold(const DenseTensor& t, std::size_t mode) {
    if (mode < 1 || mode + 1 > t.order())
        throw ShapeError("unfold mode must lie in [1, D-1]");
    std::size_t rows = 1;
    for (std::size_t d = 0; d < mode; ++d) rows *= t.dim(d);
    const std::size_t cols = t.size() / rows;
    // First-index-fastest storage is already the column-major unfolding.
    return Eigen::Map<const Eigen::MatrixXd>(t.data().data(), static_cast<Eigen::Index>(rows),
                                             static_cast<Eigen::Index>(cols));
}

DenseTensor refold(const Eigen::MatrixXd& m, const Dims& dims) {
    if (static_cast<std::size_t>(m.size()) != num_elements(dims))
        throw ShapeError("refold: element count mismatch");
    return DenseTensor(dims, std::vector<double>(m.data(), m.data() + m.size()));
}

double masked_residual_norm(const DenseTensor& a, const DenseTensor& yhat, const MaskTensor& o) {
    if (a.dims() != yhat.dims() || a.dims() != o.dims())
        throw ShapeError("masked_residual_norm: dims mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (o.observed(i)) {
            const double r = a[i] - yhat[i];
            s += r * r;
        }
    return std::sqrt(s);
}

}  // namespace ttb
