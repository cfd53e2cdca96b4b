#include "ttb/linalg.hpp"

#include "ttb/errors.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <string>

namespace ttb {

SvdResult svd(const Eigen::MatrixXd& a) {
    if (!a.allFinite()) throw NumericalError("svd: non-finite input");
    if (a.size() == 0) return {Eigen::MatrixXd(a.rows(), 0), Eigen::VectorXd(0), Eigen::MatrixXd(a.cols(), 0)};
    Eigen::BDCSVD<Eigen::MatrixXd> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (dec.info() != Eigen::Success) throw NumericalError("svd: decomposition failed");
    return {dec.matrixU(), dec.singularValues(), dec.matrixV()};
}

SvdResult truncated_svd(const Eigen::MatrixXd& a, std::size_t r) {
    const auto full_rank = static_cast<std::size_t>(std::min(a.rows(), a.cols()));
    if (r < 1 || r > full_rank)
        throw ShapeError("truncated_svd: rank " + std::to_string(r) + " outside [1, " +
                         std::to_string(full_rank) + "]");
    SvdResult full = svd(a);
    const auto n = static_cast<Eigen::Index>(r);
    return {full.U.leftCols(n), full.S.head(n), full.V.leftCols(n)};
}

double default_rank_tolerance(const Eigen::MatrixXd& a) {
    return 1e-8 * static_cast<double>(std::max(a.rows(), a.cols()));
}

std::size_t numerical_rank(const Eigen::MatrixXd& a, double rel_tol) {
    if (!(rel_tol > 0.0)) throw std::invalid_argument("numerical_rank: rel_tol must be positive");
    if (a.size() == 0) return 0;
    if (!a.allFinite()) throw NumericalError("numerical_rank: non-finite input");
    // Singular values only; the Gram route would square the conditioning.
    Eigen::BDCSVD<Eigen::MatrixXd> dec(a);
    const Eigen::VectorXd& s = dec.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    const double cut = rel_tol * s(0);
    return static_cast<std::size_t>((s.array() > cut).count());
}

std::size_t numerical_rank(const Eigen::MatrixXd& a) {
    return numerical_rank(a, default_rank_tolerance(a));
}

}  // namespace ttb
