#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace ttb {

/// Thin SVD, A ~= U diag(S) V^T with S descending and nonnegative.
struct SvdResult {
    Eigen::MatrixXd U;
    Eigen::VectorXd S;
    Eigen::MatrixXd V;
};

/// Full thin SVD. Throws NumericalError on non-finite input.
SvdResult svd(const Eigen::MatrixXd& a);

/// Leading r singular triplets (the Eckart-Young optimal rank-r factors).
SvdResult truncated_svd(const Eigen::MatrixXd& a, std::size_t r);

/// Default relative tolerance for numerical_rank: 1e-8 * max(rows, cols).
double default_rank_tolerance(const Eigen::MatrixXd& a);

/// Count of singular values above rel_tol * S_max; zero matrix has rank 0.
std::size_t numerical_rank(const Eigen::MatrixXd& a, double rel_tol);
std::size_t numerical_rank(const Eigen::MatrixXd& a);

}  // namespace ttb
