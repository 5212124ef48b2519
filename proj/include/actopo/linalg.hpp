#pragma once

#include <Eigen/Dense>

namespace actopo::linalg {

struct LeastSquaresResult {
    Eigen::VectorXd solution;
    int rank = 0;             // singular values kept
    double residual_norm = 0; // ||A x - b||_2
};

/// Minimum-norm least squares with singular values below
/// `relative_cutoff * sigma_max` discarded (divide-and-conquer SVD).
LeastSquaresResult truncated_svd_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                       double relative_cutoff);

}  // namespace actopo::linalg
