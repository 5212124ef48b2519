#include "actopo/linalg.hpp"

#include "actopo/error.hpp"

namespace actopo::linalg {

LeastSquaresResult truncated_svd_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                       double relative_cutoff) {
    if (b.size() != a.rows()) throw ValidationError("truncated_svd_solve: size mismatch");
    if (!(relative_cutoff > 0.0)) throw ValidationError("truncated_svd_solve: cutoff must be > 0");

    LeastSquaresResult out;
    out.solution = Eigen::VectorXd::Zero(a.cols());
    if (a.rows() == 0 || a.cols() == 0) return out;
    if (!a.allFinite() || !b.allFinite()) {
        throw ValidationError("truncated_svd_solve: non-finite input");
    }

    const Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sigma = svd.singularValues();
    const double cutoff = relative_cutoff * sigma(0);
    Eigen::VectorXd ub = svd.matrixU().transpose() * b;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > cutoff && sigma(i) > 0.0) {
            ub(i) /= sigma(i);
            ++out.rank;
        } else {
            ub(i) = 0.0;
        }
    }
    out.solution = svd.matrixV() * ub;
    out.residual_norm = (a * out.solution - b).norm();
    return out;
}

}  // namespace actopo::linalg
