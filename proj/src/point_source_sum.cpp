#include "actopo/point_source_sum.hpp"

#include <limits>

#include "actopo/error.hpp"

namespace actopo {

PointSourceSum::PointSourceSum(specfun::Dimension d, Eigen::MatrixXd points,
                               Eigen::VectorXd coeffs)
    : g_(d), points_(std::move(points)), coeffs_(std::move(coeffs)) {
    if (points_.cols() != coeffs_.size()) {
        throw ValidationError("PointSourceSum: points and coefficients differ in count");
    }
    if (points_.cols() > 0 && points_.rows() != d.value()) {
        throw ValidationError("PointSourceSum: point dimension does not match d");
    }
}

double PointSourceSum::value(const Eigen::VectorXd& x) const {
    double s = 0.0;
    for (Eigen::Index n = 0; n < coeffs_.size(); ++n) {
        if (coeffs_(n) == 0.0) continue;
        s += coeffs_(n) * g_((x - points_.col(n)).norm());
    }
    return s;
}

Eigen::VectorXd PointSourceSum::gradient(const Eigen::VectorXd& x) const {
    double v = 0.0;
    Eigen::VectorXd grad;
    value_and_gradient(x, v, grad);
    return grad;
}

void PointSourceSum::value_and_gradient(const Eigen::VectorXd& x, double& value,
                                        Eigen::VectorXd& grad) const {
    value = 0.0;
    grad = Eigen::VectorXd::Zero(x.size());
    for (Eigen::Index n = 0; n < coeffs_.size(); ++n) {
        if (coeffs_(n) == 0.0) continue;
        const Eigen::VectorXd diff = x - points_.col(n);
        const double r = diff.norm();
        double g = 0.0, dg = 0.0;
        g_.value_and_derivative(r, g, dg);
        value += coeffs_(n) * g;
        grad += (coeffs_(n) * dg / r) * diff;
    }
}

double PointSourceSum::distance_to_sources(const Eigen::VectorXd& x) const {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index n = 0; n < points_.cols(); ++n) {
        best = std::min(best, (x - points_.col(n)).norm());
    }
    return best;
}

double PointSourceSum::min_source_radius() const {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index n = 0; n < points_.cols(); ++n) best = std::min(best, points_.col(n).norm());
    return best;
}

Eigen::MatrixXd PointSourceSum::collocation_matrix(const specfun::FundamentalSolution& g,
                                                   const Eigen::MatrixXd& targets,
                                                   const Eigen::MatrixXd& sources) {
    Eigen::MatrixXd a(targets.cols(), sources.cols());
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < targets.cols(); ++i) {
        for (Eigen::Index n = 0; n < sources.cols(); ++n) {
            a(i, n) = g((targets.col(i) - sources.col(n)).norm());
        }
    }
    return a;
}

}  // namespace actopo
