#pragma once

#include <Eigen/Dense>

#include "actopo/specfun.hpp"

namespace actopo {

/// sum_n c_n G(x - x_n). A Helmholtz solution away from its source points.
class PointSourceSum {
public:
    PointSourceSum(specfun::Dimension d, Eigen::MatrixXd points, Eigen::VectorXd coeffs);

    specfun::Dimension dimension() const noexcept { return g_.dimension(); }
    /// d x M, one source per column.
    const Eigen::MatrixXd& points() const noexcept { return points_; }
    const Eigen::VectorXd& coeffs() const noexcept { return coeffs_; }
    Eigen::Index size() const noexcept { return coeffs_.size(); }

    double value(const Eigen::VectorXd& x) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
    void value_and_gradient(const Eigen::VectorXd& x, double& value, Eigen::VectorXd& grad) const;

    /// Distance from x to the nearest source (infinity when empty).
    double distance_to_sources(const Eigen::VectorXd& x) const;
    /// Smallest |x_n|.
    double min_source_radius() const;

    /// Collocation matrix A(i, n) = G(y_i - x_n) for targets y (d x N).
    static Eigen::MatrixXd collocation_matrix(const specfun::FundamentalSolution& g,
                                              const Eigen::MatrixXd& targets,
                                              const Eigen::MatrixXd& sources);

private:
    specfun::FundamentalSolution g_;
    Eigen::MatrixXd points_;
    Eigen::VectorXd coeffs_;
};

}  // namespace actopo
