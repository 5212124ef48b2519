#pragma once

#include <vector>

#include <Eigen/Dense>

namespace actopo::quad {

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [a, b].
Rule gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// n-point Gauss rule for the weight (1 - t^2)^{lam - 1/2} on [-1, 1] (Golub-Welsch).
Rule gauss_gegenbauer(int n, double lam);

/// Product quadrature on the unit sphere S^{d-1} in R^d. Columns of
/// `points` are unit vectors; weights sum to |S^{d-1}|.
/// `polar_nodes` Gauss-Gegenbauer nodes in the cosine of every polar angle and
/// `azimuth_nodes` uniform nodes for the last circle. The first axis of
/// the recursion is `axis` (a unit vector), so zonal integrands about it
/// are integrated by the polar rule alone.
struct SphereRule {
    Eigen::MatrixXd points;
    std::vector<double> weights;
};

SphereRule sphere_product_rule(int d, int polar_nodes, int azimuth_nodes);
SphereRule sphere_product_rule(int d, int polar_nodes, int azimuth_nodes,
                               const Eigen::VectorXd& axis);

/// An orthonormal basis whose first vector is `axis`.
Eigen::MatrixXd frame_with_first_axis(const Eigen::VectorXd& axis);

}  // namespace actopo::quad
