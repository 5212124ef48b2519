#include "actopo/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "actopo/error.hpp"

namespace actopo::quad {

namespace {

// P_n(x) and P_n'(x) by the three-term recurrence.
void legendre(int n, double x, double& p, double& dp) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    p = n == 0 ? 1.0 : p1;
    dp = n * (x * p1 - p0) / (x * x - 1.0);
}

}  // namespace

Rule gauss_legendre(int n, double a, double b) {
    if (n < 1) throw ValidationError("gauss_legendre: need at least one node");
    Rule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double p = 0.0, dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            legendre(n, x, p, dp);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        legendre(n, x, p, dp);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = mid - half * x;
        rule.nodes[n - 1 - i] = mid + half * x;
        rule.weights[i] = half * w;
        rule.weights[n - 1 - i] = half * w;
    }
    return rule;
}

Eigen::MatrixXd frame_with_first_axis(const Eigen::VectorXd& axis) {
    const int d = static_cast<int>(axis.size());
    Eigen::MatrixXd frame(d, d);
    frame.col(0) = axis.normalized();
    int filled = 1;
    for (int k = 0; k < d && filled < d; ++k) {
        Eigen::VectorXd v = Eigen::VectorXd::Unit(d, k);
        for (int j = 0; j < filled; ++j) v -= frame.col(j).dot(v) * frame.col(j);
        if (v.norm() > 1e-8) {
            frame.col(filled++) = v.normalized();
        }
    }
    return frame;
}

namespace {

}  // namespace

Rule gauss_gegenbauer(int n, double lam) {
    if (n < 1) throw ValidationError("gauss_gegenbauer: need at least one node");
    if (!(lam > -0.5)) throw ValidationError("gauss_gegenbauer: lam must exceed -1/2");
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = std::sqrt(k * (k + 2.0 * lam - 1.0) / (4.0 * (k + lam) * (k + lam - 1.0)));
        jac(k, k - 1) = jac(k - 1, k) = b;
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
    const double mu0 = std::sqrt(std::numbers::pi) * std::tgamma(lam + 0.5) / std::tgamma(lam + 1.0);
    Rule rule;
    for (int i = 0; i < n; ++i) {
        rule.nodes.push_back(es.eigenvalues()(i));
        rule.weights.push_back(mu0 * es.eigenvectors()(0, i) * es.eigenvectors()(0, i));
    }
    return rule;
}

namespace {

// Points on S^{n-1} (n coordinates) in the standard frame, first axis polar.
void build_sphere(int n, int polar, int azimuth, std::vector<std::vector<double>>& pts,
                  std::vector<double>& wts) {
    if (n == 2) {
        for (int k = 0; k < azimuth; ++k) {
            const double phi = 2.0 * std::numbers::pi * k / azimuth;
            pts.push_back({std::cos(phi), std::sin(phi)});
            wts.push_back(2.0 * std::numbers::pi / azimuth);
        }
        return;
    }
    std::vector<std::vector<double>> sub_pts;
    std::vector<double> sub_wts;
    build_sphere(n - 1, polar, azimuth, sub_pts, sub_wts);
    const Rule t = gauss_gegenbauer(polar, 0.5 * (n - 2));
    for (int i = 0; i < polar; ++i) {
        const double c = t.nodes[i];
        const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
        for (std::size_t k = 0; k < sub_pts.size(); ++k) {
            std::vector<double> p(n);
            p[0] = c;
            for (int j = 1; j < n; ++j) p[j] = s * sub_pts[k][j - 1];
            pts.push_back(std::move(p));
            wts.push_back(t.weights[i] * sub_wts[k]);
        }
    }
}

}  // namespace

SphereRule sphere_product_rule(int d, int polar_nodes, int azimuth_nodes) {
    return sphere_product_rule(d, polar_nodes, azimuth_nodes, Eigen::VectorXd::Unit(d, d - 1));
}

SphereRule sphere_product_rule(int d, int polar_nodes, int azimuth_nodes,
                               const Eigen::VectorXd& axis) {
    if (d < 2) throw ValidationError("sphere_product_rule: d must be >= 2");
    if (polar_nodes < 1 || azimuth_nodes < 1) {
        throw ValidationError("sphere_product_rule: node counts must be positive");
    }
    std::vector<std::vector<double>> pts;
    std::vector<double> wts;
    build_sphere(d, polar_nodes, azimuth_nodes, pts, wts);
    const Eigen::MatrixXd frame = frame_with_first_axis(axis);
    SphereRule rule;
    rule.points.resize(d, static_cast<Eigen::Index>(pts.size()));
    for (std::size_t k = 0; k < pts.size(); ++k) {
        Eigen::VectorXd local = Eigen::Map<const Eigen::VectorXd>(pts[k].data(), d);
        rule.points.col(static_cast<Eigen::Index>(k)) = frame * local;
    }
    rule.weights = std::move(wts);
    return rule;
}

}  // namespace actopo::quad
