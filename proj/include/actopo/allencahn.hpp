#pragma once

// Promotion of an entire Helmholtz solution w to a bounded solution of
// Delta u + u - u^3 = 0 by the fixed-point iteration
//   u_0 = delta w,   u_{n+1} = delta w + G * (u_n^3),
// with delta = eps / (2 ||w||_{0,(d-1)/2}). Requires d >= 4.

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "actopo/runge.hpp"
#include "actopo/weighted.hpp"

namespace actopo::allencahn {

enum class Symmetry { automatic, radial, zonal };

struct PicardParams {
    double tol = 1e-8;
    int max_iter = 60;
    int max_halvings = 10;
    Symmetry symmetry = Symmetry::automatic;
    /// Polar nodes for zonal runs; 0 picks 3 lmax + 2 (at least 16).
    int polar_nodes = 0;
    weighted::ConvolutionParams conv;
};

struct SolutionBundle {
    explicit SolutionBundle(runge::FourierBesselSolution w_) : w(std::move(w_)) {}

    runge::FourierBesselSolution w;
    specfun::Dimension d{4};
    bool zonal = false;
    double eps = 0.0;            // eps actually used (after halvings)
    double eps_requested = 0.0;
    int halvings = 0;
    double w_norm = 0.0;         // ||w||_{0,(d-1)/2} on the grid
    double delta = 0.0;
    int iterations = 0;
    weighted::WeightedField u;   // final iterate on the grid
    weighted::WeightedField gu3; // G * (u_n^3), so u = delta w + gu3
    weighted::WeightedField f;   // u_n^3, the input of that convolution
    std::vector<double> diff_history;       // ||u_{n+1} - u_n||_{0,nu}
    std::vector<double> norm_history;       // ||u_n||_{0,nu}
    std::vector<double> contraction_ratios; // diff[n] / diff[n-1]
    double closeness = 0.0;      // ||w - u / delta||_{0,nu}
    double fixed_point_defect = 0.0;  // ||u - delta w - G*(u^3)||_{0,nu}
    double tail_bound = 0.0;
    std::optional<double> residual_sup;  // filled by callers of residual_check
};

/// Throws ValidationError for d < 4, w = 0 or eps <= 0, StageFailure when no
/// eps reached by halving gives a contraction.
SolutionBundle picard_iterate(const runge::FourierBesselSolution& w, double eps,
                              const PicardParams& params = {});

/// u(x) = delta w(x) + interpolated G*(u^3); defined for |x| <= grid r_max.
runge::Field evaluator(const SolutionBundle& b);

/// Grid field of a sampled bundle component evaluated off the nodes.
runge::Field field_of(const weighted::WeightedField& v, const Eigen::VectorXd& axis);

struct ResidualReport {
    std::vector<double> h;           // step sizes h0, h0/2, h0/4
    std::vector<double> raw_sup;     // sup |Delta_h u + u - u^3| per step
    double sup = 0.0;                // sup of the Richardson value at the finest pair
    double fd_floor = 0.0;           // extrapolation spread plus rounding estimate
    double observed_order = 0.0;     // log2 of successive raw differences
};

/// Central-difference residual of Delta u + u - u^3 at the columns of pts.
ResidualReport residual_check(const runge::Field& u, const Eigen::MatrixXd& pts, double h0 = 1e-2);

/// Quadrature contribution to the FD residual: G*(u_n^3) recomputed on a
/// grid with halved panels, compared through the same difference operator.
double quadrature_floor(const SolutionBundle& b, const Eigen::MatrixXd& pts, double h0 = 1e-2,
                        const PicardParams& params = {});

struct ClosenessRow {
    double eps_requested = 0.0;
    double eps = 0.0;
    double closeness = 0.0;
    int iterations = 0;
};

struct ClosenessReport {
    std::vector<ClosenessRow> rows;
    std::optional<double> slope;  // least squares of log closeness on log eps
    bool monotone = false;        // closeness decreases with eps over the grid
};

ClosenessReport closeness_report(const runge::FourierBesselSolution& w, const std::vector<double>& eps_grid,
                                 const PicardParams& params = {});

/// Largest |u_a + u_b| over grid samples, for the oddness check w -> -w.
double oddness_defect(const SolutionBundle& a, const SolutionBundle& b);

}  // namespace actopo::allencahn
