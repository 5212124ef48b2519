#pragma once

// Weighted decay norms and the convolution v -> G * v for radial and
// axisymmetric data.
//
// Radial and zonal fields live on a panel grid in r: Gauss-Legendre nodes on
// a few geometrically graded panels at the origin, then uniform panels out
// to r_max. Zonal fields add Gauss-Gegenbauer nodes in t = cos(angle to the
// axis), so projections onto C_l^{d/2-1}(t) are exact for low degrees.

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "actopo/specfun.hpp"

namespace actopo::weighted {

/// <x> = (1 + |x|^2)^{1/2}.
inline double bracket(double r) { return std::sqrt(1.0 + r * r); }

class RadialGrid {
public:
    /// Uniform panels of width `panel` on [0, r_max] (r_max rounded up to a
    /// whole panel), the first one split geometrically `graded` times.
    RadialGrid(double r_max, double panel, int order, int graded = 3);

    int order() const noexcept { return order_; }
    int panel_count() const noexcept { return static_cast<int>(breaks_.size()) - 1; }
    int size() const noexcept { return static_cast<int>(nodes_.size()); }
    double r_max() const noexcept { return breaks_.back(); }
    const std::vector<double>& breaks() const noexcept { return breaks_; }
    const std::vector<double>& nodes() const noexcept { return nodes_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    /// Panel holding r (clamped to the grid).
    int panel_of(double r) const;
    /// Barycentric interpolation weights of the panel holding r; node indices
    /// start at panel_of(r) * order().
    void interpolation_weights(double r, std::span<double> out) const;
    /// Interpolate nodal data at r.
    double interpolate(std::span<const double> data, double r) const;
    /// d/dr of the same interpolant.
    double derivative(std::span<const double> data, double r) const;

private:
    int order_;
    std::vector<double> breaks_, nodes_, weights_;
    std::vector<double> bary_;  // reference barycentric weights
    std::vector<double> ref_;   // reference nodes on [-1, 1]
};

/// Samples on the nodes of a radial grid, with the r-derivative when known.
struct RadialSamples {
    std::shared_ptr<const RadialGrid> grid;
    std::vector<double> values;
    std::vector<double> derivs;  // empty if unknown

    double value(double r) const { return grid->interpolate(values, r); }
    double deriv(double r) const;
};

/// Samples on radial nodes x Gauss-Gegenbauer t-nodes about an axis.
struct ZonalSamples {
    std::shared_ptr<const RadialGrid> grid;
    std::vector<double> t;          // nodes in t = cos(theta)
    std::vector<double> t_weights;  // weights for (1 - t^2)^{lam - 1/2}
    Eigen::MatrixXd values;         // n_r x n_t
    Eigen::MatrixXd d_r;            // empty if unknown
    Eigen::MatrixXd d_t;            // derivative in t; empty if unknown
};

/// Analytic radial profile v(|x|) with optional derivative.
struct RadialProfile {
    std::function<double(double)> value;
    std::function<double(double)> derivative;  // may be empty
};

struct WeightedField {
    specfun::Dimension d{3};
    std::variant<RadialSamples, ZonalSamples, RadialProfile> rep;
    int k = 0;
    double nu = 1.0;
};

/// Zonal sample grid for dimension d with n_t polar nodes.
ZonalSamples make_zonal_samples(specfun::Dimension d, std::shared_ptr<const RadialGrid> grid, int n_t);

/// Gegenbauer coefficients v_l(r_i), l = 0..lmax, of zonal samples: n_r x (lmax+1).
Eigen::MatrixXd zonal_project(const ZonalSamples& z, specfun::Dimension d, int lmax,
                              const Eigen::MatrixXd& values);

// ---------------------------------------------------------------- norms

struct NormReport {
    double value = 0.0;
    double argmax_r = 0.0;
    double boundary_max = 0.0;  // max over the last tenth of the range
    double interior_max = 0.0;  // max below it
    bool growing = false;       // boundary_max >= interior_max
};

/// max over |alpha| <= k of sup_{|x| <= truncation_radius} <x>^nu |d^alpha v|.
/// k = 1 uses |grad v| for the first-order part. Throws StageFailure when the
/// boundary maximum exceeds 1.05 times the interior maximum.
NormReport weighted_norm_report(const WeightedField& v, int k, double nu, double truncation_radius);
double weighted_norm(const WeightedField& v, int k, double nu, double truncation_radius);

// ---------------------------------------------------------------- kernels

/// |S^{d-2}| int_0^pi G(|x - y|) sin^{d-2} theta d theta with |x| = r, |y| = s:
/// the spherical mean kernel of the radial convolution, by quadrature.
/// d = 3 substitutes u = |x - y| (smooth integrand); d >= 4 grades the
/// theta panels geometrically toward the near-singular point theta = 0.
double radial_kernel(specfun::Dimension d, double r, double s, int quad_order);

/// Same with the zonal weight C_l(cos theta) / C_l(1): the degree-l
/// Funk-Hecke kernel.
double zonal_kernel(specfun::Dimension d, int l, double r, double s, int quad_order);

/// Separable closed form kappa j_l(r<) y_l(r>) of the degree-l kernel
/// (y_l = r^{1-d/2} Y_{l+d/2-1}); l = 0 is |S^{d-1}| Lambda(r<) G(r>).
double closed_form_kernel(specfun::Dimension d, int l, double r, double s);

/// K(r_i, s_j) on log-spaced nodes by quadrature, with bilinear
/// interpolation in log coordinates between nodes.
struct RadialKernelTable {
    specfun::Dimension d{3};
    std::vector<double> nodes;  // shared by r and s
    Eigen::MatrixXd values;

    double interpolate(double r, double s) const;
};

RadialKernelTable build_kernel_table(specfun::Dimension d, double r_min, double r_max, int n,
                                     int quad_order);

// ---------------------------------------------------------------- convolution

struct ConvolutionParams {
    /// Grid for analytic profiles (sampled inputs keep their own grid).
    double r_max = 200.0;
    double panel = 0.5;
    int order = 16;
    int graded = 3;
    /// Zonal: highest Gegenbauer degree convolved (default n_t - 1).
    std::optional<int> lmax;
};

struct ConvolutionResult {
    WeightedField field;     // G * v on the grid, nu = (d - 1)/2
    double tail_bound = 0.0; // bound on the truncated contribution beyond r_max
};

/// (G * v)(r) = int_0^inf K(r, s) v(s) s^{d-1} ds. Throws ValidationError if
/// v.nu <= (d + 1)/2.
ConvolutionResult convolve_radial(const WeightedField& v, const ConvolutionParams& params = {});

/// Per-degree version of the same for zonal samples; output on the same nodes.
ConvolutionResult convolve_zonal(const WeightedField& v, const ConvolutionParams& params = {});

/// Pointwise cube of sampled or analytic data (nu scaled by 3).
WeightedField cube(const WeightedField& v);

/// Scalar multiple (derivatives scaled alike).
WeightedField scaled(const WeightedField& v, double factor);

struct CubicBoundReport {
    std::vector<double> ratios;  // ||G*(v^3)|| / ||v||^3 per sample, nu = (d-1)/2
    double max_ratio = 0.0;
};

/// Throws ValidationError for d = 3, where 3(d-1)/2 = d is the boundary case.
CubicBoundReport verify_cubic_bound(const std::vector<WeightedField>& samples,
                                    const ConvolutionParams& params = {});

}  // namespace actopo::weighted
