#pragma once

// Approximation cascade from eigenfunctions to an entire Helmholtz solution:
// shell point sources, sources pushed beyond a large ball, and a truncated
// Fourier-Bessel series.

#include <functional>
#include <optional>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "actopo/domains.hpp"
#include "actopo/point_source_sum.hpp"
#include "actopo/specfun.hpp"

namespace actopo::runge {

/// A scalar field with its gradient.
struct Field {
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

Field field_of(const PointSourceSum& s);

/// psi_j near each Omega_j (by nearest domain), from the extensions.
Field eigenfunction_target(const std::vector<domains::ScaledDomain>& doms,
                           const std::vector<domains::Extension>& exts);

struct ApproximationReport {
    double sup_err_C0 = 0.0;
    double sup_err_C1 = 0.0;     // sup of |grad error| on the same samples
    int sample_count = 0;
    double tolerance = 0.0;
    int n_sources = 0;
    int rank = 0;
    int escalations = 0;

    bool pass() const { return sup_err_C1 < tolerance; }
};

/// Where fits are collocated and checked: each closed domain thickened by `band`.
struct FitRegion {
    std::vector<domains::ScaledDomain> domains;
    double band = 0.1;
};

/// Deterministic held-out points: interior of each domain plus its surface.
Eigen::MatrixXd holdout_points(const FitRegion& region, int n, std::uint64_t seed,
                               double shrink = 0.0);

/// Collocation points: interior and surface of the thickened domains.
Eigen::MatrixXd collocation_points(const FitRegion& region, int n, std::uint64_t seed);

/// sup |f - g| and sup |grad f - grad g| over the columns of pts.
ApproximationReport compare(const Field& approx, const Field& target, const Eigen::MatrixXd& pts,
                            double tolerance);

struct FitParams {
    int n_sources = 400;
    int n_colloc = 1200;     // >= 2 n_sources
    double svd_tol = 1e-12;
    double tolerance = 1e-4;
    int max_sources = 3200;  // escalation cap (doubling)
    int n_holdout = 2000;
    std::uint64_t seed = 1;
};

/// Sources on the offset surfaces {signed distance = shell_offset}, which lie
/// in the collar; coefficients by truncated SVD on collocation in the region.
std::pair<PointSourceSum, ApproximationReport> fit_shell_sources(const Field& target,
                                                                 const FitRegion& region,
                                                                 double shell_offset,
                                                                 const FitParams& params);

/// Refit w2 with sources on the sphere |x| = outer_radius (plus any of w2's
/// own sources already at or beyond that sphere). All returned sources satisfy |x| > R.
std::pair<PointSourceSum, ApproximationReport> push_sources_outside(const PointSourceSum& w2,
                                                                    const FitRegion& region,
                                                                    double big_r,
                                                                    double outer_radius,
                                                                    const FitParams& params);

/// sum_l j_l(r) Z_l(omega). d = 3: real spherical harmonics, coefficient of
/// (l, m) at harmonics::sh_index(l, m). d >= 4: zonal, coefficient c_l of
/// C_l^{d/2-1}(x . axis / r).
class FourierBesselSolution {
public:
    FourierBesselSolution(specfun::Dimension d, int lmax, Eigen::VectorXd coeffs,
                          Eigen::VectorXd axis, double ball_radius, bool zonal);

    specfun::Dimension dimension() const noexcept { return d_; }
    int lmax() const noexcept { return lmax_; }
    bool zonal() const noexcept { return zonal_; }
    const Eigen::VectorXd& coeffs() const noexcept { return coeffs_; }
    const Eigen::VectorXd& axis() const noexcept { return axis_; }
    double ball_radius() const noexcept { return ball_radius_; }

    double value(const Eigen::VectorXd& x) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
    void value_and_gradient(const Eigen::VectorXd& x, double& v, Eigen::VectorXd& g) const;

    /// Zonal case only: value at radius r and t = cos(angle to axis).
    double zonal_value(double r, double t) const;
    /// Zonal or purely radial content: c_l for each l (d = 3 uses the m = 0 entry).
    std::vector<double> zonal_coefficients() const;

    /// Same series with every coefficient negated.
    FourierBesselSolution negated() const;

private:
    specfun::Dimension d_;
    int lmax_;
    Eigen::VectorXd coeffs_;
    Eigen::VectorXd axis_;
    double ball_radius_;
    bool zonal_;
};

Field field_of(const FourierBesselSolution& w);

struct ExpansionParams {
    double r_a = 0.0;        // projection radius, default 0.95 R
    double r_b = 0.0;        // fallback radius, default 0.8 R
    std::optional<int> l0;   // fixed truncation; otherwise the tail rule
    int lmax_cap = 80;
    double tolerance = 1e-4; // delta in the tail rule
    int polar_nodes = 0;     // 0: degree + 24 (d = 3), degree + 8 (d >= 4)
    int azimuth_nodes = 0;   // 0: 2 degree + 48 (d = 3), 2 degree + 16 (d >= 4)
    double near_zero = 1e-3; // |j_l(r)| below this times max_{s<=r}|j_l(s)|
    Eigen::VectorXd axis;    // zonal axis (d >= 4), default e_d
};

struct ExpansionInfo {
    int l0 = 0;
    std::vector<double> tail;         // amplitude_l * max_{r<=R} |j_l| per l
    std::vector<double> radius_used;  // r_a or r_b per l
    bool tail_satisfied = false;      // false: no l0 below lmax_cap met the rule
};

/// Project w3 onto harmonics on a sphere, truncate at l0, report the error
/// against w3 on the held-out points of the region.
std::tuple<FourierBesselSolution, ApproximationReport, ExpansionInfo> expand_fourier_bessel(
    const Field& w3, specfun::Dimension d, double big_r, const ExpansionParams& params,
    const Eigen::MatrixXd& check_points);

/// max_{0 <= r <= big_r} |j_l(r)| for l = 0..lmax.
std::vector<double> max_abs_jl(specfun::Dimension d, int lmax, double big_r);

struct DecayFit {
    double exponent = 0.0;                 // mean over rays
    std::vector<double> per_ray;
    bool defined = false;
};

/// Log-log least-squares fit of the envelope (local maxima of |w|) along rays.
DecayFit verify_decay(const Field& w, const std::vector<Eigen::VectorXd>& rays, double r_min,
                      double r_max, double step = 0.02);

}  // namespace actopo::runge
