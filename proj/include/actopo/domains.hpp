#pragma once

// Prescribed surfaces, first Dirichlet eigenpairs of the domains they bound,
// and the checks on how several of them are placed.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "actopo/point_source_sum.hpp"
#include "actopo/random.hpp"
#include "actopo/specfun.hpp"

namespace actopo::domains {

struct Ball {
    Eigen::VectorXd center;  // any d >= 3
    double radius = 0.0;
};

/// Solid torus in R^3 with symmetry axis parallel to e_3 through `center`.
struct SolidTorus {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    double major_radius = 0.0;
    double minor_radius = 0.0;
};

struct SurfaceSpec {
    std::variant<Ball, SolidTorus> shape;
    std::string label;

    int dimension() const;
    bool is_ball() const { return std::holds_alternative<Ball>(shape); }
    /// Genus of the bounding surface: 0 for a sphere, 1 for a torus.
    int genus() const { return is_ball() ? 0 : 1; }
};

/// Throws ValidationError unless the surface is embedded and non-degenerate.
void validate(const SurfaceSpec& spec);

/// Negative inside the domain, zero on the surface.
double signed_distance(const SurfaceSpec& spec, const Eigen::VectorXd& x);

/// Outward unit normal of the level set of signed_distance through x.
Eigen::VectorXd outward_normal(const SurfaceSpec& spec, const Eigen::VectorXd& x);

struct BoundingBall {
    Eigen::VectorXd center;
    double radius = 0.0;
};

/// Smallest ball about the surface center containing the domain inflated by `pad`.
BoundingBall bounding_ball(const SurfaceSpec& spec, double pad = 0.0);

/// Largest |x| over the domain inflated by `pad`, measured from the origin.
double circumradius(const SurfaceSpec& spec, double pad = 0.0);

/// d x n points uniform in {signed_distance <= pad}.
Eigen::MatrixXd sample_interior(const SurfaceSpec& spec, int n, rng::Engine& g, double pad = 0.0);

/// d x n points on {signed_distance = offset}, quasi-uniform. Deterministic:
/// Fibonacci lattice for spheres in R^3, product lattice for the torus,
/// seeded uniform directions in d >= 4.
Eigen::MatrixXd offset_surface_points(const SurfaceSpec& spec, int n, double offset);

/// d x n random points on {signed_distance = offset}.
Eigen::MatrixXd sample_offset_surface(const SurfaceSpec& spec, int n, double offset,
                                      rng::Engine& g);

// ---------------------------------------------------------------- eigenpairs

/// psi(x) = j_0(k |x - center|) / j_0(0), which is sin(k r)/(k r) in d = 3.
struct ClosedFormBall {
    int d = 3;
    Eigen::VectorXd center;
    double radius = 0.0;
    double wavenumber = 0.0;  // sqrt(lambda_1)
};

/// Meridian-plane grid of a torus eigenfunction in local polar coordinates
/// (s, phi) about the cross-section center: rho = R0 + s cos phi, z = s sin phi.
/// Cell centers s_i = (i + 1/2) h, phi_j = (j + 1/2) dphi; psi = 0 at s = r0.
struct AxisymmetricGrid {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    double major_radius = 0.0;
    double minor_radius = 0.0;
    int n_s = 0;
    int n_phi = 0;
    Eigen::MatrixXd values;  // n_s x n_phi, sup = 1

    double s_node(int i) const { return (i + 0.5) * minor_radius / n_s; }
    double phi_node(int j) const;
    /// (rho, z) of node (i, j), z relative to the center.
    Eigen::Vector2d meridian_point(int i, int j) const;
    /// Bilinear interpolation in (s, phi); zero outside the cross-section.
    double interpolate(double rho, double z) const;
};

struct TorusGrid {
    int n_s = 40;       // cells across the minor radius
    int n_phi = 96;     // cells around the cross-section
    bool richardson = true;  // combine with a 3x refined solve
    double tol = 1e-10;      // relative eigen-residual for inverse iteration
    int max_iter = 500;
};

struct EigenResult {
    double lambda1 = 0.0;
    std::variant<ClosedFormBall, AxisymmetricGrid> eigenfunction;
    double boundary_gradient_min = 0.0;
    double residual = 0.0;     // relative residual of the discrete eigen-equation
    int iterations = 0;
    /// Eigenvalue of the unextrapolated coarse and fine solves (torus only).
    std::vector<double> refinement_lambdas;

    bool closed_form() const { return std::holds_alternative<ClosedFormBall>(eigenfunction); }
};

double evaluate(const EigenResult& eig, const Eigen::VectorXd& x);

/// First positive zero of J_nu by bracketing and bisection.
double first_bessel_zero(double nu);

EigenResult first_dirichlet_ball(specfun::Dimension d, double radius,
                                 const Eigen::VectorXd& center);
EigenResult first_dirichlet_ball(specfun::Dimension d, double radius);

EigenResult solve_eigen_torus(double major_radius, double minor_radius, const TorusGrid& grid,
                              const Eigen::Vector3d& center = Eigen::Vector3d::Zero());

/// Solve for any supported spec.
EigenResult solve_eigen(const SurfaceSpec& spec, const TorusGrid& grid);

struct ScaledDomain {
    SurfaceSpec original;
    double scale = 1.0;
    Eigen::VectorXd translated_center;
    SurfaceSpec scaled_spec;
    EigenResult eigen;  // eigenpair of the scaled domain, lambda_1 = 1
};

/// Scale all lengths by s = sqrt(lambda_1) and move the domain's center to
/// target_center. The eigenpair is transformed with it.
ScaledDomain rescale_to_unit_eigenvalue(const SurfaceSpec& spec, const EigenResult& eig,
                                        const Eigen::VectorXd& target_center);

// ---------------------------------------------------------------- extension

struct ExtensionFit {
    int n_sources = 1600;      // torus: n_tube x n_ring lattice
    int n_colloc = 4000;       // interior collocation points
    int n_boundary = 2000;     // points where psi = 0
    int n_holdout = 2000;
    double svd_tol = 1e-12;
    double tolerance = 1e-4;   // max held-out mismatch
    double gap = 0.25;         // extra offset beyond the collar
    std::uint64_t seed = 1;
};

struct Extension {
    /// Empty for closed-form balls: the eigenfunction is already entire.
    std::optional<PointSourceSum> sources;
    double holdout_mismatch = 0.0;
    double collocation_residual = 0.0;
    int rank = 0;

    bool exact() const { return !sources.has_value(); }
};

/// Exterior point-source representation of psi valid on the closed domain
/// plus a collar of width collar_width. Sources sit beyond the collar.
Extension extend_eigenfunction(const EigenResult& eig, const ScaledDomain& scaled,
                               double collar_width, const ExtensionFit& fit);

/// psi on the scaled domain via its extension (exact for closed forms).
double evaluate_extension(const Extension& ext, const ScaledDomain& scaled,
                          const Eigen::VectorXd& x);
Eigen::VectorXd gradient_extension(const Extension& ext, const ScaledDomain& scaled,
                                   const Eigen::VectorXd& x);

// ---------------------------------------------------------------- placement

struct PlacementCertificate {
    bool certified = false;
    std::vector<BoundingBall> bounding_balls;
    double pairwise_separation = 0.0;  // min gap between balls; +inf for one domain
    std::optional<std::pair<int, int>> offending_pair;
};

PlacementCertificate check_unlinked_placement(const std::vector<ScaledDomain>& domains,
                                              double pad = 0.0);
PlacementCertificate check_unlinked_placement(const std::vector<SurfaceSpec>& specs,
                                              double pad = 0.0);

}  // namespace actopo::domains
