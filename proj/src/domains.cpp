#include "actopo/domains.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "actopo/error.hpp"
#include "actopo/linalg.hpp"

namespace actopo::domains {

namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;


// Unit vectors on S^2 from a Fibonacci lattice.
Eigen::MatrixXd fibonacci_sphere(int n) {
    Eigen::MatrixXd pts(3, n);
    const double golden = kPi * (1.0 + std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / n;
        const double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double th = golden * (i + 0.5);
        pts(0, i) = rxy * std::cos(th);
        pts(1, i) = rxy * std::sin(th);
        pts(2, i) = z;
    }
    return pts;
}

Eigen::MatrixXd unit_directions(int d, int n) {
    if (d == 3) return fibonacci_sphere(n);
    rng::Engine g(0x5eedULL + static_cast<std::uint64_t>(n) * 1000003ULL + d);
    Eigen::MatrixXd pts(d, n);
    for (int i = 0; i < n; ++i) pts.col(i) = rng::unit_vector(d, g);
    return pts;
}

Eigen::Vector3d torus_point(const SolidTorus& t, double tube, double phi, double theta) {
    const double rho = t.major_radius + tube * std::cos(phi);
    return t.center + Eigen::Vector3d(rho * std::cos(theta), rho * std::sin(theta),
                                      tube * std::sin(phi));
}

}  // namespace

int SurfaceSpec::dimension() const {
    return std::visit(Overloaded{[](const Ball& b) { return static_cast<int>(b.center.size()); },
                                 [](const SolidTorus&) { return 3; }},
                      shape);
}

void validate(const SurfaceSpec& spec) {
    std::visit(Overloaded{[&](const Ball& b) {
                              if (b.center.size() < 3) {
                                  throw ValidationError("ball '" + spec.label +
                                                        "': dimension must be >= 3");
                              }
                              if (!(b.radius > 0.0)) {
                                  throw ValidationError("ball '" + spec.label +
                                                        "': radius must be > 0");
                              }
                          },
                          [&](const SolidTorus& t) {
                              if (!(t.minor_radius > 0.0)) {
                                  throw ValidationError("torus '" + spec.label +
                                                        "': minor radius must be > 0");
                              }
                              if (!(t.minor_radius < t.major_radius)) {
                                  throw ValidationError(
                                      "torus '" + spec.label +
                                      "': minor radius must be below the major radius");
                              }
                          }},
               spec.shape);
}

double signed_distance(const SurfaceSpec& spec, const Eigen::VectorXd& x) {
    return std::visit(Overloaded{[&](const Ball& b) { return (x - b.center).norm() - b.radius; },
                                 [&](const SolidTorus& t) {
                                     const Eigen::Vector3d p = x - t.center;
                                     const double q = std::hypot(p(0), p(1)) - t.major_radius;
                                     return std::hypot(q, p(2)) - t.minor_radius;
                                 }},
                      spec.shape);
}

Eigen::VectorXd outward_normal(const SurfaceSpec& spec, const Eigen::VectorXd& x) {
    return std::visit(
        Overloaded{[&](const Ball& b) -> Eigen::VectorXd { return (x - b.center).normalized(); },
                   [&](const SolidTorus& t) -> Eigen::VectorXd {
                       const Eigen::Vector3d p = x - t.center;
                       const double rxy = std::hypot(p(0), p(1));
                       Eigen::Vector3d ring(0, 0, 0);
                       if (rxy > 0) ring = Eigen::Vector3d(p(0), p(1), 0) * (t.major_radius / rxy);
                       return (p - ring).normalized();
                   }},
        spec.shape);
}

BoundingBall bounding_ball(const SurfaceSpec& spec, double pad) {
    return std::visit(
        Overloaded{[&](const Ball& b) { return BoundingBall{b.center, b.radius + pad}; },
                   [&](const SolidTorus& t) {
                       return BoundingBall{Eigen::VectorXd(t.center),
                                           t.major_radius + t.minor_radius + pad};
                   }},
        spec.shape);
}

double circumradius(const SurfaceSpec& spec, double pad) {
    return std::visit(Overloaded{[&](const Ball& b) { return b.center.norm() + b.radius + pad; },
                                 [&](const SolidTorus& t) {
                                     const double h = std::abs(t.center(2));
                                     const double rxy = std::hypot(t.center(0), t.center(1));
                                     // Conservative: a ball about the center containing it.
                                     return std::hypot(rxy, h) + t.major_radius +
                                            t.minor_radius + pad;
                                 }},
                      spec.shape);
}

Eigen::MatrixXd sample_interior(const SurfaceSpec& spec, int n, rng::Engine& g, double pad) {
    const int d = spec.dimension();
    Eigen::MatrixXd pts(d, n);
    const BoundingBall bb = bounding_ball(spec, pad);
    int k = 0;
    while (k < n) {
        Eigen::VectorXd p = bb.center + bb.radius * rng::in_unit_ball(d, g);
        if (signed_distance(spec, p) <= pad) pts.col(k++) = p;
    }
    return pts;
}

Eigen::MatrixXd offset_surface_points(const SurfaceSpec& spec, int n, double offset) {
    if (n < 1) throw ValidationError("offset_surface_points: n must be >= 1");
    return std::visit(
        Overloaded{[&](const Ball& b) -> Eigen::MatrixXd {
                       const int d = static_cast<int>(b.center.size());
                       Eigen::MatrixXd u = unit_directions(d, n);
                       Eigen::MatrixXd pts = (b.radius + offset) * u;
                       pts.colwise() += b.center;
                       return pts;
                   },
                   [&](const SolidTorus& t) -> Eigen::MatrixXd {
                       const double tube = t.minor_radius + offset;
                       if (!(tube > 0.0) || tube >= t.major_radius) {
                           throw ValidationError("torus offset surface is not embedded");
                       }
                       // Cells roughly square on the offset surface.
                       const int n_tube = std::max(
                           3, static_cast<int>(std::lround(std::sqrt(n * tube / t.major_radius))));
                       const int n_ring = std::max(3, (n + n_tube - 1) / n_tube);
                       Eigen::MatrixXd pts(3, n_tube * n_ring);
                       for (int j = 0; j < n_tube; ++j) {
                           const double phi = 2.0 * kPi * (j + 0.5) / n_tube;
                           for (int k = 0; k < n_ring; ++k) {
                               const double theta = 2.0 * kPi * (k + 0.5 * (j % 2)) / n_ring;
                               pts.col(j * n_ring + k) = torus_point(t, tube, phi, theta);
                           }
                       }
                       return pts;
                   }},
        spec.shape);
}

Eigen::MatrixXd sample_offset_surface(const SurfaceSpec& spec, int n, double offset,
                                      rng::Engine& g) {
    return std::visit(
        Overloaded{[&](const Ball& b) -> Eigen::MatrixXd {
                       const int d = static_cast<int>(b.center.size());
                       Eigen::MatrixXd pts(d, n);
                       for (int i = 0; i < n; ++i) {
                           pts.col(i) = b.center + (b.radius + offset) * rng::unit_vector(d, g);
                       }
                       return pts;
                   },
                   [&](const SolidTorus& t) -> Eigen::MatrixXd {
                       const double tube = t.minor_radius + offset;
                       Eigen::MatrixXd pts(3, n);
                       int k = 0;
                       // Area element is proportional to rho; reject to make it uniform.
                       while (k < n) {
                           const double phi = 2.0 * kPi * rng::uniform01(g);
                           const double theta = 2.0 * kPi * rng::uniform01(g);
                           const double accept = (t.major_radius + tube * std::cos(phi)) /
                                                 (t.major_radius + tube);
                           if (rng::uniform01(g) < accept) {
                               pts.col(k++) = torus_point(t, tube, phi, theta);
                           }
                       }
                       return pts;
                   }},
        spec.shape);
}

// ---------------------------------------------------------------- eigenpairs

double AxisymmetricGrid::phi_node(int j) const { return 2.0 * kPi * (j + 0.5) / n_phi; }

Eigen::Vector2d AxisymmetricGrid::meridian_point(int i, int j) const {
    const double s = s_node(i);
    const double phi = phi_node(j);
    return {major_radius + s * std::cos(phi), s * std::sin(phi)};
}

double AxisymmetricGrid::interpolate(double rho, double z) const {
    const double ds = rho - major_radius;
    const double s = std::hypot(ds, z);
    if (s >= minor_radius) return 0.0;
    const double h = minor_radius / n_s;
    const double dphi = 2.0 * kPi / n_phi;
    double phi = std::atan2(z, ds);
    if (phi < 0) phi += 2.0 * kPi;
    // phi index, periodic.
    const double fj = phi / dphi - 0.5;
    int j0 = static_cast<int>(std::floor(fj));
    const double tj = fj - j0;
    auto col = [&](int j) { return ((j % n_phi) + n_phi) % n_phi; };
    auto radial = [&](int j) {
        // Linear in s over cell centers, towards 0 at the boundary face and
        // flat inside the first half cell.
        const double fi = s / h - 0.5;
        if (fi <= 0.0) return values(0, col(j));
        const int i0 = static_cast<int>(std::floor(fi));
        const double ti = fi - i0;
        const double a = values(i0, col(j));
        const double b = i0 + 1 < n_s ? values(i0 + 1, col(j)) : -a;  // ghost
        return (1 - ti) * a + ti * b;
    };
    return (1 - tj) * radial(j0) + tj * radial(j0 + 1);
}

double evaluate(const EigenResult& eig, const Eigen::VectorXd& x) {
    return std::visit(
        Overloaded{[&](const ClosedFormBall& b) {
                       const specfun::Dimension d(b.d);
                       const double r = (x - b.center).norm();
                       return specfun::hyperspherical_jl(d, 0, b.wavenumber * r) /
                              specfun::hyperspherical_jl(d, 0, 0.0);
                   },
                   [&](const AxisymmetricGrid& g) {
                       const Eigen::Vector3d p = x - g.center;
                       return g.interpolate(std::hypot(p(0), p(1)), p(2));
                   }},
        eig.eigenfunction);
}

double first_bessel_zero(double nu) {
    // McMahon-free bracket: the first zero lies in (nu, nu + 2 sqrt(nu + 1) + 3).
    double a = std::max(nu, 0.5);
    const double step = 0.05;
    double fa = specfun::bessel_j(nu, a);
    double b = a + step;
    double fb = specfun::bessel_j(nu, b);
    while (fa * fb > 0.0) {
        a = b;
        fa = fb;
        b += step;
        fb = specfun::bessel_j(nu, b);
        if (b > nu + 10.0 * std::sqrt(nu + 1.0) + 10.0) {
            throw StageFailure("first_bessel_zero: no sign change found", -1.0);
        }
    }
    for (int it = 0; it < 200 && b - a > 4e-16 * b; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = specfun::bessel_j(nu, m);
        if ((fm < 0) == (fa < 0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

EigenResult first_dirichlet_ball(specfun::Dimension d, double radius,
                                 const Eigen::VectorXd& center) {
    if (!(radius > 0.0)) throw ValidationError("first_dirichlet_ball: radius must be > 0");
    if (center.size() != d.value()) {
        throw ValidationError("first_dirichlet_ball: center has the wrong dimension");
    }
    const double z = first_bessel_zero(0.5 * d.value() - 1.0);
    EigenResult res;
    const double k = z / radius;
    res.lambda1 = k * k;
    res.eigenfunction = ClosedFormBall{d.value(), center, radius, k};
    // psi' = -k j_1(k r) / j_0(0).
    res.boundary_gradient_min =
        k * specfun::hyperspherical_jl(d, 1, z) / specfun::hyperspherical_jl(d, 0, 0.0);
    res.residual = 0.0;
    return res;
}

EigenResult first_dirichlet_ball(specfun::Dimension d, double radius) {
    return first_dirichlet_ball(d, radius, Eigen::VectorXd::Zero(d.value()));
}

namespace {

struct TorusSolve {
    double lambda = 0.0;
    Eigen::MatrixXd psi;       // n_s x n_phi, unnormalized, positive
    Eigen::VectorXd boundary_slope;  // -dpsi/ds at s = r0 per phi node
    double residual = 0.0;
    int iterations = 0;
};

TorusSolve torus_fv(double big_r, double small_r, int n_s, int n_phi, double tol, int max_iter) {
    const double h = small_r / n_s;
    const double dphi = 2.0 * kPi / n_phi;
    const int n = n_s * n_phi;
    auto idx = [&](int i, int j) { return i * n_phi + ((j % n_phi) + n_phi) % n_phi; };
    auto rho = [&](double s, double phi) { return big_r + s * std::cos(phi); };

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * n);
    Eigen::VectorXd mass(n);
    for (int i = 0; i < n_s; ++i) {
        const double s = (i + 0.5) * h;
        for (int j = 0; j < n_phi; ++j) {
            const double phi = (j + 0.5) * dphi;
            const int k = idx(i, j);
            mass(k) = rho(s, phi) * s * h * dphi;
            double diag = 0.0;
            // Outer radial face.
            const double s_out = (i + 1) * h;
            if (i + 1 < n_s) {
                const double a = rho(s_out, phi) * s_out * dphi / h;
                trip.emplace_back(k, idx(i + 1, j), -a);
                diag += a;
            } else {
                diag += rho(s_out, phi) * s_out * dphi * 2.0 / h;  // psi = 0 on the face
            }
            // Inner radial face (zero length at the center).
            if (i > 0) {
                const double s_in = i * h;
                const double a = rho(s_in, phi) * s_in * dphi / h;
                trip.emplace_back(k, idx(i - 1, j), -a);
                diag += a;
            }
            // Angular faces.
            for (int dj : {-1, 1}) {
                const double phi_f = phi + 0.5 * dj * dphi;
                const double b = rho(s, phi_f) * h / (s * dphi);
                trip.emplace_back(k, idx(i, j + dj), -b);
                diag += b;
            }
            trip.emplace_back(k, k, diag);
        }
    }
    Eigen::SparseMatrix<double> stiff(n, n);
    stiff.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(stiff);
    if (ldlt.info() != Eigen::Success) {
        throw StageFailure("torus eigen solve: factorization failed", -1.0);
    }

    TorusSolve out;
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
    double lambda = 0.0;
    double res = std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < max_iter; ++it) {
        Eigen::VectorXd y = ldlt.solve(mass.cwiseProduct(x));
        y /= std::sqrt(y.dot(mass.cwiseProduct(y)));
        x = y;
        const Eigen::VectorXd kx = stiff * x;
        lambda = x.dot(kx);  // x is M-normalized
        const Eigen::VectorXd r = kx - lambda * mass.cwiseProduct(x);
        res = std::sqrt(r.dot(r.cwiseQuotient(mass))) / lambda;
        if (res < tol) break;
    }
    if (!(res < tol)) {
        throw StageFailure("torus eigen solve: inverse iteration did not converge (residual " +
                               std::to_string(res) + ")",
                           res);
    }
    if (x.sum() < 0) x = -x;
    out.lambda = lambda;
    out.residual = res;
    out.iterations = it + 1;
    out.psi.resize(n_s, n_phi);
    for (int i = 0; i < n_s; ++i)
        for (int j = 0; j < n_phi; ++j) out.psi(i, j) = x(idx(i, j));
    out.boundary_slope.resize(n_phi);
    for (int j = 0; j < n_phi; ++j) {
        // Quadratic through psi = 0 at the face and the last two centers.
        const double p1 = out.psi(n_s - 1, j);
        const double p2 = out.psi(n_s - 2, j);
        out.boundary_slope(j) = (9.0 * p1 - p2) / (3.0 * h);
    }
    return out;
}

}  // namespace

EigenResult solve_eigen_torus(double major_radius, double minor_radius, const TorusGrid& grid,
                              const Eigen::Vector3d& center) {
    if (!(minor_radius > 0.0) || !(major_radius > 0.0)) {
        throw ValidationError("solve_eigen_torus: radii must be > 0");
    }
    if (!(minor_radius < major_radius)) {
        throw ValidationError("solve_eigen_torus: minor radius must be below the major radius");
    }
    if (grid.n_s < 4 || grid.n_phi < 8) {
        throw ValidationError("solve_eigen_torus: grid needs n_s >= 4 and n_phi >= 8");
    }
    const TorusSolve coarse =
        torus_fv(major_radius, minor_radius, grid.n_s, grid.n_phi, grid.tol, grid.max_iter);

    EigenResult res;
    AxisymmetricGrid out;
    out.center = center;
    out.major_radius = major_radius;
    out.minor_radius = minor_radius;
    out.n_s = grid.n_s;
    out.n_phi = grid.n_phi;

    Eigen::MatrixXd psi = coarse.psi;
    Eigen::VectorXd slope = coarse.boundary_slope;
    res.lambda1 = coarse.lambda;
    res.residual = coarse.residual;
    res.iterations = coarse.iterations;
    res.refinement_lambdas = {coarse.lambda};

    if (grid.richardson) {
        const TorusSolve fine = torus_fv(major_radius, minor_radius, 3 * grid.n_s,
                                         3 * grid.n_phi, grid.tol, grid.max_iter);
        res.refinement_lambdas.push_back(fine.lambda);
        // Normalize both at the coarse maximum, which is a shared node.
        Eigen::Index ri = 0, cj = 0;
        coarse.psi.maxCoeff(&ri, &cj);
        const double nc = coarse.psi(ri, cj);
        const double nf = fine.psi(3 * ri + 1, 3 * cj + 1);
        for (int i = 0; i < grid.n_s; ++i) {
            for (int j = 0; j < grid.n_phi; ++j) {
                psi(i, j) = (9.0 * fine.psi(3 * i + 1, 3 * j + 1) / nf - coarse.psi(i, j) / nc) / 8.0;
            }
        }
        for (int j = 0; j < grid.n_phi; ++j) {
            slope(j) = (9.0 * fine.boundary_slope(3 * j + 1) / nf - coarse.boundary_slope(j) / nc) / 8.0;
        }
        res.lambda1 = (9.0 * fine.lambda - coarse.lambda) / 8.0;
        res.residual = std::max(coarse.residual, fine.residual);
        res.iterations = coarse.iterations + fine.iterations;
    }
    const double top = psi.maxCoeff();
    if (!(top > 0.0)) throw StageFailure("torus eigen solve: eigenfunction vanished", -1.0);
    psi /= top;
    slope /= top;
    out.values = psi;
    res.boundary_gradient_min = slope.minCoeff();
    res.eigenfunction = std::move(out);
    if (!(res.boundary_gradient_min > 0.0)) {
        throw StageFailure("torus eigen solve: boundary gradient is not positive",
                           res.boundary_gradient_min);
    }
    return res;
}

EigenResult solve_eigen(const SurfaceSpec& spec, const TorusGrid& grid) {
    validate(spec);
    return std::visit(Overloaded{[&](const Ball& b) {
                                     return first_dirichlet_ball(
                                         specfun::Dimension(static_cast<int>(b.center.size())),
                                         b.radius, b.center);
                                 },
                                 [&](const SolidTorus& t) {
                                     return solve_eigen_torus(t.major_radius, t.minor_radius, grid,
                                                              t.center);
                                 }},
                      spec.shape);
}

ScaledDomain rescale_to_unit_eigenvalue(const SurfaceSpec& spec, const EigenResult& eig,
                                        const Eigen::VectorXd& target_center) {
    validate(spec);
    if (!(eig.lambda1 > 0.0)) throw ValidationError("rescale: eigenvalue must be > 0");
    if (target_center.size() != spec.dimension()) {
        throw ValidationError("rescale: target center has the wrong dimension");
    }
    ScaledDomain out;
    out.original = spec;
    out.scale = std::sqrt(eig.lambda1);
    out.translated_center = target_center;
    out.eigen = eig;
    out.eigen.lambda1 = eig.lambda1 / (out.scale * out.scale);
    out.eigen.boundary_gradient_min = eig.boundary_gradient_min / out.scale;
    const double s = out.scale;
    std::visit(Overloaded{[&](const Ball& b) {
                              Ball nb{target_center, b.radius * s};
                              out.scaled_spec = SurfaceSpec{nb, spec.label};
                              auto cf = std::get<ClosedFormBall>(eig.eigenfunction);
                              cf.center = target_center;
                              cf.radius = nb.radius;
                              cf.wavenumber /= s;
                              out.eigen.eigenfunction = cf;
                          },
                          [&](const SolidTorus& t) {
                              SolidTorus nt{Eigen::Vector3d(target_center), t.major_radius * s,
                                            t.minor_radius * s};
                              out.scaled_spec = SurfaceSpec{nt, spec.label};
                              auto g = std::get<AxisymmetricGrid>(eig.eigenfunction);
                              g.center = nt.center;
                              g.major_radius = nt.major_radius;
                              g.minor_radius = nt.minor_radius;
                              out.eigen.eigenfunction = g;
                          }},
               spec.shape);
    return out;
}

// ---------------------------------------------------------------- extension

Extension extend_eigenfunction(const EigenResult& eig, const ScaledDomain& scaled,
                               double collar_width, const ExtensionFit& fit) {
    if (!(collar_width > 0.0)) throw ValidationError("extend_eigenfunction: collar_width must be > 0");
    Extension ext;
    if (eig.closed_form()) return ext;

    const auto& grid = std::get<AxisymmetricGrid>(eig.eigenfunction);
    if (!(grid.values.cwiseAbs().maxCoeff() > 0.0)) {
        throw ValidationError("extend_eigenfunction: eigenfunction is identically zero");
    }
    const auto& torus = std::get<SolidTorus>(scaled.scaled_spec.shape);
    const specfun::FundamentalSolution g(specfun::Dimension(3));
    const Eigen::MatrixXd sources =
        offset_surface_points(scaled.scaled_spec, fit.n_sources, collar_width + fit.gap);

    rng::Engine gen(fit.seed);
    // Grid nodes, each at random azimuth; a random subset is held out.
    const int total = grid.n_s * grid.n_phi;
    std::vector<int> order(total);
    for (int k = 0; k < total; ++k) order[k] = k;
    for (int k = total - 1; k > 0; --k) {
        const int m = static_cast<int>(rng::uniform01(gen) * (k + 1));
        std::swap(order[k], order[m]);
    }
    const int n_hold = std::min(fit.n_holdout, total / 4);
    const int n_fit_nodes = std::min(fit.n_colloc, total - n_hold);
    auto node_point = [&](int k, double& value) {
        const int i = k / grid.n_phi;
        const int j = k % grid.n_phi;
        const Eigen::Vector2d m = grid.meridian_point(i, j);
        const double theta = 2.0 * kPi * rng::uniform01(gen);
        value = grid.values(i, j);
        return Eigen::Vector3d(torus.center(0) + m(0) * std::cos(theta),
                               torus.center(1) + m(0) * std::sin(theta), torus.center(2) + m(1));
    };
    Eigen::MatrixXd colloc(3, n_fit_nodes + fit.n_boundary);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(colloc.cols());
    for (int k = 0; k < n_fit_nodes; ++k) {
        double v = 0;
        colloc.col(k) = node_point(order[n_hold + k], v);
        rhs(k) = v;
    }
    colloc.rightCols(fit.n_boundary) = sample_offset_surface(scaled.scaled_spec, fit.n_boundary, 0.0, gen);
    Eigen::MatrixXd hold(3, n_hold);
    Eigen::VectorXd hold_val(n_hold);
    for (int k = 0; k < n_hold; ++k) {
        double v = 0;
        hold.col(k) = node_point(order[k], v);
        hold_val(k) = v;
    }

    const Eigen::MatrixXd a = PointSourceSum::collocation_matrix(g, colloc, sources);
    const auto ls = linalg::truncated_svd_solve(a, rhs, fit.svd_tol);
    ext.rank = ls.rank;
    ext.collocation_residual = (a * ls.solution - rhs).cwiseAbs().maxCoeff();
    ext.sources = PointSourceSum(specfun::Dimension(3), sources, ls.solution);
    const Eigen::MatrixXd ah = PointSourceSum::collocation_matrix(g, hold, sources);
    ext.holdout_mismatch = n_hold > 0 ? (ah * ls.solution - hold_val).cwiseAbs().maxCoeff() : 0.0;
    if (!(ext.holdout_mismatch < fit.tolerance)) {
        throw StageFailure("extend_eigenfunction: held-out mismatch " +
                               std::to_string(ext.holdout_mismatch) + " exceeds tolerance",
                           ext.holdout_mismatch);
    }
    return ext;
}

double evaluate_extension(const Extension& ext, const ScaledDomain& scaled,
                          const Eigen::VectorXd& x) {
    if (ext.sources) return ext.sources->value(x);
    return evaluate(scaled.eigen, x);
}

Eigen::VectorXd gradient_extension(const Extension& ext, const ScaledDomain& scaled,
                                   const Eigen::VectorXd& x) {
    if (ext.sources) return ext.sources->gradient(x);
    const auto& b = std::get<ClosedFormBall>(scaled.eigen.eigenfunction);
    const specfun::Dimension d(b.d);
    const Eigen::VectorXd diff = x - b.center;
    const double r = diff.norm();
    if (r == 0.0) return Eigen::VectorXd::Zero(x.size());
    const double slope = -b.wavenumber * specfun::hyperspherical_jl(d, 1, b.wavenumber * r) /
                         specfun::hyperspherical_jl(d, 0, 0.0);
    return slope / r * diff;
}

// ---------------------------------------------------------------- placement

PlacementCertificate check_unlinked_placement(const std::vector<SurfaceSpec>& specs, double pad) {
    if (specs.empty()) throw ValidationError("check_unlinked_placement: no domains given");
    PlacementCertificate cert;
    cert.pairwise_separation = std::numeric_limits<double>::infinity();
    for (const auto& s : specs) cert.bounding_balls.push_back(bounding_ball(s, pad));
    cert.certified = true;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        for (std::size_t j = i + 1; j < specs.size(); ++j) {
            const auto& a = cert.bounding_balls[i];
            const auto& b = cert.bounding_balls[j];
            if (a.center.size() != b.center.size()) {
                throw ValidationError("check_unlinked_placement: mixed dimensions");
            }
            const double gap = (a.center - b.center).norm() - a.radius - b.radius;
            if (gap < cert.pairwise_separation) cert.pairwise_separation = gap;
            if (!(gap > 0.0) && cert.certified) {
                cert.certified = false;
                cert.offending_pair = {static_cast<int>(i), static_cast<int>(j)};
            }
        }
    }
    return cert;
}

PlacementCertificate check_unlinked_placement(const std::vector<ScaledDomain>& domains,
                                              double pad) {
    std::vector<SurfaceSpec> specs;
    for (const auto& d : domains) specs.push_back(d.scaled_spec);
    return check_unlinked_placement(specs, pad);
}

}  // namespace actopo::domains
