#include "actopo/runge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <string>

#include "actopo/error.hpp"
#include "actopo/harmonics.hpp"
#include "actopo/linalg.hpp"
#include "actopo/quadrature.hpp"

namespace actopo::runge {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::MatrixXd hcat(const std::vector<Eigen::MatrixXd>& blocks, int rows) {
    Eigen::Index cols = 0;
    for (const auto& b : blocks) cols += b.cols();
    Eigen::MatrixXd out(rows, cols);
    Eigen::Index c = 0;
    for (const auto& b : blocks) {
        out.middleCols(c, b.cols()) = b;
        c += b.cols();
    }
    return out;
}

int region_dimension(const FitRegion& region) {
    if (region.domains.empty()) throw ValidationError("fit region has no domains");
    return region.domains.front().scaled_spec.dimension();
}

Eigen::VectorXd values_at(const Field& f, const Eigen::MatrixXd& pts) {
    Eigen::VectorXd v(pts.cols());
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < pts.cols(); ++i) v(i) = f.value(pts.col(i));
    return v;
}

std::pair<PointSourceSum, ApproximationReport> solve_fit(const Field& target,
                                                         const Eigen::MatrixXd& sources,
                                                         const Eigen::MatrixXd& colloc,
                                                         const Eigen::MatrixXd& holdout,
                                                         const FitParams& params, int d) {
    const specfun::FundamentalSolution g{specfun::Dimension(d)};
    const Eigen::MatrixXd a = PointSourceSum::collocation_matrix(g, colloc, sources);
    const Eigen::VectorXd b = values_at(target, colloc);
    const auto ls = linalg::truncated_svd_solve(a, b, params.svd_tol);
    PointSourceSum fit(specfun::Dimension(d), sources, ls.solution);
    ApproximationReport rep = compare(field_of(fit), target, holdout, params.tolerance);
    rep.n_sources = static_cast<int>(sources.cols());
    rep.rank = ls.rank;
    return {std::move(fit), rep};
}

void check_fit_params(const FitParams& p) {
    if (p.n_sources < 1) throw ValidationError("fit: n_sources must be >= 1");
    if (p.n_colloc < 2 * p.n_sources) throw ValidationError("fit: n_colloc must be >= 2 n_sources");
    if (!(p.svd_tol > 0.0)) throw ValidationError("fit: svd_tol must be > 0");
    if (!(p.tolerance > 0.0)) throw ValidationError("fit: tolerance must be > 0");
}

}  // namespace

Field field_of(const PointSourceSum& s) {
    return Field{[&s](const Eigen::VectorXd& x) { return s.value(x); },
                 [&s](const Eigen::VectorXd& x) { return s.gradient(x); }};
}

Field eigenfunction_target(const std::vector<domains::ScaledDomain>& doms,
                           const std::vector<domains::Extension>& exts) {
    if (doms.size() != exts.size() || doms.empty()) {
        throw ValidationError("eigenfunction_target: need one extension per domain");
    }
    // Own copies, so the field outlives the caller's vectors.
    const auto d = std::make_shared<const std::vector<domains::ScaledDomain>>(doms);
    const auto e = std::make_shared<const std::vector<domains::Extension>>(exts);
    auto nearest = [d](const Eigen::VectorXd& x) {
        std::size_t best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < d->size(); ++j) {
            const double sd = domains::signed_distance((*d)[j].scaled_spec, x);
            if (sd < bd) {
                bd = sd;
                best = j;
            }
        }
        return best;
    };
    return Field{[d, e, nearest](const Eigen::VectorXd& x) {
                     const auto j = nearest(x);
                     return domains::evaluate_extension((*e)[j], (*d)[j], x);
                 },
                 [d, e, nearest](const Eigen::VectorXd& x) {
                     const auto j = nearest(x);
                     return domains::gradient_extension((*e)[j], (*d)[j], x);
                 }};
}

Eigen::MatrixXd holdout_points(const FitRegion& region, int n, std::uint64_t seed, double shrink) {
    const int d = region_dimension(region);
    const int per = std::max(4, n / static_cast<int>(region.domains.size()));
    rng::Engine gen(seed * 0x9E3779B97F4A7C15ULL + 17);
    std::vector<Eigen::MatrixXd> blocks;
    for (const auto& dom : region.domains) {
        const int n_surf = per / 4;
        blocks.push_back(domains::sample_interior(dom.scaled_spec, per - n_surf, gen, -shrink));
        blocks.push_back(domains::sample_offset_surface(dom.scaled_spec, n_surf, -shrink, gen));
    }
    return hcat(blocks, d);
}

Eigen::MatrixXd collocation_points(const FitRegion& region, int n, std::uint64_t seed) {
    const int d = region_dimension(region);
    const int per = std::max(4, n / static_cast<int>(region.domains.size()));
    rng::Engine gen(seed * 0xD1B54A32D192ED03ULL + 5);
    std::vector<Eigen::MatrixXd> blocks;
    for (const auto& dom : region.domains) {
        const int n_surf = per / 3;
        blocks.push_back(domains::sample_interior(dom.scaled_spec, per - n_surf, gen, region.band));
        blocks.push_back(domains::sample_offset_surface(dom.scaled_spec, n_surf, region.band, gen));
    }
    return hcat(blocks, d);
}

ApproximationReport compare(const Field& approx, const Field& target, const Eigen::MatrixXd& pts,
                            double tolerance) {
    ApproximationReport rep;
    rep.tolerance = tolerance;
    rep.sample_count = static_cast<int>(pts.cols());
    std::vector<double> e0(pts.cols()), e1(pts.cols());
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < pts.cols(); ++i) {
        const Eigen::VectorXd x = pts.col(i);
        e0[i] = std::abs(approx.value(x) - target.value(x));
        e1[i] = (approx.gradient(x) - target.gradient(x)).norm();
    }
    for (Eigen::Index i = 0; i < pts.cols(); ++i) {
        rep.sup_err_C0 = std::max(rep.sup_err_C0, e0[i]);
        rep.sup_err_C1 = std::max(rep.sup_err_C1, e1[i]);
    }
    return rep;
}

std::pair<PointSourceSum, ApproximationReport> fit_shell_sources(const Field& target,
                                                                 const FitRegion& region,
                                                                 double shell_offset,
                                                                 const FitParams& params) {
    check_fit_params(params);
    const int d = region_dimension(region);
    if (!(shell_offset > region.band)) {
        throw ValidationError("fit_shell_sources: shell offset must exceed the fit band");
    }
    const Eigen::MatrixXd holdout = holdout_points(region, params.n_holdout, params.seed);
    const int ndom = static_cast<int>(region.domains.size());
    int n_src = params.n_sources;
    int escalations = 0;
    std::optional<std::pair<PointSourceSum, ApproximationReport>> best;
    for (;;) {
        std::vector<Eigen::MatrixXd> blocks;
        for (const auto& dom : region.domains) {
            blocks.push_back(domains::offset_surface_points(dom.scaled_spec,
                                                            std::max(1, n_src / ndom), shell_offset));
        }
        const Eigen::MatrixXd sources = hcat(blocks, d);
        const int n_colloc = std::max(2 * static_cast<int>(sources.cols()),
                                      params.n_colloc * (n_src / params.n_sources));
        const Eigen::MatrixXd colloc = collocation_points(region, n_colloc, params.seed);
        auto result = solve_fit(target, sources, colloc, holdout, params, d);
        result.second.escalations = escalations;
        if (!best || result.second.sup_err_C1 < best->second.sup_err_C1) best = result;
        if (result.second.pass()) return result;
        if (2 * n_src > params.max_sources) break;
        n_src *= 2;
        ++escalations;
    }
    throw StageFailure("fit_shell_sources: C1 error " + std::to_string(best->second.sup_err_C1) +
                           " above tolerance after escalation",
                       best->second.sup_err_C1);
}

std::pair<PointSourceSum, ApproximationReport> push_sources_outside(const PointSourceSum& w2,
                                                                    const FitRegion& region,
                                                                    double big_r,
                                                                    double outer_radius,
                                                                    const FitParams& params) {
    check_fit_params(params);
    const int d = region_dimension(region);
    for (const auto& dom : region.domains) {
        if (!(domains::circumradius(dom.scaled_spec, region.band) < big_r)) {
            throw ValidationError("push_sources_outside: B_R does not contain domain '" +
                                  dom.scaled_spec.label + "'");
        }
    }
    if (!(outer_radius > big_r)) {
        throw ValidationError("push_sources_outside: outer radius must exceed R");
    }
    // Only sources at or beyond the outer sphere are kept. One kept just
    // outside R would cap the Fourier-Bessel convergence rate at roughly
    // (R / |y|)^l and stall the tail rule.
    std::vector<int> keep;
    for (Eigen::Index n = 0; n < w2.size(); ++n) {
        if (w2.points().col(n).norm() >= outer_radius) keep.push_back(static_cast<int>(n));
    }
    Eigen::MatrixXd kept(d, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) kept.col(k) = w2.points().col(keep[k]);

    const Field target = field_of(w2);
    const Eigen::MatrixXd holdout = holdout_points(region, params.n_holdout, params.seed);
    const domains::SurfaceSpec sphere{domains::Ball{Eigen::VectorXd::Zero(d), outer_radius}, "outer"};
    int n_src = params.n_sources;
    int escalations = 0;
    std::optional<std::pair<PointSourceSum, ApproximationReport>> best;
    for (;;) {
        const Eigen::MatrixXd lattice = domains::offset_surface_points(sphere, n_src, 0.0);
        const Eigen::MatrixXd sources = hcat({kept, lattice}, d);
        const int n_colloc = std::max(2 * static_cast<int>(sources.cols()),
                                      params.n_colloc * (n_src / params.n_sources));
        const Eigen::MatrixXd colloc = collocation_points(region, n_colloc, params.seed + 1);
        auto result = solve_fit(target, sources, colloc, holdout, params, d);
        result.second.escalations = escalations;
        if (!best || result.second.sup_err_C1 < best->second.sup_err_C1) best = result;
        if (result.second.pass()) return result;
        if (2 * n_src > params.max_sources) break;
        n_src *= 2;
        ++escalations;
    }
    throw StageFailure("push_sources_outside: C1 error " +
                           std::to_string(best->second.sup_err_C1) + " above tolerance",
                       best->second.sup_err_C1);
}

// ---------------------------------------------------------------- Fourier-Bessel

FourierBesselSolution::FourierBesselSolution(specfun::Dimension d, int lmax, Eigen::VectorXd coeffs,
                                             Eigen::VectorXd axis, double ball_radius, bool zonal)
    : d_(d), lmax_(lmax), coeffs_(std::move(coeffs)), axis_(std::move(axis)),
      ball_radius_(ball_radius), zonal_(zonal) {
    if (lmax_ < 0) throw ValidationError("FourierBesselSolution: lmax must be >= 0");
    if (!zonal_ && d.value() != 3) {
        throw ValidationError("FourierBesselSolution: full harmonics are only supported in d = 3");
    }
    const Eigen::Index want = zonal_ ? lmax_ + 1 : harmonics::sh_count(lmax_);
    if (coeffs_.size() != want) throw ValidationError("FourierBesselSolution: wrong coefficient count");
    if (axis_.size() != d.value()) {
        axis_ = Eigen::VectorXd::Unit(d.value(), d.value() - 1);
    }
    axis_.normalize();
}

double FourierBesselSolution::zonal_value(double r, double t) const {
    const int n = lmax_ + 1;
    std::vector<double> j(n), dj(n), jr(n), c(n), dc(n);
    specfun::hyperspherical_sequence(d_, lmax_, r, j, dj, jr);
    if (zonal_) {
        specfun::gegenbauer_sequence(d_.gegenbauer_lambda(), t, c, dc);
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += coeffs_(l) * j[l] * c[l];
        return s;
    }
    const auto zc = zonal_coefficients();
    specfun::gegenbauer_sequence(0.5, t, c, dc);
    double s = 0.0;
    for (int l = 0; l < n; ++l) s += zc[l] * j[l] * c[l];
    return s;
}

std::vector<double> FourierBesselSolution::zonal_coefficients() const {
    std::vector<double> out(lmax_ + 1);
    for (int l = 0; l <= lmax_; ++l) {
        out[l] = zonal_ ? coeffs_(l)
                        : coeffs_(harmonics::sh_index(l, 0)) * std::sqrt((2.0 * l + 1.0) / (4.0 * kPi));
    }
    return out;
}

FourierBesselSolution FourierBesselSolution::negated() const {
    return FourierBesselSolution(d_, lmax_, -coeffs_, axis_, ball_radius_, zonal_);
}

double FourierBesselSolution::value(const Eigen::VectorXd& x) const {
    double v = 0.0;
    Eigen::VectorXd g;
    value_and_gradient(x, v, g);
    return v;
}

Eigen::VectorXd FourierBesselSolution::gradient(const Eigen::VectorXd& x) const {
    double v = 0.0;
    Eigen::VectorXd g;
    value_and_gradient(x, v, g);
    return g;
}

void FourierBesselSolution::value_and_gradient(const Eigen::VectorXd& x, double& v,
                                               Eigen::VectorXd& grad) const {
    const int dim = d_.value();
    if (x.size() != dim) throw ValidationError("FourierBesselSolution: point has the wrong dimension");
    const int n = lmax_ + 1;
    const double r = x.norm();
    std::vector<double> j(n), dj(n), jr(n);
    specfun::hyperspherical_sequence(d_, lmax_, r, j, dj, jr);
    v = 0.0;
    grad = Eigen::VectorXd::Zero(dim);

    if (zonal_) {
        std::vector<double> c(n), dc(n);
        const Eigen::VectorXd xhat = r > 0 ? Eigen::VectorXd(x / r) : axis_;
        const double t = std::clamp(xhat.dot(axis_), -1.0, 1.0);
        specfun::gegenbauer_sequence(d_.gegenbauer_lambda(), t, c, dc);
        double radial = 0.0, tangential = 0.0;
        for (int l = 0; l < n; ++l) {
            v += coeffs_(l) * j[l] * c[l];
            radial += coeffs_(l) * dj[l] * c[l];
            tangential += coeffs_(l) * jr[l] * dc[l];
        }
        grad = radial * xhat + tangential * (axis_ - t * xhat);
        return;
    }

    // d = 3, real spherical harmonics in the standard frame.
    const double theta = r > 0 ? std::acos(std::clamp(x(2) / r, -1.0, 1.0)) : 0.0;
    const double phi = std::atan2(x(1), x(0));
    harmonics::ShValues sh;
    harmonics::real_spherical_harmonics(lmax_, theta, phi, sh, true);
    double radial = 0.0, dth = 0.0, dph = 0.0;
    for (int l = 0; l <= lmax_; ++l) {
        double sy = 0.0, st = 0.0, sp = 0.0;
        for (int m = -l; m <= l; ++m) {
            const int k = harmonics::sh_index(l, m);
            const double c = coeffs_(k);
            if (c == 0.0) continue;
            sy += c * sh.y[k];
            st += c * sh.d_theta[k];
            sp += c * sh.d_phi_sin[k];
        }
        v += j[l] * sy;
        radial += dj[l] * sy;
        dth += jr[l] * st;
        dph += jr[l] * sp;
    }
    const double ct = std::cos(theta), stn = std::sin(theta);
    const double cp = std::cos(phi), sp = std::sin(phi);
    const Eigen::Vector3d rhat(stn * cp, stn * sp, ct);
    const Eigen::Vector3d that(ct * cp, ct * sp, -stn);
    const Eigen::Vector3d phat(-sp, cp, 0.0);
    grad = radial * rhat + dth * that + dph * phat;
}

Field field_of(const FourierBesselSolution& w) {
    return Field{[&w](const Eigen::VectorXd& x) { return w.value(x); },
                 [&w](const Eigen::VectorXd& x) { return w.gradient(x); }};
}

std::vector<double> max_abs_jl(specfun::Dimension d, int lmax, double big_r) {
    const int n = lmax + 1;
    std::vector<double> best(n, 0.0), j(n), dj(n), jr(n);
    const int steps = std::max(2000, static_cast<int>(40.0 * big_r));
    for (int s = 0; s <= steps; ++s) {
        const double r = big_r * s / steps;
        specfun::hyperspherical_sequence(d, lmax, r, j, dj, jr);
        for (int l = 0; l < n; ++l) best[l] = std::max(best[l], std::abs(j[l]));
    }
    return best;
}

std::tuple<FourierBesselSolution, ApproximationReport, ExpansionInfo> expand_fourier_bessel(
    const Field& w3, specfun::Dimension d, double big_r, const ExpansionParams& params,
    const Eigen::MatrixXd& check_points) {
    if (!(big_r > 0.0)) throw ValidationError("expand_fourier_bessel: R must be > 0");
    const int dim = d.value();
    const bool zonal = dim >= 4;
    const int cap = params.l0 ? *params.l0 : params.lmax_cap;
    if (cap < 0) throw ValidationError("expand_fourier_bessel: truncation degree must be >= 0");
    const double r_a = params.r_a > 0 ? params.r_a : 0.95 * big_r;
    const double r_b = params.r_b > 0 ? params.r_b : 0.8 * big_r;
    if (!(r_a < big_r) || !(r_b < big_r)) {
        throw ValidationError("expand_fourier_bessel: sample radii must be below R");
    }
    Eigen::VectorXd axis = params.axis.size() == dim ? params.axis.normalized()
                                                     : Eigen::VectorXd::Unit(dim, dim - 1);
    const int n_p = params.polar_nodes > 0 ? params.polar_nodes : cap + (zonal ? 8 : 24);
    const int n_a = params.azimuth_nodes > 0 ? params.azimuth_nodes : 2 * cap + (zonal ? 16 : 48);
    if (n_p < cap + 1 || n_a < 2 * cap + 1) {
        throw ValidationError("expand_fourier_bessel: sphere quadrature too coarse for the degree");
    }

    // Radius per degree: r_a unless j_l(r_a) is near a zero.
    const int n = cap + 1;
    std::vector<double> ja(n), jb(n), tmp1(n), tmp2(n);
    specfun::hyperspherical_sequence(d, cap, r_a, ja, tmp1, tmp2);
    specfun::hyperspherical_sequence(d, cap, r_b, jb, tmp1, tmp2);
    const auto max_a = max_abs_jl(d, cap, r_a);
    const auto max_b = max_abs_jl(d, cap, r_b);
    ExpansionInfo info;
    info.radius_used.resize(n);
    std::vector<int> use_b(n, 0);
    for (int l = 0; l < n; ++l) {
        if (std::abs(ja[l]) >= params.near_zero * max_a[l]) {
            info.radius_used[l] = r_a;
        } else if (std::abs(jb[l]) >= params.near_zero * max_b[l]) {
            info.radius_used[l] = r_b;
            use_b[l] = 1;
        } else {
            throw ValidationError("expand_fourier_bessel: both sample radii are near zeros of j_l for l = " +
                                  std::to_string(l));
        }
    }
    const bool need_b = std::any_of(use_b.begin(), use_b.end(), [](int u) { return u != 0; });

    quad::SphereRule rule = zonal ? quad::sphere_product_rule(dim, n_p, n_a, axis)
                                  : quad::sphere_product_rule(3, n_p, n_a, Eigen::Vector3d::UnitZ());
    const Eigen::Index nq = rule.points.cols();
    auto sample = [&](double r) {
        Eigen::VectorXd f(nq);
#pragma omp parallel for schedule(static)
        for (Eigen::Index k = 0; k < nq; ++k) f(k) = w3.value(Eigen::VectorXd(r * rule.points.col(k)));
        return f;
    };
    const Eigen::VectorXd fa = sample(r_a);
    const Eigen::VectorXd fb = need_b ? sample(r_b) : Eigen::VectorXd();

    const int n_coef = zonal ? n : harmonics::sh_count(cap);
    Eigen::VectorXd pa = Eigen::VectorXd::Zero(n_coef), pb = Eigen::VectorXd::Zero(n_coef);
    if (zonal) {
        std::vector<double> c(n), dc(n);
        for (Eigen::Index k = 0; k < nq; ++k) {
            const double t = std::clamp(rule.points.col(k).dot(axis), -1.0, 1.0);
            specfun::gegenbauer_sequence(d.gegenbauer_lambda(), t, c, dc);
            for (int l = 0; l < n; ++l) {
                pa(l) += rule.weights[k] * fa(k) * c[l];
                if (need_b) pb(l) += rule.weights[k] * fb(k) * c[l];
            }
        }
    } else {
        harmonics::ShValues sh;
        for (Eigen::Index k = 0; k < nq; ++k) {
            const Eigen::Vector3d u = rule.points.col(k);
            const double theta = std::acos(std::clamp(u(2), -1.0, 1.0));
            const double phi = std::atan2(u(1), u(0));
            harmonics::real_spherical_harmonics(cap, theta, phi, sh, false);
            for (int i = 0; i < n_coef; ++i) {
                pa(i) += rule.weights[k] * fa(k) * sh.y[i];
                if (need_b) pb(i) += rule.weights[k] * fb(k) * sh.y[i];
            }
        }
    }

    // Coefficients and the tail amplitudes.
    Eigen::VectorXd coeffs(n_coef);
    const double area_sub = specfun::sphere_area(dim - 1);
    const auto max_r = max_abs_jl(d, cap, big_r);
    info.tail.assign(n, 0.0);
    for (int l = 0; l < n; ++l) {
        const double jl = use_b[l] ? jb[l] : ja[l];
        const Eigen::VectorXd& p = use_b[l] ? pb : pa;
        double amp = 0.0;
        if (zonal) {
            const double norm = area_sub * specfun::gegenbauer_norm(l, d.gegenbauer_lambda());
            coeffs(l) = p(l) / (jl * norm);
            amp = std::abs(coeffs(l)) * specfun::gegenbauer_at_one(l, d.gegenbauer_lambda());
        } else {
            double ss = 0.0;
            for (int m = -l; m <= l; ++m) {
                const int i = harmonics::sh_index(l, m);
                coeffs(i) = p(i) / jl;
                ss += coeffs(i) * coeffs(i);
            }
            amp = std::sqrt(ss * (2.0 * l + 1.0) / (4.0 * kPi));
        }
        info.tail[l] = amp * max_r[l];
    }

    int l0 = cap;
    info.tail_satisfied = true;
    if (!params.l0) {
        const double thresh = 0.01 * params.tolerance;
        info.tail_satisfied = false;
        for (int l = 0; l + 2 <= cap; ++l) {
            if (info.tail[l + 1] < thresh && info.tail[l + 2] < thresh) {
                l0 = l;
                info.tail_satisfied = true;
                break;
            }
        }
    }
    info.l0 = l0;
    const int keep = zonal ? l0 + 1 : harmonics::sh_count(l0);
    FourierBesselSolution w(d, l0, coeffs.head(keep), axis, big_r, zonal);
    ApproximationReport rep = compare(field_of(w), w3, check_points, params.tolerance);
    return {std::move(w), rep, std::move(info)};
}

DecayFit verify_decay(const Field& w, const std::vector<Eigen::VectorXd>& rays, double r_min,
                      double r_max, double step) {
    if (!(r_min > 0.0) || !(r_max > r_min)) throw ValidationError("verify_decay: bad radius range");
    DecayFit fit;
    double total = 0.0;
    int used = 0;
    for (const auto& ray : rays) {
        const Eigen::VectorXd u = ray.normalized();
        const int n = static_cast<int>((r_max - r_min) / step) + 1;
        std::vector<double> r(n), a(n);
        for (int i = 0; i < n; ++i) {
            r[i] = r_min + i * step;
            a[i] = std::abs(w.value(Eigen::VectorXd(r[i] * u)));
        }
        // Envelope: local maxima of |w|.
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int m = 0;
        for (int i = 1; i + 1 < n; ++i) {
            if (a[i] > 0 && a[i] >= a[i - 1] && a[i] >= a[i + 1]) {
                const double lx = std::log(r[i]), ly = std::log(a[i]);
                sx += lx;
                sy += ly;
                sxx += lx * lx;
                sxy += lx * ly;
                ++m;
            }
        }
        const double den = m * sxx - sx * sx;
        if (m < 3 || !(std::abs(den) > 0)) {
            fit.per_ray.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        const double slope = (m * sxy - sx * sy) / den;
        fit.per_ray.push_back(slope);
        total += slope;
        ++used;
    }
    fit.defined = used > 0;
    fit.exponent = used > 0 ? total / used : std::numeric_limits<double>::quiet_NaN();
    return fit;
}

}  // namespace actopo::runge
