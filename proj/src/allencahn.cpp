#include "actopo/allencahn.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>

#include "actopo/error.hpp"

namespace actopo::allencahn {

namespace {

using weighted::RadialGrid;
using weighted::RadialSamples;
using weighted::WeightedField;
using weighted::ZonalSamples;

double nu_of(specfun::Dimension d) { return 0.5 * (d.value() - 1); }

bool is_radial(const runge::FourierBesselSolution& w) {
    const auto& c = w.coeffs();
    const double c0 = std::abs(c(0));
    for (int l = 1; l < c.size(); ++l) {
        if (std::abs(c(l)) > 1e-10 * c0) return false;
    }
    return true;
}

int polar_nodes_for(const runge::FourierBesselSolution& w, const PicardParams& p) {
    if (p.polar_nodes > 0) return p.polar_nodes;
    return std::max(16, 3 * w.lmax() + 2);
}

// delta-free samples of w on the grid (values and r-derivatives; zonal adds d_t).
WeightedField sample_w(const runge::FourierBesselSolution& w, std::shared_ptr<const RadialGrid> grid,
                       bool zonal, int n_t) {
    const auto d = w.dimension();
    const int n_r = grid->size();
    const int n_l = w.lmax() + 1;
    Eigen::MatrixXd jv(n_r, n_l), jd(n_r, n_l);
    const auto& nodes = grid->nodes();
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n_r; ++i) {
        std::vector<double> j(n_l), dj(n_l), jr(n_l);
        specfun::hyperspherical_sequence(d, w.lmax(), nodes[i], j, dj, jr);
        for (int l = 0; l < n_l; ++l) {
            jv(i, l) = j[l] * w.coeffs()(l);
            jd(i, l) = dj[l] * w.coeffs()(l);
        }
    }
    WeightedField out;
    out.d = d;
    out.k = 0;
    out.nu = nu_of(d);
    if (!zonal) {
        RadialSamples rs;
        rs.grid = grid;
        // Only the l = 0 term: the radial representation of C_0 = 1.
        rs.values.assign(jv.col(0).data(), jv.col(0).data() + n_r);
        rs.derivs.assign(jd.col(0).data(), jd.col(0).data() + n_r);
        out.rep = std::move(rs);
        return out;
    }
    ZonalSamples z = weighted::make_zonal_samples(d, grid, n_t);
    Eigen::MatrixXd c(n_l, n_t), dc(n_l, n_t);
    std::vector<double> cv(n_l), dcv(n_l);
    for (int j = 0; j < n_t; ++j) {
        specfun::gegenbauer_sequence(d.gegenbauer_lambda(), z.t[j], cv, dcv);
        for (int l = 0; l < n_l; ++l) {
            c(l, j) = cv[l];
            dc(l, j) = dcv[l];
        }
    }
    z.values = jv * c;
    z.d_r = jd * c;
    z.d_t = jv * dc;
    out.rep = std::move(z);
    return out;
}

// a * x + b * y on a shared sample set. Derivatives survive only if both have them.
WeightedField combine(double a, const WeightedField& x, double b, const WeightedField& y) {
    WeightedField out = x;
    out.nu = std::min(x.nu, y.nu);
    if (auto* rs = std::get_if<RadialSamples>(&out.rep)) {
        const auto& ry = std::get<RadialSamples>(y.rep);
        for (std::size_t i = 0; i < rs->values.size(); ++i) rs->values[i] = a * rs->values[i] + b * ry.values[i];
        if (!rs->derivs.empty() && !ry.derivs.empty()) {
            for (std::size_t i = 0; i < rs->derivs.size(); ++i) rs->derivs[i] = a * rs->derivs[i] + b * ry.derivs[i];
        } else {
            rs->derivs.clear();
        }
        return out;
    }
    auto& z = std::get<ZonalSamples>(out.rep);
    const auto& zy = std::get<ZonalSamples>(y.rep);
    z.values = a * z.values + b * zy.values;
    if (z.d_r.size() != 0 && zy.d_r.size() != 0) {
        z.d_r = a * z.d_r + b * zy.d_r;
    } else {
        z.d_r.resize(0, 0);
    }
    if (z.d_t.size() != 0 && zy.d_t.size() != 0) {
        z.d_t = a * z.d_t + b * zy.d_t;
    } else {
        z.d_t.resize(0, 0);
    }
    return out;
}

const RadialGrid& grid_of(const WeightedField& v) {
    if (const auto* rs = std::get_if<RadialSamples>(&v.rep)) return *rs->grid;
    return *std::get<ZonalSamples>(v.rep).grid;
}

double norm0(const WeightedField& v) {
    return weighted::weighted_norm(v, 0, nu_of(v.d), grid_of(v).r_max());
}

weighted::ConvolutionResult convolve(const WeightedField& f, const weighted::ConvolutionParams& p) {
    return std::holds_alternative<ZonalSamples>(f.rep) ? weighted::convolve_zonal(f, p)
                                                       : weighted::convolve_radial(f, p);
}

// Same samples on another radial grid, by per-panel interpolation in r.
WeightedField resample(const WeightedField& v, std::shared_ptr<const RadialGrid> fine) {
    WeightedField out = v;
    if (const auto* rs = std::get_if<RadialSamples>(&v.rep)) {
        RadialSamples o;
        o.grid = fine;
        for (double r : fine->nodes()) o.values.push_back(rs->value(r));
        out.rep = std::move(o);
        return out;
    }
    const auto& z = std::get<ZonalSamples>(v.rep);
    ZonalSamples o = z;
    o.grid = fine;
    o.values.resize(fine->size(), z.t.size());
    o.d_r.resize(0, 0);
    o.d_t.resize(0, 0);
    for (std::size_t j = 0; j < z.t.size(); ++j) {
        const Eigen::VectorXd col = z.values.col(j);
        for (int i = 0; i < fine->size(); ++i) o.values(i, j) = z.grid->interpolate(std::span<const double>(col.data(), col.size()), fine->nodes()[i]);
    }
    out.rep = std::move(o);
    return out;
}

struct Attempt {
    explicit Attempt(const runge::FourierBesselSolution& w) : b(w) {}
    bool ok = false;
    std::string why;
    SolutionBundle b;
};

Attempt run(const runge::FourierBesselSolution& w, const WeightedField& ws, double w_norm, double eps,
            const PicardParams& p) {
    Attempt at(w);
    auto& b = at.b;
    b.d = w.dimension();
    b.zonal = std::holds_alternative<ZonalSamples>(ws.rep);
    b.eps = eps;
    b.w_norm = w_norm;
    b.delta = eps / (2.0 * w_norm);
    const WeightedField base = weighted::scaled(ws, b.delta);
    WeightedField u = base;
    b.norm_history.push_back(norm0(u));
    for (int n = 0; n < p.max_iter; ++n) {
        WeightedField f = weighted::cube(u);
        auto conv = convolve(f, p.conv);
        WeightedField next = combine(1.0, base, 1.0, conv.field);
        next.nu = nu_of(b.d);
        const double dn = norm0(combine(1.0, next, -1.0, u));
        const double nn = norm0(next);
        b.diff_history.push_back(dn);
        b.norm_history.push_back(nn);
        b.iterations = n + 1;
        if (!(nn < eps)) {
            at.why = "norm cap ||u_n|| < eps violated at step " + std::to_string(n + 1);
            return at;
        }
        if (b.diff_history.size() >= 2) {
            const double ratio = dn / b.diff_history[b.diff_history.size() - 2];
            b.contraction_ratios.push_back(ratio);
            if (!(ratio < 0.5)) {
                std::ostringstream os;
                os.precision(6);
                os << "contraction ratio " << ratio << " >= 1/2 at step " << n + 1;
                at.why = os.str();
                return at;
            }
        }
        u = std::move(next);
        b.f = std::move(f);
        b.gu3 = std::move(conv.field);
        b.tail_bound = conv.tail_bound;
        if (dn < p.tol) {
            at.ok = true;
            break;
        }
    }
    if (!at.ok) {
        at.why = "no convergence in " + std::to_string(p.max_iter) + " steps";
        return at;
    }
    b.u = u;
    const auto check = convolve(weighted::cube(u), p.conv);
    b.fixed_point_defect = norm0(combine(1.0, b.gu3, -1.0, check.field));
    b.closeness = norm0(b.gu3) / b.delta;
    return at;
}

double sphere_eval(const Eigen::MatrixXd& coeff, const RadialGrid& g, double lam, double r, double t,
                   double* dt) {
    const int q = g.order();
    const int p = g.panel_of(r);
    std::vector<double> iw(q);
    g.interpolation_weights(r, iw);
    const int n_l = static_cast<int>(coeff.cols());
    std::vector<double> c(n_l), dc(n_l);
    specfun::gegenbauer_sequence(lam, t, c, dc);
    double v = 0.0, vt = 0.0;
    for (int l = 0; l < n_l; ++l) {
        double a = 0.0;
        for (int k = 0; k < q; ++k) a += iw[k] * coeff(p * q + k, l);
        v += a * c[l];
        vt += a * dc[l];
    }
    if (dt != nullptr) *dt = vt;
    return v;
}

void check_radius(double r, double r_max) {
    if (r > r_max) {
        throw ValidationError("evaluator: |x| = " + std::to_string(r) + " beyond the sampled radius " +
                              std::to_string(r_max));
    }
}

// Raw Delta_h u + u - u^3 (or the linear part only) at each column, per step.
std::vector<std::vector<double>> fd_levels(const std::function<double(const Eigen::VectorXd&)>& u,
                                           const Eigen::MatrixXd& pts, const std::vector<double>& hs,
                                           bool nonlinear, double& umax) {
    const int d = static_cast<int>(pts.rows());
    const int n = static_cast<int>(pts.cols());
    std::vector<std::vector<double>> out(hs.size(), std::vector<double>(n));
    std::vector<double> um(n, 0.0);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < n; ++c) {
        const Eigen::VectorXd x = pts.col(c);
        const double u0 = u(x);
        um[c] = std::abs(u0);
        for (std::size_t s = 0; s < hs.size(); ++s) {
            const double h = hs[s];
            double lap = 0.0;
            for (int i = 0; i < d; ++i) {
                Eigen::VectorXd xp = x, xm = x;
                xp(i) += h;
                xm(i) -= h;
                lap += u(xp) - 2.0 * u0 + u(xm);
            }
            lap /= h * h;
            out[s][c] = lap + u0 - (nonlinear ? u0 * u0 * u0 : 0.0);
        }
    }
    umax = 0.0;
    for (double v : um) umax = std::max(umax, v);
    return out;
}

double sup_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

SolutionBundle picard_iterate(const runge::FourierBesselSolution& w, double eps, const PicardParams& params) {
    const auto d = w.dimension();
    if (d.value() < 4) {
        throw ValidationError(
            "picard_iterate: d = " + std::to_string(d.value()) +
            " < 4; the cubic estimate ||G*(v^3)|| <= C ||v||^3 in the weight (d-1)/2 needs "
            "3(d-1)/2 > d, and d = 3 is the boundary case");
    }
    if (!(eps > 0.0)) throw ValidationError("picard_iterate: eps must be > 0");
    if (!(params.tol > 0.0) || params.max_iter < 1 || params.max_halvings < 0) {
        throw ValidationError("picard_iterate: tol > 0, max_iter >= 1 and max_halvings >= 0 required");
    }
    if (!w.zonal()) throw ValidationError("picard_iterate: w must be a zonal series");
    const bool radial = is_radial(w);
    bool zonal = !radial;
    if (params.symmetry == Symmetry::radial) {
        if (!radial) throw ValidationError("picard_iterate: radial symmetry requested but w has l >= 1 content");
        zonal = false;
    } else if (params.symmetry == Symmetry::zonal) {
        zonal = true;
    }
    auto grid = std::make_shared<const RadialGrid>(params.conv.r_max, params.conv.panel, params.conv.order,
                                                   params.conv.graded);
    const WeightedField ws = sample_w(w, grid, zonal, polar_nodes_for(w, params));
    const double w_norm = norm0(ws);
    if (!(w_norm > 0.0)) throw ValidationError("picard_iterate: w vanishes on the grid, delta undefined");

    double e = eps;
    std::string last;
    for (int h = 0; h <= params.max_halvings; ++h, e *= 0.5) {
        Attempt at = run(w, ws, w_norm, e, params);
        if (at.ok) {
            at.b.eps_requested = eps;
            at.b.halvings = h;
            return at.b;
        }
        last = at.why;
    }
    throw StageFailure("picard_iterate: no contraction after " + std::to_string(params.max_halvings) +
                           " halvings of eps (last eps " + std::to_string(e * 2.0) + ": " + last + ")",
                       e * 2.0);
}

runge::Field field_of(const WeightedField& v, const Eigen::VectorXd& axis) {
    runge::Field f;
    if (const auto* rs0 = std::get_if<RadialSamples>(&v.rep)) {
        auto rs = std::make_shared<const RadialSamples>(*rs0);
        f.value = [rs](const Eigen::VectorXd& x) {
            const double r = x.norm();
            check_radius(r, rs->grid->r_max());
            return rs->value(r);
        };
        f.gradient = [rs](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            const double r = x.norm();
            check_radius(r, rs->grid->r_max());
            if (r == 0.0) return Eigen::VectorXd::Zero(x.size());
            return rs->deriv(r) / r * x;
        };
        return f;
    }
    const auto& z = std::get<ZonalSamples>(v.rep);
    const double lam = v.d.gegenbauer_lambda();
    const int lmax = static_cast<int>(z.t.size()) - 1;
    auto coeff = std::make_shared<const Eigen::MatrixXd>(weighted::zonal_project(z, v.d, lmax, z.values));
    std::shared_ptr<const Eigen::MatrixXd> dcoeff;
    if (z.d_r.size() != 0) {
        dcoeff = std::make_shared<const Eigen::MatrixXd>(weighted::zonal_project(z, v.d, lmax, z.d_r));
    }
    auto grid = z.grid;
    const Eigen::VectorXd a = axis.normalized();
    f.value = [coeff, grid, lam, a](const Eigen::VectorXd& x) {
        const double r = x.norm();
        check_radius(r, grid->r_max());
        const double t = r > 0.0 ? std::clamp(x.dot(a) / r, -1.0, 1.0) : 1.0;
        return sphere_eval(*coeff, *grid, lam, r, t, nullptr);
    };
    f.gradient = [coeff, dcoeff, grid, lam, a](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        const double r = x.norm();
        check_radius(r, grid->r_max());
        if (r == 0.0) return Eigen::VectorXd::Zero(x.size());
        const Eigen::VectorXd xh = x / r;
        const double t = std::clamp(xh.dot(a), -1.0, 1.0);
        double vt = 0.0;
        sphere_eval(*coeff, *grid, lam, r, t, &vt);
        double vr = 0.0;
        if (dcoeff) {
            vr = sphere_eval(*dcoeff, *grid, lam, r, t, nullptr);
        } else {
            // Differentiate the panel interpolant of each degree.
            std::vector<double> c(coeff->cols()), dc(coeff->cols());
            specfun::gegenbauer_sequence(lam, t, c, dc);
            for (int l = 0; l < coeff->cols(); ++l) {
                Eigen::VectorXd col = coeff->col(l);
                vr += grid->derivative(std::span<const double>(col.data(), col.size()), r) * c[l];
            }
        }
        return vr * xh + (vt / r) * (a - t * xh);
    };
    return f;
}

runge::Field evaluator(const SolutionBundle& b) {
    const runge::Field g = field_of(b.gu3, b.w.axis());
    auto w = std::make_shared<const runge::FourierBesselSolution>(b.w);
    const double delta = b.delta;
    runge::Field f;
    f.value = [w, g, delta](const Eigen::VectorXd& x) { return delta * w->value(x) + g.value(x); };
    f.gradient = [w, g, delta](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return delta * w->gradient(x) + g.gradient(x);
    };
    return f;
}

ResidualReport residual_check(const runge::Field& u, const Eigen::MatrixXd& pts, double h0) {
    if (!(h0 > 0.0)) throw ValidationError("residual_check: h0 must be > 0");
    ResidualReport rep;
    rep.h = {h0, 0.5 * h0, 0.25 * h0};
    if (pts.cols() == 0) return rep;
    double umax = 0.0;
    const auto lv = fd_levels(u.value, pts, rep.h, true, umax);
    const int n = static_cast<int>(pts.cols());
    std::vector<double> e1(n), e2(n), d01(n), d12(n);
    for (int c = 0; c < n; ++c) {
        e1[c] = (4.0 * lv[1][c] - lv[0][c]) / 3.0;
        e2[c] = (4.0 * lv[2][c] - lv[1][c]) / 3.0;
        d01[c] = lv[0][c] - lv[1][c];
        d12[c] = lv[1][c] - lv[2][c];
    }
    for (const auto& l : lv) rep.raw_sup.push_back(sup_abs(l));
    rep.sup = sup_abs(e2);
    std::vector<double> spread(n);
    for (int c = 0; c < n; ++c) spread[c] = e2[c] - e1[c];
    const double hmin = rep.h.back();
    const double rounding = 8.0 * pts.rows() * DBL_EPSILON * umax / (hmin * hmin);
    rep.fd_floor = sup_abs(spread) + rounding;
    const double a = sup_abs(d01), b = sup_abs(d12);
    rep.observed_order = (a > 0.0 && b > 0.0) ? std::log2(a / b) : std::numeric_limits<double>::quiet_NaN();
    return rep;
}

double quadrature_floor(const SolutionBundle& b, const Eigen::MatrixXd& pts, double h0, const PicardParams& params) {
    if (pts.cols() == 0) return 0.0;
    const auto& g = grid_of(b.f);
    auto fine = std::make_shared<const RadialGrid>(g.r_max(), 0.5 * params.conv.panel, g.order(), params.conv.graded);
    weighted::ConvolutionParams cp = params.conv;
    cp.panel *= 0.5;
    const auto conv = convolve(resample(b.f, fine), cp);
    const runge::Field coarse = field_of(b.gu3, b.w.axis());
    const runge::Field refined = field_of(conv.field, b.w.axis());
    auto diff = [&](const Eigen::VectorXd& x) { return refined.value(x) - coarse.value(x); };
    const std::vector<double> hs{h0, 0.5 * h0, 0.25 * h0};
    double umax = 0.0;
    const auto lv = fd_levels(diff, pts, hs, false, umax);
    double m = 0.0;
    for (std::size_t c = 0; c < lv[2].size(); ++c) m = std::max(m, std::abs((4.0 * lv[2][c] - lv[1][c]) / 3.0));
    return m;
}

ClosenessReport closeness_report(const runge::FourierBesselSolution& w, const std::vector<double>& eps_grid,
                                 const PicardParams& params) {
    ClosenessReport rep;
    for (double e : eps_grid) {
        const auto b = picard_iterate(w, e, params);
        rep.rows.push_back({e, b.eps, b.closeness, b.iterations});
    }
    std::vector<double> xs, ys;
    for (const auto& r : rep.rows) {
        if (r.closeness > 0.0) {
            xs.push_back(std::log(r.eps));
            ys.push_back(std::log(r.closeness));
        }
    }
    const double x0 = xs.empty() ? 0.0 : *std::min_element(xs.begin(), xs.end());
    const double x1 = xs.empty() ? 0.0 : *std::max_element(xs.begin(), xs.end());
    if (xs.size() >= 2 && x1 > x0) {
        const double n = static_cast<double>(xs.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sx += xs[i];
            sy += ys[i];
            sxx += xs[i] * xs[i];
            sxy += xs[i] * ys[i];
        }
        rep.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    auto sorted = rep.rows;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.eps > b.eps; });
    rep.monotone = sorted.size() >= 2;
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (!(sorted[i].closeness < sorted[i - 1].closeness)) rep.monotone = false;
    }
    return rep;
}

double oddness_defect(const SolutionBundle& a, const SolutionBundle& b) {
    if (const auto* ra = std::get_if<RadialSamples>(&a.u.rep)) {
        const auto* rb = std::get_if<RadialSamples>(&b.u.rep);
        if (rb == nullptr || rb->values.size() != ra->values.size()) {
            throw ValidationError("oddness_defect: bundles use different sample sets");
        }
        double m = 0.0;
        for (std::size_t i = 0; i < ra->values.size(); ++i) m = std::max(m, std::abs(ra->values[i] + rb->values[i]));
        return m;
    }
    const auto& za = std::get<ZonalSamples>(a.u.rep);
    const auto* zb = std::get_if<ZonalSamples>(&b.u.rep);
    if (zb == nullptr || zb->values.rows() != za.values.rows() || zb->values.cols() != za.values.cols()) {
        throw ValidationError("oddness_defect: bundles use different sample sets");
    }
    return (za.values + zb->values).cwiseAbs().maxCoeff();
}

}  // namespace actopo::allencahn
