#include "actopo/weighted.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include <boost/math/tools/minima.hpp>

#include "actopo/error.hpp"
#include "actopo/quadrature.hpp"

namespace actopo::weighted {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> barycentric_weights(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<double> b(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) b[i] /= (x[i] - x[j]);
        }
    }
    const double m = *std::max_element(b.begin(), b.end(), [](double a, double c) {
        return std::abs(a) < std::abs(c);
    });
    for (auto& v : b) v /= std::abs(m);
    return b;
}

// Kappa in the degree-l closed form kappa j_l(r<) y_l(r>).
double kernel_constant(specfun::Dimension d) {
    const double a = d.gegenbauer_lambda();
    const double j0 = std::exp(-a * std::numbers::ln2 - std::lgamma(a + 1.0));
    const specfun::FundamentalSolution g(d);
    return g.sphere_area() * g.beta() / j0;
}

}  // namespace

// ---------------------------------------------------------------- grid

RadialGrid::RadialGrid(double r_max, double panel, int order, int graded) : order_(order) {
    if (!(r_max > 0.0) || !(panel > 0.0)) throw ValidationError("RadialGrid: r_max and panel must be > 0");
    if (order < 2) throw ValidationError("RadialGrid: order must be >= 2");
    if (graded < 0) throw ValidationError("RadialGrid: graded must be >= 0");
    const int n_uniform = std::max(1, static_cast<int>(std::ceil(r_max / panel - 1e-12)));
    breaks_.push_back(0.0);
    for (int g = graded; g >= 1; --g) breaks_.push_back(panel * std::ldexp(1.0, -g));
    for (int p = 1; p <= n_uniform; ++p) breaks_.push_back(panel * p);
    const auto ref = quad::gauss_legendre(order, -1.0, 1.0);
    ref_ = ref.nodes;
    bary_ = barycentric_weights(ref_);
    for (std::size_t p = 0; p + 1 < breaks_.size(); ++p) {
        const double a = breaks_[p], b = breaks_[p + 1];
        for (int k = 0; k < order; ++k) {
            nodes_.push_back(0.5 * (a + b) + 0.5 * (b - a) * ref_[k]);
            weights_.push_back(0.5 * (b - a) * ref.weights[k]);
        }
    }
}

int RadialGrid::panel_of(double r) const {
    const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), r);
    const int p = static_cast<int>(it - breaks_.begin()) - 1;
    return std::clamp(p, 0, panel_count() - 1);
}

void RadialGrid::interpolation_weights(double r, std::span<double> out) const {
    const int p = panel_of(r);
    const double a = breaks_[p], b = breaks_[p + 1];
    const double x = (2.0 * r - a - b) / (b - a);
    double sum = 0.0;
    for (int k = 0; k < order_; ++k) {
        const double diff = x - ref_[k];
        if (diff == 0.0) {
            std::fill(out.begin(), out.begin() + order_, 0.0);
            out[k] = 1.0;
            return;
        }
        out[k] = bary_[k] / diff;
        sum += out[k];
    }
    for (int k = 0; k < order_; ++k) out[k] /= sum;
}

double RadialGrid::interpolate(std::span<const double> data, double r) const {
    std::vector<double> w(order_);
    interpolation_weights(r, w);
    const int base = panel_of(r) * order_;
    double s = 0.0;
    for (int k = 0; k < order_; ++k) s += w[k] * data[base + k];
    return s;
}

double RadialGrid::derivative(std::span<const double> data, double r) const {
    const int p = panel_of(r);
    const double a = breaks_[p], b = breaks_[p + 1];
    const double x = (2.0 * r - a - b) / (b - a);
    const double* f = data.data() + p * order_;
    double num = 0, den = 0, dnum = 0, dden = 0;
    for (int k = 0; k < order_; ++k) {
        const double diff = x - ref_[k];
        if (diff == 0.0) {
            double acc = 0.0;
            for (int j = 0; j < order_; ++j) {
                if (j != k) acc += (bary_[j] / bary_[k]) * (f[j] - f[k]) / (ref_[k] - ref_[j]);
            }
            return acc * 2.0 / (b - a);
        }
        const double c = bary_[k] / diff;
        num += c * f[k];
        den += c;
        dnum -= c * f[k] / diff;
        dden -= c / diff;
    }
    return (dnum * den - num * dden) / (den * den) * 2.0 / (b - a);
}

double RadialSamples::deriv(double r) const {
    if (!derivs.empty()) return grid->interpolate(derivs, r);
    return grid->derivative(values, r);
}

ZonalSamples make_zonal_samples(specfun::Dimension d, std::shared_ptr<const RadialGrid> grid, int n_t) {
    if (n_t < 1) throw ValidationError("make_zonal_samples: n_t must be >= 1");
    ZonalSamples z;
    const auto rule = quad::gauss_gegenbauer(n_t, d.gegenbauer_lambda());
    z.t = rule.nodes;
    z.t_weights = rule.weights;
    z.values = Eigen::MatrixXd::Zero(grid->size(), n_t);
    z.grid = std::move(grid);
    return z;
}

Eigen::MatrixXd zonal_project(const ZonalSamples& z, specfun::Dimension d, int lmax,
                              const Eigen::MatrixXd& values) {
    const double lam = d.gegenbauer_lambda();
    const int n_t = static_cast<int>(z.t.size());
    // basis(j, l) = w_j C_l(t_j) / h_l
    Eigen::MatrixXd basis(n_t, lmax + 1);
    std::vector<double> c(lmax + 1), dc(lmax + 1);
    for (int j = 0; j < n_t; ++j) {
        specfun::gegenbauer_sequence(lam, z.t[j], c, dc);
        for (int l = 0; l <= lmax; ++l) basis(j, l) = z.t_weights[j] * c[l] / specfun::gegenbauer_norm(l, lam);
    }
    return values * basis;
}

// ---------------------------------------------------------------- norms

namespace {

struct RadialMax {
    std::vector<double> r;
    std::vector<double> m;  // weighted value at r
};

void fill_report(const RadialMax& s, double truncation, NormReport& rep) {
    const double split = 0.9 * truncation;
    for (std::size_t i = 0; i < s.r.size(); ++i) {
        if (s.r[i] > truncation) continue;
        if (s.m[i] > rep.value) {
            rep.value = s.m[i];
            rep.argmax_r = s.r[i];
        }
        if (s.r[i] >= split) {
            rep.boundary_max = std::max(rep.boundary_max, s.m[i]);
        } else {
            rep.interior_max = std::max(rep.interior_max, s.m[i]);
        }
    }
    rep.growing = rep.boundary_max > 0.0 && rep.boundary_max >= rep.interior_max;
}

}  // namespace

NormReport weighted_norm_report(const WeightedField& v, int k, double nu, double truncation_radius) {
    if (k < 0 || k > 1) throw ValidationError("weighted_norm: only k = 0 and k = 1 are supported");
    if (!(truncation_radius > 0.0)) throw ValidationError("weighted_norm: truncation radius must be > 0");
    NormReport rep;
    RadialMax samples;

    if (const auto* rs = std::get_if<RadialSamples>(&v.rep)) {
        const auto& nodes = rs->grid->nodes();
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            double m = std::abs(rs->values[i]);
            if (k == 1) {
                const double dv = rs->derivs.empty() ? rs->deriv(nodes[i]) : rs->derivs[i];
                m = std::max(m, std::abs(dv));
            }
            samples.r.push_back(nodes[i]);
            samples.m.push_back(std::pow(bracket(nodes[i]), nu) * m);
        }
    } else if (const auto* z = std::get_if<ZonalSamples>(&v.rep)) {
        const auto& nodes = z->grid->nodes();
        if (k == 1 && (z->d_r.size() == 0 || z->d_t.size() == 0)) {
            throw ValidationError("weighted_norm: k = 1 on zonal samples needs d_r and d_t");
        }
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            double m = 0.0;
            for (std::size_t j = 0; j < z->t.size(); ++j) {
                m = std::max(m, std::abs(z->values(i, j)));
                if (k == 1) {
                    const double tang = std::sqrt(std::max(0.0, 1.0 - z->t[j] * z->t[j])) / nodes[i];
                    m = std::max(m, std::hypot(z->d_r(i, j), tang * z->d_t(i, j)));
                }
            }
            samples.r.push_back(nodes[i]);
            samples.m.push_back(std::pow(bracket(nodes[i]), nu) * m);
        }
    } else {
        const auto& prof = std::get<RadialProfile>(v.rep);
        auto weighted = [&](double r) {
            double m = std::abs(prof.value(r));
            if (k == 1) {
                const double h = 1e-5 * std::max(1.0, r);
                const double dv = prof.derivative ? prof.derivative(r)
                                                  : (prof.value(r + h) - prof.value(std::max(0.0, r - h))) /
                                                        (r + h - std::max(0.0, r - h));
                m = std::max(m, std::abs(dv));
            }
            return std::pow(bracket(r), nu) * m;
        };
        const int n = 20000;
        const double step = truncation_radius / n;
        for (int i = 0; i <= n; ++i) {
            samples.r.push_back(i * step);
            samples.m.push_back(weighted(i * step));
        }
        fill_report(samples, truncation_radius, rep);
        // Polish the maximum between neighbouring samples.
        const double lo = std::max(0.0, rep.argmax_r - step);
        const double hi = std::min(truncation_radius, rep.argmax_r + step);
        const auto res = boost::math::tools::brent_find_minima([&](double r) { return -weighted(r); }, lo, hi,
                                                               std::numeric_limits<double>::digits / 2);
        if (-res.second > rep.value) {
            rep.value = -res.second;
            rep.argmax_r = res.first;
        }
        if (rep.boundary_max > 1.05 * rep.interior_max) {
            throw StageFailure("weighted_norm: weighted supremum still growing at the truncation radius",
                               rep.value);
        }
        return rep;
    }

    fill_report(samples, truncation_radius, rep);
    if (rep.boundary_max > 1.05 * rep.interior_max) {
        throw StageFailure("weighted_norm: weighted supremum still growing at the truncation radius", rep.value);
    }
    return rep;
}

double weighted_norm(const WeightedField& v, int k, double nu, double truncation_radius) {
    return weighted_norm_report(v, k, nu, truncation_radius).value;
}

// ---------------------------------------------------------------- kernels

namespace {

template <class Weight>
double spherical_mean_quadrature(specfun::Dimension d, double r, double s, int q, Weight weight) {
    if (!(r > 0.0) || !(s > 0.0)) throw ValidationError("radial_kernel: r and s must be > 0");
    if (q < 2) throw ValidationError("radial_kernel: quad_order must be >= 2");
    const specfun::FundamentalSolution g(d);
    const int dim = d.value();
    const double area_sub = specfun::sphere_area(dim - 1);
    const auto ref = quad::gauss_legendre(q, 0.0, 1.0);
    auto panel_sum = [&](double a, double b, auto&& f) {
        double acc = 0.0;
        for (int k = 0; k < q; ++k) acc += ref.weights[k] * f(a + (b - a) * ref.nodes[k]);
        return acc * (b - a);
    };

    if (dim == 3) {
        // u = |x - y|: sin(theta) d theta = u du / (r s), smooth integrand G(u) u.
        const double lo = std::abs(r - s), hi = r + s;
        const int n = std::max(1, static_cast<int>(std::ceil((hi - lo) / 1.0)));
        double acc = 0.0;
        auto f = [&](double u) {
            const double c = std::clamp((r * r + s * s - u * u) / (2.0 * r * s), -1.0, 1.0);
            return u > 0.0 ? g(u) * u * weight(c) : 0.0;
        };
        for (int p = 0; p < n; ++p) acc += panel_sum(lo + (hi - lo) * p / n, lo + (hi - lo) * (p + 1) / n, f);
        return area_sub * acc / (r * s);
    }

    // Geometric panels toward theta = 0, where |x - y| is smallest.
    auto f = [&](double th) {
        const double u = std::sqrt(std::max(0.0, (r - s) * (r - s) + 4.0 * r * s * std::sin(0.5 * th) * std::sin(0.5 * th)));
        if (!(u > 0.0)) return 0.0;
        return g(u) * std::pow(std::sin(th), dim - 2) * weight(std::cos(th));
    };
    const int n_uniform = std::max(4, static_cast<int>(std::ceil(2.0 * (r + s))));
    const double th_g = kPi / n_uniform;
    double acc = 0.0;
    for (int p = 1; p < n_uniform; ++p) acc += panel_sum(th_g * p, th_g * (p + 1), f);
    const double scale = std::max(std::abs(r - s) / std::sqrt(r * s), 1e-10);
    double hi = th_g;
    while (hi > 0.25 * scale && hi > 1e-12) {
        acc += panel_sum(0.5 * hi, hi, f);
        hi *= 0.5;
    }
    acc += panel_sum(0.0, hi, f);
    return area_sub * acc;
}

}  // namespace

double radial_kernel(specfun::Dimension d, double r, double s, int quad_order) {
    return spherical_mean_quadrature(d, r, s, quad_order, [](double) { return 1.0; });
}

double zonal_kernel(specfun::Dimension d, int l, double r, double s, int quad_order) {
    if (l < 0) throw ValidationError("zonal_kernel: l must be >= 0");
    const double lam = d.gegenbauer_lambda();
    const double c1 = specfun::gegenbauer_at_one(l, lam);
    return spherical_mean_quadrature(d, r, s, quad_order,
                                     [&](double c) { return specfun::gegenbauer(l, lam, c) / c1; });
}

double closed_form_kernel(specfun::Dimension d, int l, double r, double s) {
    if (!(r > 0.0) || !(s > 0.0)) throw ValidationError("closed_form_kernel: r and s must be > 0");
    const double lo = std::min(r, s), hi = std::max(r, s);
    std::vector<double> j(l + 1), dj(l + 1), jr(l + 1), y(l + 1), dy(l + 1);
    specfun::hyperspherical_sequence(d, l, lo, j, dj, jr);
    specfun::hyperspherical_y_sequence(d, l, hi, y, dy);
    return kernel_constant(d) * j[l] * y[l];
}

double RadialKernelTable::interpolate(double r, double s) const {
    const int n = static_cast<int>(nodes.size());
    auto locate = [&](double x, int& i, double& f) {
        const double lx = std::log(std::clamp(x, nodes.front(), nodes.back()));
        const double l0 = std::log(nodes.front()), l1 = std::log(nodes.back());
        const double pos = (lx - l0) / (l1 - l0) * (n - 1);
        i = std::clamp(static_cast<int>(pos), 0, n - 2);
        f = pos - i;
    };
    int i = 0, j = 0;
    double fr = 0, fs = 0;
    locate(r, i, fr);
    locate(s, j, fs);
    return (1 - fr) * (1 - fs) * values(i, j) + fr * (1 - fs) * values(i + 1, j) +
           (1 - fr) * fs * values(i, j + 1) + fr * fs * values(i + 1, j + 1);
}

RadialKernelTable build_kernel_table(specfun::Dimension d, double r_min, double r_max, int n,
                                     int quad_order) {
    if (!(r_min > 0.0) || !(r_max > r_min) || n < 2) {
        throw ValidationError("build_kernel_table: need 0 < r_min < r_max and n >= 2");
    }
    RadialKernelTable t;
    t.d = d;
    for (int i = 0; i < n; ++i) t.nodes.push_back(r_min * std::pow(r_max / r_min, static_cast<double>(i) / (n - 1)));
    t.values.resize(n, n);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const double k = radial_kernel(d, t.nodes[i], t.nodes[j], quad_order);
            t.values(i, j) = k;
            t.values(j, i) = k;
        }
    }
    return t;
}

// ---------------------------------------------------------------- convolution

namespace {

// Per-degree convolution on the grid nodes. coeffs: n_r x (L+1) values of
// v_l at the nodes. Returns values and r-derivatives of (G * v)_l.
void convolve_degrees(specfun::Dimension d, const RadialGrid& grid, const Eigen::MatrixXd& coeffs,
                      Eigen::MatrixXd& out, Eigen::MatrixXd& dout) {
    const int n_r = grid.size();
    const int q = grid.order();
    const int lmax = static_cast<int>(coeffs.cols()) - 1;
    const int n_l = lmax + 1;
    const int dim = d.value();
    const double kappa = kernel_constant(d);
    const auto& nodes = grid.nodes();
    const auto& w = grid.weights();
    const int n_p = grid.panel_count();

    // j_l, y_l at every node.
    Eigen::MatrixXd jn(n_r, n_l), yn(n_r, n_l);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n_r; ++i) {
        std::vector<double> j(n_l), dj(n_l), jr(n_l), y(n_l), dy(n_l);
        specfun::hyperspherical_sequence(d, lmax, nodes[i], j, dj, jr);
        specfun::hyperspherical_y_sequence(d, lmax, nodes[i], y, dy);
        for (int l = 0; l < n_l; ++l) {
            jn(i, l) = j[l];
            yn(i, l) = y[l];
        }
    }
    // Panel sums of j v s^{d-1} and y v s^{d-1}; cumulative from the left and right.
    Eigen::MatrixXd pa = Eigen::MatrixXd::Zero(n_p, n_l), pb = Eigen::MatrixXd::Zero(n_p, n_l);
    for (int p = 0; p < n_p; ++p) {
        for (int k = p * q; k < (p + 1) * q; ++k) {
            const double m = w[k] * std::pow(nodes[k], dim - 1);
            for (int l = 0; l < n_l; ++l) {
                pa(p, l) += m * jn(k, l) * coeffs(k, l);
                if (std::isfinite(yn(k, l))) pb(p, l) += m * yn(k, l) * coeffs(k, l);
            }
        }
    }
    Eigen::MatrixXd ca = Eigen::MatrixXd::Zero(n_p, n_l), cb = Eigen::MatrixXd::Zero(n_p, n_l);
    for (int p = 1; p < n_p; ++p) ca.row(p) = ca.row(p - 1) + pa.row(p - 1);
    for (int p = n_p - 2; p >= 0; --p) cb.row(p) = cb.row(p + 1) + pb.row(p + 1);

    // In-panel parts with the kink at s = r resolved by splitting there.
    const auto sub = quad::gauss_legendre(q, 0.0, 1.0);
    out.setZero(n_r, n_l);
    dout.setZero(n_r, n_l);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n_r; ++i) {
        const int p = i / q;
        const double a = grid.breaks()[p], b = grid.breaks()[p + 1];
        const double r = nodes[i];
        std::vector<double> jr_(n_l), djr(n_l), tmp(n_l), yr(n_l), dyr(n_l);
        specfun::hyperspherical_sequence(d, lmax, r, jr_, djr, tmp);
        specfun::hyperspherical_y_sequence(d, lmax, r, yr, dyr);
        std::vector<double> left(n_l, 0.0), right(n_l, 0.0);  // int j v s^{d-1} on [a,r], int y v s^{d-1} on [r,b]
        std::vector<double> js(n_l), djs(n_l), ys(n_l), dys(n_l), iw(q);
        for (int side = 0; side < 2; ++side) {
            const double lo = side == 0 ? a : r, hi = side == 0 ? r : b;
            if (!(hi > lo)) continue;
            for (int m = 0; m < q; ++m) {
                const double s = lo + (hi - lo) * sub.nodes[m];
                const double wm = (hi - lo) * sub.weights[m] * std::pow(s, dim - 1);
                grid.interpolation_weights(s, iw);
                if (side == 0) {
                    specfun::hyperspherical_sequence(d, lmax, s, js, djs, tmp);
                } else {
                    specfun::hyperspherical_y_sequence(d, lmax, s, ys, dys);
                }
                for (int l = 0; l < n_l; ++l) {
                    double vl = 0.0;
                    for (int k = 0; k < q; ++k) vl += iw[k] * coeffs(p * q + k, l);
                    if (side == 0) {
                        left[l] += wm * js[l] * vl;
                    } else if (std::isfinite(ys[l])) {
                        right[l] += wm * ys[l] * vl;
                    }
                }
            }
        }
        for (int l = 0; l < n_l; ++l) {
            if (!std::isfinite(yr[l]) || !std::isfinite(dyr[l])) continue;  // j_l(r) negligible here
            const double lower = ca(p, l) + left[l];
            const double upper = cb(p, l) + right[l];
            out(i, l) = kappa * (yr[l] * lower + jr_[l] * upper);
            dout(i, l) = kappa * (dyr[l] * lower + djr[l] * upper);
        }
    }
}

double tail_bound_for(specfun::Dimension d, const RadialGrid& grid, double last_panel_sup, double nu) {
    const int dim = d.value();
    const double excess = nu - 0.5 * (dim + 1);
    const double rmax = grid.r_max();
    const specfun::FundamentalSolution g(d);
    // |G(s)| s^{(d-1)/2} <= beta sqrt(2/pi) (1 + small) for large s; |Lambda| <= 1.
    const double cg = 1.05 * g.beta() * std::sqrt(2.0 / kPi);
    const double amp = last_panel_sup * std::pow(rmax, nu);
    return g.sphere_area() * cg * amp * std::pow(rmax, -excess) / excess;
}

std::shared_ptr<const RadialGrid> grid_for(const ConvolutionParams& p) {
    return std::make_shared<const RadialGrid>(p.r_max, p.panel, p.order, p.graded);
}

void check_nu(const WeightedField& v) {
    const double need = 0.5 * (v.d.value() + 1);
    if (!(v.nu > need)) {
        throw ValidationError("convolve: decay exponent nu = " + std::to_string(v.nu) +
                              " must exceed (d+1)/2 = " + std::to_string(need) + " (divergent tail)");
    }
}

}  // namespace

ConvolutionResult convolve_radial(const WeightedField& v, const ConvolutionParams& params) {
    check_nu(v);
    RadialSamples in;
    if (const auto* rs = std::get_if<RadialSamples>(&v.rep)) {
        in = *rs;
    } else if (const auto* prof = std::get_if<RadialProfile>(&v.rep)) {
        in.grid = grid_for(params);
        for (double r : in.grid->nodes()) in.values.push_back(prof->value(r));
    } else {
        throw ValidationError("convolve_radial: zonal input; use convolve_zonal");
    }
    const int n_r = in.grid->size();
    Eigen::MatrixXd coeffs = Eigen::Map<const Eigen::VectorXd>(in.values.data(), n_r);
    Eigen::MatrixXd out, dout;
    convolve_degrees(v.d, *in.grid, coeffs, out, dout);

    ConvolutionResult res;
    RadialSamples os;
    os.grid = in.grid;
    os.values.assign(out.data(), out.data() + n_r);
    os.derivs.assign(dout.data(), dout.data() + n_r);
    res.field = WeightedField{v.d, std::move(os), v.k, 0.5 * (v.d.value() - 1)};
    double last = 0.0;
    for (int k = n_r - in.grid->order(); k < n_r; ++k) last = std::max(last, std::abs(in.values[k]));
    res.tail_bound = tail_bound_for(v.d, *in.grid, last, v.nu);
    return res;
}

ConvolutionResult convolve_zonal(const WeightedField& v, const ConvolutionParams& params) {
    check_nu(v);
    const auto* z = std::get_if<ZonalSamples>(&v.rep);
    if (z == nullptr) throw ValidationError("convolve_zonal: input must be zonal samples");
    const int n_t = static_cast<int>(z->t.size());
    const int lmax = params.lmax ? *params.lmax : n_t - 1;
    if (lmax < 0 || lmax > 2 * n_t - 1) throw ValidationError("convolve_zonal: lmax out of range");
    const Eigen::MatrixXd coeffs = zonal_project(*z, v.d, lmax, z->values);
    Eigen::MatrixXd out, dout;
    convolve_degrees(v.d, *z->grid, coeffs, out, dout);

    // Resynthesis on the t-nodes.
    const double lam = v.d.gegenbauer_lambda();
    Eigen::MatrixXd c(lmax + 1, n_t), dc(lmax + 1, n_t);
    std::vector<double> cv(lmax + 1), dcv(lmax + 1);
    for (int j = 0; j < n_t; ++j) {
        specfun::gegenbauer_sequence(lam, z->t[j], cv, dcv);
        for (int l = 0; l <= lmax; ++l) {
            c(l, j) = cv[l];
            dc(l, j) = dcv[l];
        }
    }
    ZonalSamples oz = *z;
    oz.values = out * c;
    oz.d_r = dout * c;
    oz.d_t = out * dc;
    ConvolutionResult res;
    res.field = WeightedField{v.d, std::move(oz), v.k, 0.5 * (v.d.value() - 1)};
    const double last = z->values.bottomRows(z->grid->order()).cwiseAbs().maxCoeff();
    res.tail_bound = tail_bound_for(v.d, *z->grid, last, v.nu);
    return res;
}

WeightedField cube(const WeightedField& v) {
    WeightedField out = v;
    out.nu = 3.0 * v.nu;
    if (auto* rs = std::get_if<RadialSamples>(&out.rep)) {
        for (std::size_t i = 0; i < rs->values.size(); ++i) {
            const double x = rs->values[i];
            if (!rs->derivs.empty()) rs->derivs[i] *= 3.0 * x * x;
            rs->values[i] = x * x * x;
        }
    } else if (auto* z = std::get_if<ZonalSamples>(&out.rep)) {
        const Eigen::MatrixXd sq = 3.0 * z->values.array().square();
        if (z->d_r.size() != 0) z->d_r = z->d_r.cwiseProduct(sq);
        if (z->d_t.size() != 0) z->d_t = z->d_t.cwiseProduct(sq);
        z->values = z->values.array().cube();
    } else {
        const auto prof = std::get<RadialProfile>(v.rep);
        RadialProfile p;
        p.value = [prof](double r) {
            const double x = prof.value(r);
            return x * x * x;
        };
        if (prof.derivative) {
            p.derivative = [prof](double r) {
                const double x = prof.value(r);
                return 3.0 * x * x * prof.derivative(r);
            };
        }
        out.rep = p;
    }
    return out;
}

WeightedField scaled(const WeightedField& v, double factor) {
    WeightedField out = v;
    if (auto* rs = std::get_if<RadialSamples>(&out.rep)) {
        for (auto& x : rs->values) x *= factor;
        for (auto& x : rs->derivs) x *= factor;
    } else if (auto* z = std::get_if<ZonalSamples>(&out.rep)) {
        z->values *= factor;
        z->d_r *= factor;
        z->d_t *= factor;
    } else {
        const auto prof = std::get<RadialProfile>(v.rep);
        RadialProfile p;
        p.value = [prof, factor](double r) { return factor * prof.value(r); };
        if (prof.derivative) p.derivative = [prof, factor](double r) { return factor * prof.derivative(r); };
        out.rep = p;
    }
    return out;
}

CubicBoundReport verify_cubic_bound(const std::vector<WeightedField>& samples, const ConvolutionParams& params) {
    CubicBoundReport rep;
    for (const auto& v : samples) {
        if (v.d.value() < 4) {
            throw ValidationError(
                "verify_cubic_bound: d = 3 is the boundary case nu = 3(d-1)/2 = d; the cubic "
                "bound needs d >= 4");
        }
        const double nu = 0.5 * (v.d.value() - 1);
        double trunc = params.r_max;
        if (const auto* rs = std::get_if<RadialSamples>(&v.rep)) trunc = rs->grid->r_max();
        if (const auto* z = std::get_if<ZonalSamples>(&v.rep)) trunc = z->grid->r_max();
        WeightedField vin = v;
        vin.nu = nu;
        const double nv = weighted_norm(vin, 0, nu, trunc);
        if (nv == 0.0) {
            rep.ratios.push_back(0.0);
            continue;
        }
        WeightedField c = cube(vin);
        const auto conv = std::holds_alternative<ZonalSamples>(v.rep) ? convolve_zonal(c, params)
                                                                      : convolve_radial(c, params);
        const double nc = weighted_norm(conv.field, 0, nu, trunc);
        rep.ratios.push_back(nc / (nv * nv * nv));
    }
    for (double x : rep.ratios) rep.max_ratio = std::max(rep.max_ratio, x);
    return rep;
}

}  // namespace actopo::weighted
