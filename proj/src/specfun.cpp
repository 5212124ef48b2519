#include "actopo/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>

#include "actopo/error.hpp"

namespace actopo::specfun {

namespace {

using namespace boost::math::policies;
// Double-precision internals; the default long-double promotion is ~7x slower.
using BesselPolicy = policy<promote_double<false>>;

constexpr double kPi = std::numbers::pi;

void require_positive_argument(double x, const char* who) {
    if (!(x > 0.0)) {
        throw ValidationError(std::string(who) + ": argument must be > 0, got " +
                              std::to_string(x));
    }
}

void require_order(double order, const char* who) {
    if (!(order >= 0.0)) {
        throw ValidationError(std::string(who) + ": order must be >= 0");
    }
}

bool is_integer(double v) { return std::floor(v) == v; }

// r^{-a} for a a non-negative integer or half-integer.
double inverse_power(double r, double a) {
    double result = 1.0;
    double whole = std::floor(a);
    for (int i = 0; i < static_cast<int>(whole); ++i) result /= r;
    if (a - whole > 0.25) result /= std::sqrt(r);
    return result;
}

// Y_{n+1/2}(x) by upward recurrence from Y_{-1/2} and Y_{1/2}, which is stable.
double half_integer_y(int n, double x) {
    const double amp = std::sqrt(2.0 / (kPi * x));
    double y_prev = amp * std::sin(x);   // Y_{-1/2}
    double y_cur = -amp * std::cos(x);   // Y_{1/2}
    for (int k = 0; k < n; ++k) {
        const double nu = k + 0.5;
        const double y_next = (2.0 * nu / x) * y_cur - y_prev;
        y_prev = y_cur;
        y_cur = y_next;
    }
    return y_cur;
}

double integer_or_general_j(double order, double x) {
    if (is_integer(order)) {
        return boost::math::cyl_bessel_j(static_cast<int>(order), x, BesselPolicy());
    }
    return boost::math::cyl_bessel_j(order, x, BesselPolicy());
}

double integer_or_general_y(double order, double x) {
    if (is_integer(order)) {
        return boost::math::cyl_neumann(static_cast<int>(order), x, BesselPolicy());
    }
    return boost::math::cyl_neumann(order, x, BesselPolicy());
}

// Power series of r^{-nu} J_nu(r) * r^l ... used as j_l near the origin:
// j_l(r) = r^l 2^{-nu} sum_k (-r^2/4)^k / (k! Gamma(k+nu+1)), nu = l + a.
// Returns the series S(r^2) so that j_l = r^l * S and also dS/dr.
void hyperspherical_series(double nu, double r, double& s, double& ds_dr) {
    const double q = 0.25 * r * r;
    double term = std::exp(-nu * std::numbers::ln2 - std::lgamma(nu + 1.0));
    s = term;
    ds_dr = 0.0;
    for (int k = 1; k < 200; ++k) {
        term *= -q / (k * (k + nu));
        s += term;
        // d/dr of q^k = k q^{k-1} * r/2 = 2k q^k / r
        ds_dr += term * 2.0 * k / r;
        if (std::abs(term) < 1e-18 * std::abs(s)) break;
    }
}

constexpr double kSeriesRadius = 1.0;

}  // namespace

Dimension::Dimension(int d) : d_(d) {
    if (d < 3) {
        throw ValidationError("dimension must be >= 3, got " + std::to_string(d));
    }
}

double gamma_fn(double x) {
    if (!(x > 0.0)) {
        throw ValidationError("gamma_fn: argument must be > 0");
    }
    return std::tgamma(x);
}

double sphere_area(int d) {
    if (d < 2) {
        throw ValidationError("sphere_area: dimension must be >= 2");
    }
    return 2.0 * std::pow(kPi, 0.5 * d) / gamma_fn(0.5 * d);
}

bool is_half_integer(double order) {
    const double twice = 2.0 * order;
    return is_integer(twice) && !is_integer(order);
}

void half_integer_j_sequence(double x, std::span<double> out) {
    require_positive_argument(x, "half_integer_j_sequence");
    const int n = static_cast<int>(out.size());
    if (n == 0) return;
    const double amp = std::sqrt(2.0 / (kPi * x));
    const double j_minus = amp * std::cos(x);  // J_{-1/2}
    const double j_half = amp * std::sin(x);   // J_{1/2}

    if (x >= n) {
        // Every requested order is below x: upward recurrence is stable.
        double prev = j_minus;
        double cur = j_half;
        out[0] = cur;
        for (int k = 1; k < n; ++k) {
            const double nu = k - 0.5;
            const double next = (2.0 * nu / x) * cur - prev;
            prev = cur;
            cur = next;
            out[k] = cur;
        }
        return;
    }

    // Miller's backward recurrence from well above max(n, x).
    const int start = n + 20 + static_cast<int>(std::sqrt(40.0 * (n + x))) + static_cast<int>(x);
    double above = 0.0;
    double cur = 1e-30;
    for (int k = start; k >= 1; --k) {
        // cur holds F_{k+1/2}; step down to F_{k-1/2}.
        const double nu = k + 0.5;
        const double below = (2.0 * nu / x) * cur - above;
        above = cur;
        cur = below;
        if (k - 1 < n) out[k - 1] = cur;
        if (std::abs(cur) > 1e250) {
            cur *= 1e-250;
            above *= 1e-250;
            for (int i = k - 1; i < n; ++i) out[i] *= 1e-250;
        }
    }
    // cur = F_{1/2}, above = F_{3/2}; one more step gives F_{-1/2}.
    const double f_half = cur;
    const double f_minus = (1.0 / x) * f_half - above;
    const double scale = std::abs(j_half) > std::abs(j_minus) ? j_half / f_half
                                                                : j_minus / f_minus;
    for (int i = 0; i < n; ++i) out[i] *= scale;
}

double bessel_j(double order, double x) {
    require_order(order, "bessel_j");
    require_positive_argument(x, "bessel_j");
    if (is_half_integer(order)) {
        const int n = static_cast<int>(std::lround(order - 0.5));
        std::vector<double> seq(static_cast<std::size_t>(n) + 1);
        half_integer_j_sequence(x, seq);
        return seq.back();
    }
    return integer_or_general_j(order, x);
}

double bessel_y(double order, double x) {
    require_order(order, "bessel_y");
    require_positive_argument(x, "bessel_y");
    if (is_half_integer(order)) {
        return half_integer_y(static_cast<int>(std::lround(order - 0.5)), x);
    }
    return integer_or_general_y(order, x);
}

double bessel_j_prime(double order, double x) {
    return (order / x) * bessel_j(order, x) - bessel_j(order + 1.0, x);
}

double bessel_y_prime(double order, double x) {
    return (order / x) * bessel_y(order, x) - bessel_y(order + 1.0, x);
}

FundamentalSolution::FundamentalSolution(Dimension d)
    : d_(d), sphere_area_(specfun::sphere_area(d.value())), order_(0.5 * d.value() - 1.0) {
    // Normalised so Delta G + G = delta: the flux of grad G through small
    // spheres tends to 1, i.e. G ~ -1 / ((d-2) |S^{d-1}| r^{d-2}).
    beta_ = std::pow(2.0, -0.5 * d.value()) * kPi / (sphere_area_ * gamma_fn(order_ + 1.0));
}

double FundamentalSolution::operator()(double r) const {
    if (!(r > 0.0)) {
        throw ValidationError("fundamental solution is singular at r = 0");
    }
    if (d_.value() == 3) {
        // Y_{1/2} closed form; identical to the general path below.
        return beta_ / std::sqrt(r) * (-std::sqrt(2.0 / (kPi * r)) * std::cos(r));
    }
    return beta_ * inverse_power(r, order_) * bessel_y(order_, r);
}

double FundamentalSolution::derivative(double r) const {
    double v = 0.0, dv = 0.0;
    value_and_derivative(r, v, dv);
    return dv;
}

void FundamentalSolution::value_and_derivative(double r, double& value, double& deriv) const {
    if (!(r > 0.0)) {
        throw ValidationError("fundamental solution is singular at r = 0");
    }
    // dG/dr = -beta r^{1-d/2} Y_{d/2}(r)
    const double pre = beta_ * inverse_power(r, order_);
    if (d_.value() == 3) {
        const double amp = std::sqrt(2.0 / (kPi * r));
        const double c = std::cos(r);
        const double s = std::sin(r);
        const double y_half = -amp * c;
        const double y_three_half = y_half / r - amp * s;
        value = pre * y_half;
        deriv = -pre * y_three_half;
        return;
    }
    value = pre * bessel_y(order_, r);
    deriv = -pre * bessel_y(order_ + 1.0, r);
}

double hyperspherical_jl(Dimension d, int l, double r) {
    if (l < 0) throw ValidationError("hyperspherical_jl: l must be >= 0");
    if (r < 0.0) throw ValidationError("hyperspherical_jl: r must be >= 0");
    const double a = d.gegenbauer_lambda();
    const double nu = l + a;
    if (r < kSeriesRadius) {
        double s = 0.0, ds = 0.0;
        if (r == 0.0) {
            return l == 0 ? std::exp(-nu * std::numbers::ln2 - std::lgamma(nu + 1.0)) : 0.0;
        }
        hyperspherical_series(nu, r, s, ds);
        return std::pow(r, l) * s;
    }
    return inverse_power(r, a) * bessel_j(nu, r);
}

void hyperspherical_sequence(Dimension d, int lmax, double r, std::span<double> value,
                             std::span<double> deriv, std::span<double> over_r) {
    if (lmax < 0) throw ValidationError("hyperspherical_sequence: lmax must be >= 0");
    if (r < 0.0) throw ValidationError("hyperspherical_sequence: r must be >= 0");
    const double a = d.gegenbauer_lambda();
    const auto count = static_cast<std::size_t>(lmax) + 1;
    if (value.size() < count || deriv.size() < count || over_r.size() < count) {
        throw ValidationError("hyperspherical_sequence: output spans too short");
    }

    if (r < kSeriesRadius) {
        for (int l = 0; l <= lmax; ++l) {
            const double nu = l + a;
            if (r == 0.0) {
                const double c0 = std::exp(-nu * std::numbers::ln2 - std::lgamma(nu + 1.0));
                value[l] = l == 0 ? c0 : 0.0;
                deriv[l] = l == 1 ? c0 : 0.0;
                over_r[l] = l == 1 ? c0 : 0.0;
                continue;
            }
            double s = 0.0, ds = 0.0;
            hyperspherical_series(nu, r, s, ds);
            const double rl1 = l >= 1 ? std::pow(r, l - 1) : 0.0;
            const double rl = std::pow(r, l);
            value[l] = rl * s;
            deriv[l] = l * rl1 * s + rl * ds;
            over_r[l] = l >= 1 ? rl1 * s : 0.0;
        }
        return;
    }

    // J_{a+l} for l = 0..lmax+1.
    std::vector<double> j(count + 1);
    if (is_half_integer(a)) {
        const int offset = static_cast<int>(std::lround(a - 0.5));
        std::vector<double> seq(count + 1 + offset);
        half_integer_j_sequence(r, seq);
        std::copy(seq.begin() + offset, seq.end(), j.begin());
    } else {
        const int top = lmax + 1;
        j[top] = integer_or_general_j(a + top, r);
        j[top - 1] = integer_or_general_j(a + top - 1, r);
        const bool underflow = std::abs(j[top]) < 1e-280 || std::abs(j[top - 1]) < 1e-280;
        if (underflow) {
            for (int l = 0; l < top - 1; ++l) j[l] = integer_or_general_j(a + l, r);
        } else {
            // Downward recurrence is stable for the minimal solution J.
            for (int l = top - 1; l >= 1; --l) {
                const double nu = a + l;
                j[l - 1] = (2.0 * nu / r) * j[l] - j[l + 1];
            }
        }
    }
    const double scale = inverse_power(r, a);
    for (std::size_t l = 0; l <= count; ++l) j[l] *= scale;
    for (int l = 0; l <= lmax; ++l) {
        value[l] = j[l];
        deriv[l] = (l / r) * j[l] - j[l + 1];
        over_r[l] = l >= 1 ? j[l] / r : 0.0;
    }
}

void hyperspherical_y_sequence(Dimension d, int lmax, double r, std::span<double> value,
                               std::span<double> deriv) {
    if (lmax < 0) throw ValidationError("hyperspherical_y_sequence: lmax must be >= 0");
    if (!(r > 0.0)) throw ValidationError("hyperspherical_y_sequence: r must be > 0");
    const auto count = static_cast<std::size_t>(lmax) + 1;
    if (value.size() < count || deriv.size() < count) {
        throw ValidationError("hyperspherical_y_sequence: output spans too short");
    }
    const double a = d.gegenbauer_lambda();
    std::vector<double> y(count + 1);
    y[0] = bessel_y(a, r);
    y[1] = bessel_y(a + 1.0, r);
    // Upward recurrence is stable for the dominant solution Y.
    for (std::size_t l = 1; l < count; ++l) y[l + 1] = (2.0 * (a + l) / r) * y[l] - y[l - 1];
    const double scale = inverse_power(r, a);
    for (std::size_t l = 0; l <= count; ++l) y[l] *= scale;
    for (std::size_t l = 0; l < count; ++l) {
        value[l] = y[l];
        deriv[l] = (static_cast<double>(l) / r) * y[l] - y[l + 1];
    }
}

double gegenbauer(int l, double lam, double t) {
    if (l < 0) throw ValidationError("gegenbauer: l must be >= 0");
    if (l == 0) return 1.0;
    double prev = 1.0;
    double cur = 2.0 * lam * t;
    for (int n = 2; n <= l; ++n) {
        const double next = (2.0 * t * (n + lam - 1.0) * cur - (n + 2.0 * lam - 2.0) * prev) / n;
        prev = cur;
        cur = next;
    }
    return cur;
}

void gegenbauer_sequence(double lam, double t, std::span<double> value, std::span<double> deriv) {
    const std::size_t n = value.size();
    if (n == 0) return;
    auto fill = [t](double mu, std::span<double> out, std::size_t count) {
        if (count == 0) return;
        out[0] = 1.0;
        if (count > 1) out[1] = 2.0 * mu * t;
        for (std::size_t k = 2; k < count; ++k) {
            const double kk = static_cast<double>(k);
            out[k] = (2.0 * t * (kk + mu - 1.0) * out[k - 1] - (kk + 2.0 * mu - 2.0) * out[k - 2]) / kk;
        }
    };
    fill(lam, value, n);
    if (deriv.empty()) return;
    // d/dt C_l^lam = 2 lam C_{l-1}^{lam+1}
    std::vector<double> shifted(n);
    fill(lam + 1.0, shifted, n);
    deriv[0] = 0.0;
    for (std::size_t k = 1; k < n; ++k) deriv[k] = 2.0 * lam * shifted[k - 1];
}

double gegenbauer_at_one(int l, double lam) {
    double v = 1.0;
    for (int k = 0; k < l; ++k) v *= (2.0 * lam + k) / (k + 1.0);
    return v;
}

double gegenbauer_norm(int l, double lam) {
    const double log_value = std::log(kPi) + (1.0 - 2.0 * lam) * std::numbers::ln2 +
                             std::lgamma(l + 2.0 * lam) - std::lgamma(l + 1.0) -
                             std::log(l + lam) - 2.0 * std::lgamma(lam);
    return std::exp(log_value);
}

}  // namespace actopo::specfun
