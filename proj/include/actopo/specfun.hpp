#pragma once

// Special functions and the Helmholtz fundamental solution in R^d, d >= 3.

#include <span>

namespace actopo::specfun {

/// Ambient space dimension. Always >= 3; stages that need more
/// (the Allen-Cahn promotion needs d >= 4) check that themselves.
class Dimension {
public:
    explicit Dimension(int d);
    int value() const noexcept { return d_; }
    /// Gegenbauer index d/2 - 1 of the zonal harmonics on S^{d-1}.
    double gegenbauer_lambda() const noexcept { return 0.5 * d_ - 1.0; }
    bool operator==(const Dimension&) const = default;

private:
    int d_;
};

double gamma_fn(double x);

/// Area of the unit sphere S^{d-1} in R^d, i.e. 2 pi^{d/2} / Gamma(d/2).
double sphere_area(int d);

/// Bessel functions of the first and second kind for real order >= 0 and
/// argument x > 0. Half-integer orders use the elementary closed forms.
double bessel_j(double order, double x);
double bessel_y(double order, double x);

/// Derivatives with respect to x, via J'_v = J_{v-1} - (v/x) J_v.
double bessel_j_prime(double order, double x);
double bessel_y_prime(double order, double x);

/// True if 2*order is an odd integer.
bool is_half_integer(double order);

/// J_{n+1/2}(x) for n = 0..out.size()-1, elementary closed forms with
/// upward recurrence where stable and Miller's method otherwise.
void half_integer_j_sequence(double x, std::span<double> out);

/// G(x) = beta |x|^{1-d/2} Y_{d/2-1}(|x|) with Delta G + G = delta, so
/// beta = 2^{-d/2} pi / (|S^{d-1}| Gamma(d/2)).
class FundamentalSolution {
public:
    explicit FundamentalSolution(Dimension d);

    Dimension dimension() const noexcept { return d_; }
    double beta() const noexcept { return beta_; }
    double sphere_area() const noexcept { return sphere_area_; }

    /// G as a function of r = |x| > 0.
    double operator()(double r) const;
    /// dG/dr.
    double derivative(double r) const;
    /// G(r) and dG/dr in one call.
    void value_and_derivative(double r, double& value, double& deriv) const;

private:
    Dimension d_;
    double beta_;
    double sphere_area_;
    double order_;  // d/2 - 1
};

/// Hyperspherical Bessel j_l(r) = r^{1-d/2} J_{l+d/2-1}(r), regular at 0
/// (behaves like r^l). Series near the origin.
double hyperspherical_jl(Dimension d, int l, double r);

/// Values of j_l, j_l' and j_l / r (the latter zero for l = 0) for
/// l = 0..lmax; each span must hold lmax+1 entries.
void hyperspherical_sequence(Dimension d, int lmax, double r, std::span<double> value,
                             std::span<double> deriv, std::span<double> over_r);

/// Singular companion r^{1-d/2} Y_{l+d/2-1}(r) and its r-derivative for
/// l = 0..lmax, r > 0, by upward recurrence. Entries overflow to +-inf for
/// large l at small r; callers treat those as out of range.
void hyperspherical_y_sequence(Dimension d, int lmax, double r, std::span<double> value,
                               std::span<double> deriv);

/// Gegenbauer polynomial C_l^lam(t) by the three-term recurrence.
double gegenbauer(int l, double lam, double t);

/// C_l^lam(t) and d/dt C_l^lam(t) for l = 0..value.size()-1.
void gegenbauer_sequence(double lam, double t, std::span<double> value,
                         std::span<double> deriv);

/// C_l^lam(1) = (2 lam)_l / l!.
double gegenbauer_at_one(int l, double lam);

/// Integral of C_l^lam(cos t)^2 sin^{2 lam} t over t in [0, pi].
double gegenbauer_norm(int l, double lam);

}  // namespace actopo::specfun
