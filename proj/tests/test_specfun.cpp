#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>

#include "actopo/error.hpp"
#include "actopo/specfun.hpp"

using namespace actopo;
using namespace actopo::specfun;

namespace {

constexpr double kPi = std::numbers::pi;

double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

// Independent oracle: J_nu(x) by its defining power series, valid for any
// real nu (negative non-integer included) at moderate x.
double j_series(double nu, double x) {
    double sum = 0.0;
    for (int k = 0; k < 80; ++k) {
        const double t = std::pow(-1.0, k) * std::pow(0.5 * x, 2 * k + nu) /
                         (std::tgamma(k + 1.0) * std::tgamma(k + nu + 1.0));
        sum += t;
        if (k > 5 && std::abs(t) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
}

// Composite Simpson, in-test, so nothing from the library is reused.
template <class F>
double simpson(F f, double a, double b, int n) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

// Reference values frozen from a 30-digit arbitrary-precision evaluation.
struct BesselRef {
    double nu, x, j, y;
};
const BesselRef kBesselTable[] = {
    {0, 0.1, 0.99750156206604003, -1.5342386513503668},
    {0, 1, 0.76519768655796655, 0.088256964215676958},
    {0, 10, -0.24593576445134834, 0.055671167283599391},
    {0, 100, 0.019985850304223122, -0.077244313365083152},
    {0, 1000, 0.024786686152420175, 0.0047159179776228134},
    {0.5, 0.1, 0.25189294032600095, -2.5105273689585092},
    {0.5, 1, 0.67139670714180309, -0.43109886801837608},
    {0.5, 10, -0.13726373575505048, 0.21170886633139815},
    {0.5, 100, -0.040402132716252124, -0.068803091468728084},
    {0.5, 1000, 0.020863266605093828, -0.014189569370927294},
    {1, 0.1, 0.049937526036242, -6.4589510947020266},
    {1, 1, 0.44005058574493352, -0.78121282130028872},
    {1, 10, 0.043472746168861437, 0.24901542420695388},
    {1, 100, -0.077145352014112158, -0.020372312002759793},
    {1, 1000, 0.0047283119070895239, -0.024784331292351779},
    {1.5, 0.1, 0.0084020343015001436, -25.357166629911092},
    {1.5, 1, 0.24029783912342701, -1.1024955751601792},
    {1.5, 10, 0.1979824927558931, 0.1584346223881903},
    {1.5, 100, -0.069207112795890605, 0.039714101801564843},
    {1.5, 1000, -0.0141687061043222, -0.020877456174464755},
    {2, 0.1, 0.001248958658799919, -127.64478324269016},
    {2, 1, 0.11490348493190048, -1.6506826068162544},
    {2, 10, 0.25463031368512062, -0.0058680824422086146},
    {2, 100, -0.021528757344505366, 0.076836867125027956},
    {2, 1000, -0.024777229528605996, -0.004765486640207517},
    {2.5, 0.1, 0.00016808871900334129, -758.20447152837421},
    {2.5, 1, 0.049496810228477942, -2.8763878574621614},
    {2.5, 10, 0.19665848358181841, -0.16417847961494106},
    {2.5, 100, 0.038325919332375406, 0.069994514522775029},
    {2.5, 1000, -0.020905772723406794, 0.0141269370024039},
    {10.5, 0.1, 1.8346985880035505e-21, -1.6524030146619765e+19},
    {10.5, 1, 5.6781874776346223e-11, -536349976.62759938},
    {10.5, 10, 0.16300736639032575, -0.43512346858717908},
    {10.5, 100, -0.0015611238546507795, 0.079994129764709875},
    {10.5, 1000, -0.021612352348443216, 0.01302155963232475},
    {20, 0.1, 3.919437720858622e-45, -4.0607084201263677e+42},
    {20, 1, 3.8735030085246577e-25, -4.1139703148355053e+22},
    {20, 10, 1.1513369247813398e-5, -1597.483848269626},
    {20, 100, 0.062217458498338753, 0.051247973076188424},
    {20, 1000, 0.023357967932679335, 0.0095473760149873017},
    {35.5, 0.1, 1.0532450517644596e-87, -8.5132242062613301e+84},
    {35.5, 1, 3.3081430596240466e-52, -2.7115024582890849e+49},
    {35.5, 10, 5.2761122096049012e-17, -177124327928481.83},
    {35.5, 100, 0.074457515819749274, -0.035575666346021244},
    {35.5, 1000, -0.00082784349396875569, 0.025225699133611997},
};

}  // namespace

TEST_CASE("Dimension rejects d < 3") {
    CHECK_THROWS_AS(Dimension(2), ValidationError);
    CHECK(Dimension(4).value() == 4);
    CHECK(Dimension(4).gegenbauer_lambda() == doctest::Approx(1.0));
}

TEST_CASE("gamma_fn") {
    CHECK(gamma_fn(1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(gamma_fn(4.0) == doctest::Approx(6.0).epsilon(1e-14));
    // Gamma(1/2) = int t^{-1/2} e^{-t} dt = 2 int_0^inf e^{-u^2} du.
    const double oracle = 2.0 * simpson([](double u) { return std::exp(-u * u); }, 0.0, 12.0, 4000);
    CHECK(rel_err(gamma_fn(0.5), oracle) < 1e-12);
    CHECK(rel_err(gamma_fn(0.5), std::sqrt(kPi)) < 1e-12);
    CHECK_THROWS_AS(gamma_fn(0.0), ValidationError);
    CHECK_THROWS_AS(gamma_fn(-1.5), ValidationError);
}

TEST_CASE("sphere_area") {
    CHECK(sphere_area(2) == doctest::Approx(2.0 * kPi).epsilon(1e-14));
    CHECK(sphere_area(3) == doctest::Approx(4.0 * kPi).epsilon(1e-14));
    CHECK(sphere_area(4) == doctest::Approx(2.0 * kPi * kPi).epsilon(1e-14));
    // |S^{d+1}| = 2 pi / d * |S^{d-1}|.
    for (int d = 2; d < 9; ++d) {
        CHECK(rel_err(sphere_area(d + 2), 2.0 * kPi / d * sphere_area(d)) < 1e-13);
    }
    CHECK_THROWS_AS(sphere_area(1), ValidationError);
}

TEST_CASE("Bessel half-integer closed forms against the power series") {
    const double x = 1.0;
    const double jc = std::sqrt(2.0 / (kPi * x)) * std::sin(x);
    const double yc = -std::sqrt(2.0 / (kPi * x)) * std::cos(x);
    CHECK(rel_err(bessel_j(0.5, x), j_series(0.5, x)) < 1e-13);
    CHECK(rel_err(bessel_j(0.5, x), jc) < 1e-14);
    // Y_{1/2} = -J_{-1/2}.
    CHECK(rel_err(bessel_y(0.5, x), -j_series(-0.5, x)) < 1e-13);
    CHECK(rel_err(bessel_y(0.5, x), yc) < 1e-14);
    // Higher half-integer orders: Y_{n+1/2} = (-1)^{n+1} J_{-n-1/2}.
    for (int n = 1; n < 6; ++n) {
        for (double xx : {0.3, 1.0, 4.0}) {
            const double nu = n + 0.5;
            CHECK(rel_err(bessel_j(nu, xx), j_series(nu, xx)) < 1e-11);
            CHECK(rel_err(bessel_y(nu, xx), std::pow(-1.0, n + 1) * j_series(-nu, xx)) < 1e-11);
        }
    }
}

TEST_CASE("Bessel values against frozen high-precision table") {
    for (const auto& ref : kBesselTable) {
        CAPTURE(ref.nu);
        CAPTURE(ref.x);
        CHECK(rel_err(bessel_j(ref.nu, ref.x), ref.j) < 1e-10);
        CHECK(rel_err(bessel_y(ref.nu, ref.x), ref.y) < 1e-10);
    }
}

TEST_CASE("Bessel limits and errors") {
    CHECK(bessel_j(0.0, 1e-12) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(bessel_j(1.0, 0.0), ValidationError);
    CHECK_THROWS_AS(bessel_y(0.5, -1.0), ValidationError);
    CHECK_THROWS_AS(bessel_j(-1.0, 1.0), ValidationError);
}

TEST_CASE("Wronskian J Y' - J' Y = 2/(pi x)") {
    for (double nu : {0.5, 1.0, 1.5, 2.0}) {
        for (double x : {0.1, 1.0, 10.0, 100.0}) {
            const double w = bessel_j(nu, x) * bessel_y_prime(nu, x) -
                             bessel_j_prime(nu, x) * bessel_y(nu, x);
            CAPTURE(nu);
            CAPTURE(x);
            CHECK(rel_err(w, 2.0 / (kPi * x)) < 1e-9);
        }
    }
}

TEST_CASE("half_integer_j_sequence against series and Boost") {
    std::vector<double> seq(40);
    for (double x : {0.05, 0.7, 3.0, 25.0, 300.0}) {
        half_integer_j_sequence(x, seq);
        for (int n = 0; n < 40; ++n) {
            const double nu = n + 0.5;
            const double ref = x <= 3.0 ? j_series(nu, x) : boost::math::cyl_bessel_j(nu, x);
            CAPTURE(x);
            CAPTURE(n);
            CHECK(rel_err(seq[n], ref) < 1e-10);
        }
    }
}

TEST_CASE("fundamental solution, d = 3 closed form") {
    const FundamentalSolution g(Dimension(3));
    CHECK(rel_err(g.beta(), 1.0 / (4.0 * std::sqrt(2.0 * kPi))) < 1e-14);
    CHECK(rel_err(g(kPi), 1.0 / (4.0 * kPi * kPi)) < 1e-13);
    CHECK(std::abs(g(kPi / 2.0)) < 1e-16);
    for (double r = 0.01; r <= 100.0; r *= 1.07) {
        const double want = -std::cos(r) / (4.0 * kPi * r);
        CHECK(std::abs(g(r) - want) <= 1e-10 * std::max(std::abs(want), 1e-3));
    }
    CHECK_THROWS_AS(g(0.0), ValidationError);
}

TEST_CASE("fundamental solution: beta formula and small-r normalisation") {
    for (int d : {3, 4, 5, 6}) {
        const FundamentalSolution g{Dimension(d)};
        const double area = sphere_area(d);
        const double beta = std::pow(2.0, -0.5 * d) * kPi / (area * std::tgamma(0.5 * d));
        CHECK(rel_err(g.beta(), beta) < 1e-13);
        const double r = 1e-4;
        // Unit flux through a small sphere is what makes G a fundamental
        // solution; the pointwise limit carries the 1/(d-2).
        CHECK(std::abs(g.derivative(r) * area * std::pow(r, d - 1) - 1.0) < 1e-2);
        CHECK(std::abs(g(r) * area * std::pow(r, d - 2) + 1.0 / (d - 2)) < 1e-2);
    }
}

TEST_CASE("fundamental solution derivative matches central differences") {
    for (int d : {3, 4, 5}) {
        const FundamentalSolution g{Dimension(d)};
        for (double r : {0.3, 1.0, 2.7, 15.0, 80.0}) {
            const double h = 1e-5 * r;
            const double fd = (g(r + h) - g(r - h)) / (2.0 * h);
            double v = 0, dv = 0;
            g.value_and_derivative(r, v, dv);
            CHECK(v == doctest::Approx(g(r)).epsilon(1e-15));
            CHECK(std::abs(dv - fd) < 1e-7 * std::max(1.0, std::abs(fd)));
            CHECK(dv == doctest::Approx(g.derivative(r)).epsilon(1e-15));
        }
    }
}

// Property: Laplacian of x -> G(|x|) by a 2d+1 point stencil satisfies
// Delta G + G = O(h^2), and halving h shrinks the residual by about 4.
TEST_CASE("fundamental solution: Helmholtz residual converges at second order") {
    std::mt19937_64 rng(20261014);
    for (int d : {3, 4}) {
        const FundamentalSolution g{Dimension(d)};
        std::normal_distribution<double> normal;
        std::uniform_real_distribution<double> radius(0.5, 50.0);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> x(d);
            double n2 = 0;
            for (auto& c : x) { c = normal(rng); n2 += c * c; }
            const double rad = radius(rng);
            for (auto& c : x) c *= rad / std::sqrt(n2);
            auto field = [&](const std::vector<double>& p) {
                double s = 0;
                for (double c : p) s += c * c;
                return g(std::sqrt(s));
            };
            auto residual = [&](double h) {
                double lap = -2.0 * d * field(x);
                for (int k = 0; k < d; ++k) {
                    auto p = x;
                    p[k] += h;
                    lap += field(p);
                    p[k] -= 2 * h;
                    lap += field(p);
                }
                return std::abs(lap / (h * h) + field(x));
            };
            const double e1 = residual(1e-2);
            const double e2 = residual(5e-3);
            CAPTURE(rad);
            // Truncation error scales like h^2 |G''''| ~ h^2 r^{-(d+2)}.
            CHECK(e1 < 1e-3 * (1.0 + std::pow(rad, -(d + 2))));
            // Below ~1e-11 round-off dominates; the ratio is then meaningless.
            if (e1 > 1e-10) CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.2));
        }
    }
}

TEST_CASE("fundamental solution decay: |G| r^{(d-1)/2} bounded on [1, 1000]") {
    for (int d : {3, 4, 5}) {
        const FundamentalSolution g{Dimension(d)};
        double peak = 0;
        for (double r = 1.0; r <= 1000.0; r += 0.05) {
            peak = std::max(peak, std::abs(g(r)) * std::pow(r, 0.5 * (d - 1)));
        }
        // Large-r asymptotics give beta sqrt(2/pi) as the envelope.
        CHECK(peak < 2.0 * g.beta() * std::sqrt(2.0 / kPi) + 0.1);
    }
}

TEST_CASE("hyperspherical j_l conventions") {
    const Dimension d3(3), d4(4);
    CHECK(rel_err(hyperspherical_jl(d3, 0, 1.3), std::sqrt(2.0 / kPi) * std::sin(1.3) / 1.3) <
          1e-14);
    CHECK(std::abs(hyperspherical_jl(d3, 0, kPi)) < 1e-15);
    CHECK(hyperspherical_jl(d3, 0, 0.0) == doctest::Approx(std::sqrt(2.0 / kPi)));
    for (int l = 1; l < 5; ++l) CHECK(hyperspherical_jl(d4, l, 0.0) == 0.0);
    CHECK(hyperspherical_jl(d4, 0, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(hyperspherical_jl(d4, 0, 1e-6) == doctest::Approx(0.5).epsilon(1e-10));
    // Continuity across the series/Bessel switch at r = 1.
    for (int d : {3, 4, 5}) {
        for (int l = 0; l < 12; ++l) {
            const double below = hyperspherical_jl(Dimension(d), l, 1.0 - 1e-12);
            const double above = hyperspherical_jl(Dimension(d), l, 1.0 + 1e-12);
            CHECK(rel_err(below, above) < 1e-10);
        }
    }
}

TEST_CASE("hyperspherical j_l satisfies the radial ODE") {
    for (int d : {3, 4}) {
        const Dimension dim(d);
        for (int l = 0; l <= 6; ++l) {
            for (double r : {0.7, 2.0, 5.5, 13.0, 40.0}) {
                const double h = 1e-3;
                const double f0 = hyperspherical_jl(dim, l, r);
                const double fp = hyperspherical_jl(dim, l, r + h);
                const double fm = hyperspherical_jl(dim, l, r - h);
                const double d2 = (fp - 2 * f0 + fm) / (h * h);
                const double d1 = (fp - fm) / (2 * h);
                const double res = d2 + (d - 1) / r * d1 + (1.0 - l * (l + d - 2.0) / (r * r)) * f0;
                CAPTURE(d);
                CAPTURE(l);
                CAPTURE(r);
                CHECK(std::abs(res) < 1e-6);
            }
        }
    }
}

TEST_CASE("hyperspherical_sequence agrees with single evaluations") {
    const int lmax = 60;
    std::vector<double> v(lmax + 1), dv(lmax + 1), vr(lmax + 1);
    for (int d : {3, 4, 5}) {
        const Dimension dim(d);
        for (double r : {0.0, 0.2, 0.99, 1.0, 3.0, 17.0, 60.0, 250.0}) {
            hyperspherical_sequence(dim, lmax, r, v, dv, vr);
            for (int l = 0; l <= lmax; ++l) {
                const double ref = hyperspherical_jl(dim, l, r);
                CAPTURE(d);
                CAPTURE(r);
                CAPTURE(l);
                CHECK(std::abs(v[l] - ref) <= 1e-11 * std::abs(ref) + 1e-300);
                if (r > 0.1) {
                    const double h = 1e-6 * std::max(1.0, r);
                    const double fd = (hyperspherical_jl(dim, l, r + h) -
                                       hyperspherical_jl(dim, l, r - h)) / (2 * h);
                    CHECK(std::abs(dv[l] - fd) <= 1e-6 * std::max(std::abs(fd), 1e-3 * std::abs(v[l])) + 1e-280);
                    if (l > 0) CHECK(std::abs(vr[l] - v[l] / r) <= 1e-12 * std::abs(v[l] / r) + 1e-300);
                }
            }
        }
    }
}

TEST_CASE("Gegenbauer polynomials") {
    for (double lam : {0.5, 1.0, 1.5}) {
        for (double t : {-1.0, -0.3, 0.0, 0.8, 1.0}) {
            CHECK(gegenbauer(0, lam, t) == 1.0);
            CHECK(gegenbauer(1, lam, t) == doctest::Approx(2 * lam * t));
        }
        for (int l = 0; l < 15; ++l) {
            CHECK(rel_err(gegenbauer(l, lam, 1.0), gegenbauer_at_one(l, lam)) < 1e-12);
        }
    }
    // lam = 1: Chebyshev U, C_l(cos th) = sin((l+1) th) / sin th.
    const double th = kPi / 3.0;
    CHECK(std::abs(gegenbauer(2, 1.0, std::cos(th)) - std::sin(3 * th) / std::sin(th)) < 1e-14);
    for (int l = 0; l < 30; ++l) {
        CHECK(std::abs(gegenbauer(l, 1.0, std::cos(0.37)) -
                       std::sin((l + 1) * 0.37) / std::sin(0.37)) < 1e-11);
    }
    // lam = 1/2 is Legendre: P_3(t) = (5t^3 - 3t)/2.
    CHECK(gegenbauer(3, 0.5, 0.4) == doctest::Approx(0.5 * (5 * 0.064 - 1.2)));
}

TEST_CASE("Gegenbauer sequence derivative and norm") {
    std::vector<double> v(20), dv(20);
    for (double lam : {0.5, 1.0, 2.5}) {
        for (double t : {-0.9, 0.1, 0.6, 1.0}) {
            gegenbauer_sequence(lam, t, v, dv);
            for (int l = 0; l < 20; ++l) {
                CHECK(rel_err(v[l], gegenbauer(l, lam, t)) < 1e-13);
                const double h = 1e-6;
                const double fd = t >= 1.0
                    ? (gegenbauer(l, lam, t) - gegenbauer(l, lam, t - h)) / h
                    : (gegenbauer(l, lam, t + h) - gegenbauer(l, lam, t - h)) / (2 * h);
                CHECK(std::abs(dv[l] - fd) < 1e-4 * std::max(1.0, std::abs(fd)));
            }
        }
        // Norm by Simpson on [0, pi].
        for (int l : {0, 1, 4, 9}) {
            const double num = simpson(
                [&](double th) {
                    const double c = gegenbauer(l, lam, std::cos(th));
                    return c * c * std::pow(std::sin(th), 2 * lam);
                },
                0.0, kPi, 20000);
            CHECK(rel_err(gegenbauer_norm(l, lam), num) < 1e-8);
        }
    }
}
