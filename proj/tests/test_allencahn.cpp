#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "actopo/allencahn.hpp"
#include "actopo/error.hpp"
#include "actopo/specfun.hpp"

using namespace actopo;
using namespace actopo::allencahn;

namespace {

// j_0(|x|) in d = 4: the extension of the first Dirichlet eigenfunction of
// the ball of radius j_{1,1}.
runge::FourierBesselSolution radial_w(int d = 4, double amp = 1.0) {
    Eigen::VectorXd axis = Eigen::VectorXd::Zero(d);
    axis(d - 1) = 1.0;
    return runge::FourierBesselSolution(specfun::Dimension(d), 0, Eigen::VectorXd::Constant(1, amp), axis,
                                        10.0, true);
}

// j_0(|x - c e_4|) expanded about the origin.
runge::FourierBesselSolution offaxis_w(double c) {
    const specfun::Dimension d(4);
    Eigen::VectorXd ctr = Eigen::VectorXd::Zero(4);
    ctr(3) = c;
    runge::Field f;
    f.value = [=](const Eigen::VectorXd& x) { return specfun::hyperspherical_jl(d, 0, (x - ctr).norm()); };
    f.gradient = [=](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        const Eigen::VectorXd y = x - ctr;
        const double r = y.norm();
        std::vector<double> j(2), dj(2), jr(2);
        specfun::hyperspherical_sequence(d, 1, r, j, dj, jr);
        return dj[0] / r * y;
    };
    runge::ExpansionParams p;
    p.tolerance = 1e-7;
    p.lmax_cap = 60;
    Eigen::MatrixXd check(4, 1);
    check.col(0) = ctr + Eigen::Vector4d(0.3, 0.2, -0.1, 0.5);
    const auto [fb, rep, info] = runge::expand_fourier_bessel(f, d, c + 5.0, p, check);
    REQUIRE(info.tail_satisfied);
    REQUIRE(rep.sup_err_C0 < 1e-6);
    return fb;
}

Eigen::MatrixXd ray_points(int d, double r0, double r1, int n) {
    Eigen::VectorXd dir = Eigen::VectorXd::Ones(d).normalized();
    Eigen::MatrixXd pts(d, n);
    for (int k = 0; k < n; ++k) pts.col(k) = (r0 + (r1 - r0) * k / (n - 1)) * dir;
    return pts;
}

}  // namespace

TEST_CASE("residual check: exact states and the kink solution") {
    const Eigen::MatrixXd pts = ray_points(4, 0.3, 5.0, 40);
    runge::Field zero{[](const Eigen::VectorXd&) { return 0.0; }, {}};
    CHECK(residual_check(zero, pts).sup == 0.0);
    runge::Field one{[](const Eigen::VectorXd&) { return 1.0; }, {}};
    const auto r1 = residual_check(one, pts);
    CHECK(r1.sup < 1e-12);
    for (double v : r1.raw_sup) CHECK(v < 1e-12);

    // tanh(x_1 / sqrt 2) solves u'' + u - u^3 = 0.
    runge::Field kink{[](const Eigen::VectorXd& x) { return std::tanh(x(0) / std::sqrt(2.0)); }, {}};
    const auto rk = residual_check(kink, pts, 2e-2);
    CHECK(rk.raw_sup[0] > 1e-6);
    CHECK(rk.observed_order == doctest::Approx(2.0).epsilon(0.05));
    CHECK(rk.sup < 1e-8);
    CHECK(rk.sup < 10.0 * rk.fd_floor + 1e-9);

    // A non-solution keeps an O(1) residual.
    runge::Field sq{[](const Eigen::VectorXd& x) { return 0.5 * x.squaredNorm(); }, {}};
    CHECK(residual_check(sq, pts).sup > 1.0);
}

TEST_CASE("promotion preconditions") {
    CHECK_THROWS_AS(picard_iterate(radial_w(3), 0.1), ValidationError);
    CHECK_THROWS_AS(picard_iterate(radial_w(4, 0.0), 0.1), ValidationError);
    CHECK_THROWS_AS(picard_iterate(radial_w(), 0.0), ValidationError);
    CHECK_THROWS_AS(picard_iterate(radial_w(), -1.0), ValidationError);
    try {
        (void)picard_iterate(radial_w(3), 0.1);
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("boundary case") != std::string::npos);
    }
}

TEST_CASE("radial d = 4 promotion") {
    const auto w = radial_w();
    const auto b = picard_iterate(w, 0.1);
    CHECK_FALSE(b.zonal);
    CHECK(b.halvings == 0);
    CHECK(b.iterations <= 15);
    CHECK(b.delta == doctest::Approx(0.1 / (2.0 * b.w_norm)).epsilon(1e-15));
    CHECK(b.norm_history.front() == doctest::Approx(0.05).epsilon(1e-12));
    for (double n : b.norm_history) CHECK(n < b.eps);
    for (double q : b.contraction_ratios) CHECK(q < 0.5);
    for (std::size_t i = 2; i < b.diff_history.size(); ++i) CHECK(b.diff_history[i] < b.diff_history[i - 1]);
    CHECK(b.diff_history.back() < 1e-8);
    CHECK(b.fixed_point_defect <= 2e-8);
    CHECK(b.closeness > 0.0);
    CHECK(b.tail_bound < 1e-4);

    // Quadratic law of the contraction factor in eps.
    const auto b2 = picard_iterate(w, 0.05);
    REQUIRE(!b.contraction_ratios.empty());
    REQUIRE(!b2.contraction_ratios.empty());
    const double factor = b.contraction_ratios.front() / b2.contraction_ratios.front();
    CHECK(factor == doctest::Approx(4.0).epsilon(0.3));

    // The iteration map is odd.
    const auto bm = picard_iterate(w.negated(), 0.1);
    CHECK(oddness_defect(b, bm) <= 1e-10);

    // Residual of the evaluator against the combined floor.
    const Eigen::MatrixXd pts = ray_points(4, 0.25, 40.0, 120);
    const auto u = evaluator(b);
    const auto rep = residual_check(u, pts, 1e-2);
    const double qf = quadrature_floor(b, pts, 1e-2);
    MESSAGE("residual " << rep.sup << " fd floor " << rep.fd_floor << " quadrature floor " << qf);
    CHECK(rep.sup < 10.0 * (rep.fd_floor + qf));
    CHECK(rep.sup < 1e-6 * b.eps);

    // The promoted field is delta w plus a small correction off the nodes too.
    const Eigen::Vector4d x(0.7, -1.1, 0.4, 2.0);
    CHECK(std::abs(u.value(x) - b.delta * w.value(x)) < b.closeness * b.delta / std::pow(1 + x.squaredNorm(), 0.75) * 1.01);
    CHECK_THROWS_AS(u.value(Eigen::Vector4d(300, 0, 0, 0)), ValidationError);
}

TEST_CASE("closeness scales like eps^2") {
    const auto rep = closeness_report(radial_w(), {0.2, 0.1, 0.05, 0.025});
    REQUIRE(rep.slope.has_value());
    MESSAGE("slope " << *rep.slope);
    CHECK(*rep.slope == doctest::Approx(2.0).epsilon(0.15));
    CHECK(rep.monotone);
    const auto single = closeness_report(radial_w(), {0.1});
    CHECK_FALSE(single.slope.has_value());
}

TEST_CASE("adaptive halving and failure") {
    // A large amplitude demands halvings before the map contracts.
    PicardParams p;
    const auto b = picard_iterate(radial_w(), 3.0, p);
    CHECK(b.halvings >= 1);
    CHECK(b.eps < 3.0);
    for (double q : b.contraction_ratios) CHECK(q < 0.5);
    p.max_halvings = 0;
    p.max_iter = 2;
    p.tol = 1e-20;
    CHECK_THROWS_AS(picard_iterate(radial_w(), 0.1, p), StageFailure);
}

TEST_CASE("zonal d = 4 promotion of an off-centre ball") {
    const auto w = offaxis_w(6.0);
    PicardParams p;
    const auto b = picard_iterate(w, 0.1, p);
    CHECK(b.zonal);
    for (double q : b.contraction_ratios) CHECK(q < 0.5);
    for (double n : b.norm_history) CHECK(n < b.eps);
    CHECK(b.fixed_point_defect <= 2e-8);
    const auto bm = picard_iterate(w.negated(), 0.1, p);
    CHECK(oddness_defect(b, bm) <= 1e-10);

    // Zonal evaluator: near the target the correction is small relative to delta w.
    const auto u = evaluator(b);
    Eigen::Vector4d x(0.0, 1.0, 0.0, 6.0);
    CHECK(std::abs(u.value(x) / b.delta - w.value(x)) < b.closeness);
    Eigen::MatrixXd pts(4, 12);
    for (int k = 0; k < 12; ++k) {
        const double th = 0.2 + 0.25 * k;
        pts.col(k) = Eigen::Vector4d(0.0, 5.0 * std::sin(th), 0.0, 6.0 + 5.0 * std::cos(th));
    }
    const auto rep = residual_check(u, pts, 1e-2);
    const double qf = quadrature_floor(b, pts, 1e-2, p);
    MESSAGE("zonal residual " << rep.sup << " fd floor " << rep.fd_floor << " quadrature floor " << qf);
    CHECK(rep.sup < 10.0 * (rep.fd_floor + qf));
}
