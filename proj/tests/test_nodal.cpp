#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "actopo/error.hpp"
#include "actopo/nodal.hpp"
#include "actopo/random.hpp"
#include "actopo/specfun.hpp"

using namespace actopo;
using namespace actopo::nodal;

namespace {

constexpr double kPi = std::numbers::pi;

domains::SurfaceSpec ball(Eigen::VectorXd c, double r) { return {domains::Ball{std::move(c), r}, "ball"}; }

runge::Field sinc3() {
    runge::Field f;
    f.value = [](const Eigen::VectorXd& x) {
        const double r = x.norm();
        return r == 0.0 ? 1.0 : std::sin(r) / r;
    };
    f.gradient = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        const double r = x.norm();
        if (r == 0.0) return Eigen::VectorXd::Zero(x.size());
        return (std::cos(r) / r - std::sin(r) / (r * r)) / r * x;
    };
    return f;
}

runge::Field constant(double c) {
    return {[c](const Eigen::VectorXd&) { return c; },
            [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return Eigen::VectorXd::Zero(x.size()); }};
}

// Implicit solid torus about e_3 (value only; gradients by differences).
runge::Field torus_field(const Eigen::Vector3d& c, double big, double small) {
    return {[=](const Eigen::VectorXd& x) {
                const Eigen::Vector3d y = x - c;
                const double rho = std::hypot(y(0), y(1));
                return std::hypot(rho - big, y(2)) - small;
            },
            {}};
}

int genus_in_shell(const LevelSetMesh& m, const runge::Field& f, const domains::SurfaceSpec& t, double shell) {
    const auto rep = verify_component_topology(m, f, t, shell);
    return rep.pass ? rep.in_shell[0].genus : -1;
}

}  // namespace

TEST_CASE("radial roots") {
    const auto m = extract_zero_set(sinc3(), RadialInterval{0.1, 4.0, Eigen::Vector3d::UnitX()}, 0.05);
    const auto& rr = std::get<RadialRoots>(m.geometry);
    REQUIRE(rr.radii.size() == 1);
    CHECK(std::abs(rr.radii[0] - kPi) < 1e-10);
    CHECK(extract_zero_set(constant(1.0), RadialInterval{0.1, 4.0, Eigen::Vector3d::UnitX()}, 0.05).empty());
    CHECK_THROWS_AS(extract_zero_set(constant(0.0), RadialInterval{0.1, 4.0, Eigen::Vector3d::UnitX()}, 0.05),
                    ValidationError);
    CHECK_THROWS_AS(extract_zero_set(sinc3(), RadialInterval{0.1, 4.0, Eigen::Vector3d::UnitX()}, 0.0),
                    ValidationError);

    // Concentric spheres: the distance is the radius gap.
    const auto target = ball(Eigen::Vector3d::Zero(), kPi);
    CHECK(hausdorff_distance(m, target).value() < 1e-10);
    LevelSetMesh shifted;
    shifted.geometry = RadialRoots{{kPi + 0.03}, Eigen::Vector3d::UnitX()};
    CHECK(hausdorff_distance(shifted, target).value() == doctest::Approx(0.03).epsilon(1e-9));
    LevelSetMesh none;
    none.geometry = RadialRoots{{}, Eigen::Vector3d::UnitX()};
    CHECK_FALSE(hausdorff_distance(none, target).has_value());
    const auto top = verify_component_topology(m, sinc3(), target, 0.5);
    CHECK(top.pass);
    CHECK(top.grad_min == doctest::Approx(1.0 / kPi).epsilon(1e-9));
}

TEST_CASE("sphere isosurface: closed, chi = 2, close to the target") {
    const auto target = ball(Eigen::Vector3d::Zero(), kPi);
    const Box box = box_around(target, 0.6);
    // The box corners reach the next zero sphere r = 2 pi: open patches.
    const auto full = extract_zero_set(sinc3(), box, 0.12);
    int open = 0;
    for (const auto& c : components(full, sinc3())) open += c.closed ? 0 : 1;
    CHECK(open == 8);
    const auto m = restrict_to_shell(full, target, 0.5);
    const auto& s = std::get<Surface3D>(m.geometry);
    CHECK(s.triangles.size() > 1000);
    const auto comps = components(m, sinc3(), &target);
    REQUIRE(comps.size() == 1);
    CHECK(comps[0].closed);
    CHECK(comps[0].euler == 2);
    CHECK(comps[0].genus == 0);
    CHECK(comps[0].grad_min == doctest::Approx(1.0 / kPi).epsilon(1e-6));
    const double hd = hausdorff_distance(m, target).value();
    CHECK(hd < 1e-2);

    // Refinement keeps chi and does not worsen the distance by half.
    const auto m2 = restrict_to_shell(extract_zero_set(sinc3(), box, 0.06), target, 0.5);
    const auto c2 = components(m2, sinc3(), &target);
    REQUIRE(c2.size() == 1);
    CHECK(c2[0].euler == 2);
    CHECK(hausdorff_distance(m2, target).value() < 1.5 * hd);

    const auto top = verify_component_topology(m, sinc3(), target, 0.5);
    CHECK(top.pass);
    CHECK(top.hausdorff < 1e-2);

    // Field == 1: nothing to find, topology fails.
    const auto e = extract_zero_set(constant(1.0), box, 0.5);
    CHECK(e.empty());
    const auto miss = verify_component_topology(e, constant(1.0), target, 0.5);
    CHECK_FALSE(miss.pass);
    CHECK(miss.count_in_shell == 0);
    CHECK_THROWS_AS(extract_zero_set(constant(0.0), box, 0.5), ValidationError);
}

TEST_CASE("torus isosurface has genus 1") {
    const domains::SurfaceSpec target{domains::SolidTorus{Eigen::Vector3d(0.3, -0.2, 0.1), 3.0, 1.0}, "torus"};
    const auto f = torus_field(Eigen::Vector3d(0.3, -0.2, 0.1), 3.0, 1.0);
    const auto m = extract_zero_set(f, box_around(target, 0.4), 0.1);
    const auto rep = verify_component_topology(m, f, target, 0.3);
    CHECK(rep.pass);
    CHECK(rep.in_shell[0].euler == 0);
    CHECK(rep.in_shell[0].genus == 1);
    CHECK(rep.hausdorff < 1e-2);
    // A ball target around the same surface sees a genus mismatch.
    const auto wrong = verify_component_topology(m, f, ball(Eigen::Vector3d(0.3, -0.2, 0.1), 4.0), 3.0);
    CHECK_FALSE(wrong.pass);
}

TEST_CASE("two spheres give two components") {
    const Eigen::Vector3d a(-2.5, 0, 0), b(2.5, 0.5, 0);
    runge::Field f{[=](const Eigen::VectorXd& x) { return ((x - a).norm() - 1.0) * ((x - b).norm() - 1.2); }, {}};
    Box box;
    box.lo = Eigen::Vector3d(-4, -2, -2);
    box.hi = Eigen::Vector3d(4.2, 2.2, 2);
    box.origin = Eigen::VectorXd::Zero(3);
    box.frame = Eigen::MatrixXd::Identity(3, 3);
    const auto m = extract_zero_set(f, box, 0.08);
    const auto all = components(m, f);
    CHECK(all.size() == 2);
    for (const auto& c : all) CHECK(c.genus == 0);
    const auto ta = ball(a, 1.0), tb = ball(b, 1.2);
    const auto ra = verify_component_topology(m, f, ta, 0.3);
    const auto rb = verify_component_topology(m, f, tb, 0.3);
    CHECK(ra.pass);
    CHECK(rb.pass);
    CHECK(ra.hausdorff < 1e-2);
    CHECK(rb.hausdorff < 1e-2);
    // A shell wide enough to hold both fails.
    CHECK_FALSE(verify_component_topology(m, f, ball(Eigen::Vector3d(0, 0, 0), 3.0), 3.0).pass);
}

TEST_CASE("property: random spheres and tori keep their Euler characteristic") {
    rng::Engine g(2024);
    for (int trial = 0; trial < 12; ++trial) {
        const Eigen::Vector3d c(rng::uniform01(g) - 0.5, rng::uniform01(g) - 0.5, rng::uniform01(g) - 0.5);
        const double r = 0.8 + rng::uniform01(g);
        runge::Field f{[=](const Eigen::VectorXd& x) { return (x - c).squaredNorm() - r * r; }, {}};
        const auto t = ball(c, r);
        const auto m = extract_zero_set(f, box_around(t, 0.3), 0.07 + 0.05 * rng::uniform01(g));
        const auto comps = components(m, f, &t);
        REQUIRE(comps.size() == 1);
        CHECK(comps[0].closed);
        CHECK(comps[0].euler == 2);
        CHECK(comps[0].max_distance < 1e-6);

        const double big = 2.0 + rng::uniform01(g), small = 0.5 + 0.4 * rng::uniform01(g);
        const domains::SurfaceSpec tt{domains::SolidTorus{c, big, small}, "t"};
        const auto ft = torus_field(c, big, small);
        const auto mt = extract_zero_set(ft, box_around(tt, 0.3), 0.09);
        const auto ct = components(mt, ft, &tt);
        REQUIRE(ct.size() == 1);
        CHECK(ct[0].euler % 2 == 0);
        CHECK(ct[0].genus == 1);
    }
}

TEST_CASE("structural stability certificate and bump probe") {
    const auto target = ball(Eigen::Vector3d::Zero(), kPi);
    const Region region = box_around(target, 0.6);
    const auto m = extract_zero_set(sinc3(), region, 0.12);
    const auto st = verify_structural_stability(sinc3(), m, region, target, 0.5);
    CHECK(st.certified);
    CHECK(st.grad_min == doctest::Approx(1.0 / kPi).epsilon(1e-6));
    CHECK(st.margin == doctest::Approx(st.grad_min * 0.25));
    CHECK(st.probe_same);
    CHECK(st.probe_c1 == doctest::Approx(0.5 * st.margin));
    // Outside the certified regime the probe is only documented.
    const auto big = probe_with_bump(sinc3(), m, region, target, 0.5, 10.0 * st.grad_min);
    MESSAGE("10x grad_min bump: pass=" << big.pass << " count=" << big.count_in_shell);

    // A critical point on the zero set: f = x_1^2 - x_2^2 - x_3^2 + tiny has grad 0 at the origin.
    const auto cone = ball(Eigen::Vector3d::Zero(), 0.5);
    runge::Field saddle{[](const Eigen::VectorXd& x) { return x(0) * x(0) - x(1) * x(1) - x(2) * x(2) + 0.25; }, {}};
    const Region r2 = box_around(cone, 0.3);
    const auto ms = extract_zero_set(saddle, r2, 0.05);
    const auto ss = verify_structural_stability(saddle, ms, r2, cone, 0.3);
    CHECK_FALSE(ss.certified);
}

TEST_CASE("meridian curves of zonal fields in d = 4") {
    const specfun::Dimension d(4);
    const double rho = domains::first_bessel_zero(1.0);
    Eigen::VectorXd axis = Eigen::VectorXd::Unit(4, 3);
    const Eigen::VectorXd ctr = 6.0 * axis;
    runge::Field f{[=](const Eigen::VectorXd& x) { return specfun::hyperspherical_jl(d, 0, (x - ctr).norm()); }, {}};
    const auto target = ball(ctr, rho);
    const auto box = meridian_around(target, axis, 0.8);
    const auto m = extract_zero_set(f, box, 0.05);
    const auto rep = verify_component_topology(m, f, target, 0.5);
    CHECK(rep.pass);
    CHECK(rep.count_in_shell == 1);
    CHECK(rep.in_shell[0].closed);
    CHECK(rep.in_shell[0].genus == 0);
    CHECK(rep.hausdorff < 1e-3);
    // (r, theta) of a point on the loop.
    const auto sub = restrict_to_shell(m, target, 0.5);
    const auto& curve = std::get<ZonalCurves>(sub.geometry).curves.at(0);
    const auto pol = ZonalCurves::polar(curve.points[0]);
    CHECK(pol(0) > 6.0 - rho - 1e-3);
    CHECK(pol(0) < 6.0 + rho + 1e-3);

    // A ring of revolution shows as two mirror loops, counted once, genus 1.
    runge::Field ring{[=](const Eigen::VectorXd& x) {
                          const double z = x.dot(axis);
                          const double s = (x - z * axis).norm();
                          return std::hypot(s - 3.0, z) - 1.0;
                      },
                      {}};
    MeridianBox rb;
    rb.axis = axis;
    rb.perp = Eigen::VectorXd::Unit(4, 0);
    rb.s_max = 4.5;
    rb.z0 = -1.5;
    rb.z1 = 1.5;
    const auto mr = extract_zero_set(ring, rb, 0.05);
    CHECK(std::get<ZonalCurves>(mr.geometry).curves.size() == 2);
    const auto cr = components(mr, ring);
    REQUIRE(cr.size() == 1);
    CHECK(cr[0].genus == 1);
}

TEST_CASE("radial consistency: a 3-D slice of a d = 4 radial field") {
    const specfun::Dimension d(4);
    runge::Field f{[=](const Eigen::VectorXd& x) { return specfun::hyperspherical_jl(d, 0, x.norm()); }, {}};
    const double rho = domains::first_bessel_zero(1.0);
    const auto target = ball(Eigen::VectorXd::Zero(4), rho);
    Eigen::MatrixXd frame = Eigen::MatrixXd::Zero(4, 3);
    frame(0, 0) = frame(1, 1) = frame(3, 2) = 1.0;
    const Box box = box_around(target, 0.5, frame);
    const auto m = restrict_to_shell(extract_zero_set(f, box, 0.1), target, 0.5);
    const auto comps = components(m, f, &target);
    REQUIRE(comps.size() == 1);
    CHECK(comps[0].genus == 0);
    const auto roots = extract_zero_set(f, RadialInterval{0.5, 5.0, Eigen::VectorXd::Unit(4, 0)}, 0.05);
    const double r0 = std::get<RadialRoots>(roots.geometry).radii.at(0);
    CHECK(std::abs(r0 - rho) < 1e-10);
    CHECK(comps[0].max_distance < 1e-6);
    CHECK(hausdorff_distance(m, target).value() < 1e-2);
}

TEST_CASE("mesh to mesh distance") {
    // sin(r)/r against sin(1.01 r)/r: zero spheres pi and pi/1.01.
    runge::Field scaled{[](const Eigen::VectorXd& x) {
                            const double r = x.norm();
                            return r == 0.0 ? 1.01 : std::sin(1.01 * r) / r;
                        },
                        {}};
    const double gap = kPi - kPi / 1.01;
    const RadialInterval ray{0.5, 4.0, Eigen::Vector3d::UnitX()};
    const auto ra = extract_zero_set(sinc3(), ray, 0.05), rb = extract_zero_set(scaled, ray, 0.05);
    CHECK(mesh_distance(ra, rb).value() == doctest::Approx(gap).epsilon(1e-8));

    const Box box = box_around(ball(Eigen::Vector3d::Zero(), kPi), 0.3);
    const auto sa = extract_zero_set(sinc3(), box, 0.1), sb = extract_zero_set(scaled, box, 0.1);
    CHECK(mesh_distance(sa, sa).value() == 0.0);
    CHECK(mesh_distance(sa, sb).value() == doctest::Approx(gap).epsilon(0.1));

    Eigen::Vector4d axis(0, 0, 0, 1), perp(1, 0, 0, 0);
    const MeridianBox mb{axis, perp, 4.0, -4.0, 4.0};
    const auto za = extract_zero_set(sinc3(), mb, 0.05), zb = extract_zero_set(scaled, mb, 0.05);
    CHECK(mesh_distance(za, zb).value() == doctest::Approx(gap).epsilon(0.1));
    CHECK_FALSE(mesh_distance(za, extract_zero_set(constant(1.0), mb, 0.05)).has_value());
    CHECK_THROWS_AS(mesh_distance(za, ra), ValidationError);
}
