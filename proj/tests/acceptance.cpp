// End-to-end acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance [--only 3,7] [--expect-fail 1]
//
// Exit status is 0 when the set of failing criteria equals the expected
// set, so a known failure still prints FAIL but does not break ctest,
// while an unexpected pass or failure does.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "actopo/config.hpp"
#include "actopo/error.hpp"
#include "actopo/pipeline.hpp"
#include "actopo/specfun.hpp"
#include "actopo/weighted.hpp"

#ifndef ACTOPO_CONFIG_DIR
#error "ACTOPO_CONFIG_DIR must point at the shipped configs"
#endif

using namespace actopo;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

config::PipelineConfig cfg(const std::string& name) {
    return config::load(std::string(ACTOPO_CONFIG_DIR) + "/" + name);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Collects sub-checks; the criterion passes iff all do.
struct Tally {
    bool ok = true;
    std::string text;
    void add(const std::string& name, bool pass, const std::string& value) {
        ok = ok && pass;
        if (!text.empty()) text += ", ";
        text += name + " " + value + (pass ? "" : " [x]");
    }
    Outcome done() const { return {ok, text}; }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- 1, 2

Outcome criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    Tally t;
    double flux4 = 0.0;
    std::mt19937_64 rng(1);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> radius(0.5, 50.0);
    for (int d : {3, 4}) {
        const specfun::FundamentalSolution g{specfun::Dimension(d)};
        double worst_order = 0.0;
        int rated = 0;
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> x(d);
            double n2 = 0.0;
            for (auto& c : x) {
                c = normal(rng);
                n2 += c * c;
            }
            const double rad = radius(rng);
            for (auto& c : x) c *= rad / std::sqrt(n2);
            const auto field = [&](const std::vector<double>& p) {
                double s = 0.0;
                for (double c : p) s += c * c;
                return g(std::sqrt(s));
            };
            const auto residual = [&](double h) {
                double lap = -2.0 * d * field(x);
                for (int k = 0; k < d; ++k) {
                    auto p = x;
                    p[k] += h;
                    lap += field(p);
                    p[k] -= 2.0 * h;
                    lap += field(p);
                }
                return std::abs(lap / (h * h) + field(x));
            };
            const double e1 = residual(1e-2), e2 = residual(5e-3);
            // Far out the residual sits at round-off and has no order.
            if (e1 > 1e-10) {
                ++rated;
                worst_order = std::max(worst_order, std::abs(std::log2(e1 / e2) - 2.0));
            }
        }
        t.add("d=" + std::to_string(d) + " order dev", rated > 0 && worst_order < 0.3,
              fmt(worst_order) + " over " + std::to_string(rated) + " pts");
        const double r = 1e-4;
        const double norm = g(r) * g.sphere_area() * std::pow(r, d - 2);
        t.add("d=" + std::to_string(d) + " G|S|r^(d-2)", std::abs(norm + 1.0) < 1e-2, fmt(norm));
        if (d == 4) flux4 = g.derivative(r) * g.sphere_area() * std::pow(r, d - 1);
    }
    const double s = seconds_since(t0);
    t.add("runtime", s < 1.0, fmt(s) + " s");
    Outcome o = t.done();
    if (!o.pass) {
        o.detail +=
            "; analysis: with Delta G + G = delta the small-r limit is -1/(d-2), so -1 holds in d = 3 only. d = 4 "
            "gives -1/2, while the flux G'(r)|S|r^(d-1) = " + fmt(flux4) + " confirms the unit point mass. Insisting on -1 would give "
            "Delta G + G = (d-2) delta and break the integral equation";
    }
    return o;
}

Outcome criterion2() {
    const auto t0 = std::chrono::steady_clock::now();
    Tally t;
    const specfun::FundamentalSolution g{specfun::Dimension(3)};
    double worst = 0.0;
    for (int i = 0; i <= 4000; ++i) {
        const double r = 0.01 * std::pow(1e4, i / 4000.0);
        const double want = -std::cos(r) / (4.0 * kPi * r);
        worst = std::max(worst, std::abs(g(r) - want) / std::max(1.0, std::abs(want)));
    }
    t.add("G3 vs -cos r/(4 pi r)", worst < 1e-10, fmt(worst));
    const specfun::Dimension d3(3);
    double wk = 0.0;
    for (int i = 0; i < 20; ++i) {
        for (int j = 0; j < 20; ++j) {
            const double r = 0.05 + 2.5 * i, s = 0.1 + 2.45 * j;
            const double closed = -(std::sin(r + s) - std::sin(std::abs(r - s))) / (2.0 * r * s);
            wk = std::max(wk, std::abs(weighted::radial_kernel(d3, r, s, 16) - closed));
        }
    }
    t.add("radial kernel 20x20", wk < 1e-8, fmt(wk));
    const double s = seconds_since(t0);
    t.add("runtime", s < 1.0, fmt(s) + " s");
    return t.done();
}

// ---------------------------------------------------------------- 5, 6

Outcome criterion5() {
    const auto t0 = std::chrono::steady_clock::now();
    Tally t;
    for (int d : {3, 4}) {
        const double nu = 2.0 * d;
        weighted::RadialProfile p{[nu](double r) { return std::pow(weighted::bracket(r), -nu); }, {}};
        const weighted::WeightedField v{specfun::Dimension(d), p, 0, nu};
        weighted::ConvolutionParams cp;
        cp.r_max = 400;
        const auto lo = weighted::convolve_radial(v, cp);
        cp.order *= 2;
        const auto hi = weighted::convolve_radial(v, cp);
        const auto& a = std::get<weighted::RadialSamples>(lo.field.rep);
        const auto& b = std::get<weighted::RadialSamples>(hi.field.rep);
        double diff = 0.0, sup = 0.0, arg = 0.0;
        for (int i = 0; i <= 10000; ++i) {
            const double r = 0.01 * i;
            diff = std::max(diff, std::abs(a.value(r) - b.value(r)));
            const double w = std::pow(weighted::bracket(r), 0.5 * (d - 1)) * std::abs(a.value(r));
            if (w > sup) {
                sup = w;
                arg = r;
            }
        }
        const std::string tag = "d=" + std::to_string(d);
        t.add(tag + " sup", std::isfinite(sup) && arg < 50.0, fmt(sup) + " at r=" + fmt(arg));
        t.add(tag + " order doubling", diff < 1e-8, fmt(diff));
    }
    const double s = seconds_since(t0);
    t.add("runtime", s < 60.0, fmt(s) + " s");
    return t.done();
}

Outcome criterion6() {
    const auto t0 = std::chrono::steady_clock::now();
    Tally t;
    const auto make = [](double panel, int order) { return std::make_shared<const weighted::RadialGrid>(60.0, panel, order); };
    const auto sample = [](std::shared_ptr<const weighted::RadialGrid> g, int d, double width, double amp) {
        weighted::RadialSamples s;
        s.grid = g;
        for (double r : g->nodes()) s.values.push_back(amp * std::exp(-r * r / (width * width)));
        return weighted::WeightedField{specfun::Dimension(d), s, 0, 0.5 * (d - 1)};
    };
    std::vector<weighted::WeightedField> fam, fine;
    const auto g = make(0.5, 16), gf = make(0.25, 24);
    for (int k = 0; k < 10; ++k) {
        fam.push_back(sample(g, 4, 0.5 + 0.3 * k, 1.0));
        fine.push_back(sample(gf, 4, 0.5 + 0.3 * k, 1.0));
    }
    const auto rep = weighted::verify_cubic_bound(fam);
    const auto rep_fine = weighted::verify_cubic_bound(fine);
    t.add("max ratio", std::isfinite(rep.max_ratio) && rep.max_ratio > 0.0, fmt(rep.max_ratio));
    double scale = 0.0;
    for (const auto& v : fam) {
        const auto two = weighted::verify_cubic_bound({v, weighted::scaled(v, 2.0)});
        scale = std::max(scale, std::abs(two.ratios[0] - two.ratios[1]) / two.ratios[0]);
    }
    t.add("v->2v rel change", scale < 1e-10, fmt(scale));
    const double refine = std::abs(rep_fine.max_ratio / rep.max_ratio - 1.0);
    t.add("refinement change", refine < 0.2, fmt(refine));
    bool refused = false;
    try {
        weighted::verify_cubic_bound({sample(g, 3, 1.0, 1.0)});
    } catch (const ValidationError&) {
        refused = true;
    }
    t.add("d=3 rejected", refused, refused ? "yes" : "no");
    const double s = seconds_since(t0);
    t.add("runtime", s < 60.0, fmt(s) + " s");
    return t.done();
}

// ---------------------------------------------------------------- pipelines

const nodal::Component* single(const nodal::TopologyReport& t) {
    return t.count_in_shell == 1 && t.in_shell.size() == 1 ? &t.in_shell.front() : nullptr;
}

Outcome criterion3() {
    const auto t0 = std::chrono::steady_clock::now();
    pipeline::Pipeline p(cfg("ball3.ini"));
    p.helmholtz(true);
    Tally t;
    t.add("C0", p.final_report.sup_err_C0 < 1e-3, fmt(p.final_report.sup_err_C0));
    t.add("C1", p.final_report.sup_err_C1 < 1e-2, fmt(p.final_report.sup_err_C1));
    const auto& n = p.nodal_w.at(0);
    const auto* c = single(n.topology);
    t.add("genus", c && c->closed && c->genus == 0, c ? std::to_string(c->genus) : "no single component");
    t.add("hausdorff", n.hausdorff && *n.hausdorff < 1e-2, n.hausdorff ? fmt(*n.hausdorff) : "none");
    const bool window = p.config().decay_r_min == 20.0 && p.config().decay_r_max == 100.0;
    t.add("decay on [20,100]", window && p.decay && p.decay->defined && std::abs(p.decay->exponent + 1.0) <= 0.1,
          p.decay ? fmt(p.decay->exponent) : "none");
    const double s = seconds_since(t0);
    t.add("runtime", s < 120.0, fmt(s) + " s");
    return t.done();
}

Outcome criterion4() {
    const auto t0 = std::chrono::steady_clock::now();
    pipeline::Pipeline p(cfg("torus3.ini"));
    p.helmholtz(true);
    Tally t;
    const auto& n = p.nodal_w.at(0);
    const auto* c = single(n.topology);
    t.add("components in shell", c != nullptr, std::to_string(n.topology.count_in_shell));
    t.add("genus", c && c->closed && c->genus == 1, c ? std::to_string(c->genus) : "-");
    t.add("grad_min", c && c->grad_min > 0.0, c ? fmt(c->grad_min) : "-");
    const bool probe = n.stability && n.stability->certified && n.stability->probe_same;
    t.add("sub-margin probe", probe,
          n.stability ? "c1 " + fmt(n.stability->probe_c1) + " < margin " + fmt(n.stability->margin) : "none");
    const double s = seconds_since(t0);
    t.add("runtime", s < 600.0, fmt(s) + " s");
    return t.done();
}

Outcome criterion7() {
    const auto t0 = std::chrono::steady_clock::now();
    pipeline::Pipeline p(cfg("ball4_radial.ini"));
    p.promote(true);
    Tally t;
    const auto& b = *p.bundle;
    double qmax = 0.0, nmax = 0.0;
    for (double q : b.contraction_ratios) qmax = std::max(qmax, q);
    for (double v : b.norm_history) nmax = std::max(nmax, v);
    t.add("eps", true, fmt(b.eps));
    t.add("max contraction", qmax < 0.5, fmt(qmax));
    t.add("norm cap", nmax < b.eps, fmt(nmax));
    const auto& res = p.report["promotion"]["residual"];
    const double floor = res["fd_floor"].get<double>() + res["quadrature_floor"].get<double>();
    t.add("residual", res["sup"].get<double>() < 10.0 * floor,
          fmt(res["sup"].get<double>()) + " vs floor " + fmt(floor));
    const std::vector<double> grid{0.2, 0.1, 0.05, 0.025};
    const auto& slope = p.report["promotion"]["closeness"]["slope"];
    t.add("closeness slope", p.config().eps_grid == grid && slope.is_number() && std::abs(slope.get<double>() - 2.0) <= 0.3,
          slope.is_number() ? fmt(slope.get<double>()) : "none");
    const auto& dist = p.report["promotion"]["nodal"][0]["distance_to_w"];
    t.add("level set distance", dist.is_number() && dist.get<double>() < 1e-2,
          dist.is_number() ? fmt(dist.get<double>()) : "none");
    const double s = seconds_since(t0);
    t.add("runtime", s < 600.0, fmt(s) + " s");
    return t.done();
}

Outcome criterion8() {
    const auto t0 = std::chrono::steady_clock::now();
    pipeline::Pipeline p(cfg("ball4_zonal.ini"));
    p.promote(true);
    Tally t;
    const auto& b = *p.bundle;
    t.add("zonal", b.zonal, b.zonal ? "yes" : "no");
    t.add("converged", b.fixed_point_defect <= 10.0 * p.config().picard.tol,
          std::to_string(b.iterations) + " it, defect " + fmt(b.fixed_point_defect));
    const auto& n = p.nodal_u.at(0);
    const auto* c = single(n.topology);
    const bool meridian = std::holds_alternative<nodal::ZonalCurves>(n.mesh.geometry);
    t.add("single closed loop", meridian && c && c->closed, std::to_string(n.topology.count_in_shell) + " in shell");
    const auto& od = p.report["promotion"]["oddness_defect"];
    t.add("oddness", od.is_number() && od.get<double>() <= 1e-10, od.is_number() ? fmt(od.get<double>()) : "none");
    const double s = seconds_since(t0);
    t.add("runtime", s < 1200.0, fmt(s) + " s");
    return t.done();
}

Outcome criterion9() {
    const auto t0 = std::chrono::steady_clock::now();
    pipeline::Pipeline p(cfg("two_balls3.ini"));
    p.helmholtz(true);
    Tally t;
    t.add("placement certified", p.placement && p.placement->certified, p.placement && p.placement->certified ? "yes" : "no");
    t.add("targets", p.nodal_w.size() == 2, std::to_string(p.nodal_w.size()));
    for (const auto& n : p.nodal_w) {
        const auto* c = single(n.topology);
        t.add(n.topology.label + " genus", c && c->closed && c->genus == 0, c ? std::to_string(c->genus) : "-");
        t.add(n.topology.label + " hausdorff", n.hausdorff && *n.hausdorff < 1e-2,
              n.hausdorff ? fmt(*n.hausdorff) : "none");
    }
    const fs::path out = fs::temp_directory_path() / "actopo_acceptance_overlap";
    std::string msg;
    const int code = pipeline::run_subcommand("helmholtz", cfg("overlap3.ini"), out, &msg);
    t.add("overlap refused", code == 2, "exit " + std::to_string(code));
    const double s = seconds_since(t0);
    t.add("runtime", s < 300.0, fmt(s) + " s");
    return t.done();
}

Outcome criterion10() {
    const fs::path base = fs::temp_directory_path() / "actopo_acceptance_det";
    std::vector<std::string> reports, solutions;
    for (const char* run : {"a", "b"}) {
        fs::remove_all(base / run);
        std::string msg;
        pipeline::run_subcommand("verify", cfg("ball3.ini"), base / run, &msg);
        reports.push_back(slurp(base / run / "verify.json"));
        solutions.push_back(slurp(base / run / "solution.json"));
    }
    Tally t;
    t.add("report bytes", !reports[0].empty() && reports[0] == reports[1], std::to_string(reports[0].size()));
    t.add("solution bytes", !solutions[0].empty() && solutions[0] == solutions[1], std::to_string(solutions[0].size()));
    return t.done();
}

std::set<int> parse_list(const std::string& s) {
    std::set<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.insert(std::stoi(item));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only, expect_fail;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if ((a == "--only" || a == "--expect-fail") && i + 1 < argc) {
            (a == "--only" ? only : expect_fail) = parse_list(argv[++i]);
        } else {
            std::cerr << "usage: acceptance [--only N,..] [--expect-fail N,..]\n";
            return 2;
        }
    }
    const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4,
                                                         criterion5, criterion6, criterion7, criterion8,
                                                         criterion9, criterion10};
    std::set<int> failed;
    for (int k = 1; k <= static_cast<int>(criteria.size()); ++k) {
        if (!only.empty() && !only.count(k)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k - 1]();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) failed.insert(k);
        std::cout << "criterion " << k << ": " << (o.pass ? "PASS" : "FAIL") << " (" << fmt(seconds_since(t0))
                  << " s) " << o.detail << std::endl;
    }
    std::set<int> expected;
    for (int k : expect_fail) {
        if (only.empty() || only.count(k)) expected.insert(k);
    }
    if (failed != expected) {
        std::cout << "unexpected outcome: failing set differs from the expected one" << std::endl;
        return 1;
    }
    return 0;
}
