#include "actopo/pipeline.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

#include <Eigen/Core>
#include <boost/version.hpp>

#include "actopo/error.hpp"
#include "actopo/random.hpp"

namespace actopo::pipeline {

namespace {

Json surface_json(const domains::SurfaceSpec& s) {
    if (const auto* b = std::get_if<domains::Ball>(&s.shape)) {
        return Json{{"type", "ball"}, {"center", report::vector_json(b->center)}, {"radius", b->radius}};
    }
    const auto& t = std::get<domains::SolidTorus>(s.shape);
    return Json{{"type", "torus"},
                {"center", report::vector_json(t.center)},
                {"major_radius", t.major_radius},
                {"minor_radius", t.minor_radius}};
}

Json doubles(const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(x);
    return a;
}

// Maps a stage to the config section whose values it consumes.
std::string section_of(const std::string& stage) {
    if (stage == "shell_fit") return "fit";
    if (stage == "promote" || stage == "residual" || stage == "closeness" || stage == "oddness") return "allencahn";
    if (stage == "nodal_w" || stage == "nodal_u") return "nodal";
    if (stage == "placement") return "surface";
    return stage;
}

const char* region_kind(const nodal::Region& r) {
    if (std::holds_alternative<nodal::RadialInterval>(r)) return "ray";
    if (std::holds_alternative<nodal::MeridianBox>(r)) return "meridian";
    return "box";
}

std::string safe_label(const std::string& s) {
    std::string out;
    for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out;
}

}  // namespace

Pipeline::Pipeline(config::PipelineConfig cfg) : cfg_(std::move(cfg)) {
    char eigen_version[32];
    std::snprintf(eigen_version, sizeof eigen_version, "%d.%d.%d", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION,
                  EIGEN_MINOR_VERSION);
    report = Json{{"tool", "actopo"},
                  {"versions",
                   {{"actopo", kVersion},
                    {"eigen", eigen_version},
                    {"boost", BOOST_LIB_VERSION},
                    {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}}};
    Json surfaces = Json::array();
    for (const auto& s : cfg_.surfaces) {
        Json j = surface_json(s.spec);
        j["label"] = s.spec.label;
        j["placement"] = report::vector_json(s.placement);
        surfaces.push_back(j);
    }
    report["config"] = Json{{"file", std::filesystem::path(cfg_.source).filename().string()},
                            {"dimension", cfg_.dimension},
                            {"seed", cfg_.seed},
                            {"surfaces", surfaces}};
}

std::string Pipeline::anchor() const {
    const auto it = cfg_.section_lines.find(section_of(current_stage));
    const int line = it != cfg_.section_lines.end() ? it->second : cfg_.dimension_line;
    return cfg_.at(line);
}

bool Pipeline::pass() const {
    for (const auto& c : checks) {
        if (!c["pass"].get<bool>()) return false;
    }
    return true;
}

void Pipeline::check(const std::string& name, bool ok, Json detail) {
    Json c{{"name", name}, {"pass", ok}};
    for (const auto& [k, v] : detail.items()) c[k] = v;
    checks.push_back(c);
}

template <class F>
void Pipeline::timed(const std::string& stage, F&& f) {
    current_stage = stage;
    const auto t0 = std::chrono::steady_clock::now();
    const auto record = [&] {
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        timings[stage] = timings.contains(stage) ? timings[stage].get<double>() + dt : dt;
    };
    try {
        f();
    } catch (...) {
        record();
        throw;
    }
    record();
}

// ---------------------------------------------------------------- eigen

void Pipeline::eigen() {
    if (eigen_done_) return;
    if (cfg_.surfaces.empty()) {
        throw ValidationError(cfg_.at(cfg_.dimension_line) + "no [surface] sections: at least one surface is required");
    }
    Json arr = Json::array();
    timed("eigen", [&] {
        for (const auto& s : cfg_.surfaces) {
            eigenpairs.push_back(domains::solve_eigen(s.spec, cfg_.torus));
            const auto& e = eigenpairs.back();
            scaled.push_back(domains::rescale_to_unit_eigenvalue(s.spec, e, s.placement));
            const auto& sd = scaled.back();
            Json geometry = surface_json(sd.scaled_spec);
            arr.push_back(Json{{"label", s.spec.label},
                               {"genus", s.spec.genus()},
                               {"lambda1", e.lambda1},
                               {"closed_form", e.closed_form()},
                               {"residual", e.residual},
                               {"iterations", e.iterations},
                               {"boundary_gradient_min", e.boundary_gradient_min},
                               {"refinement_lambdas", doubles(e.refinement_lambdas)},
                               {"scale", sd.scale},
                               {"scaled", geometry}});
            const auto* grid = std::get_if<domains::AxisymmetricGrid>(&e.eigenfunction);
            if (grid) {
                Eigen::MatrixXd pts(2, grid->n_s * grid->n_phi);
                std::vector<double> vals;
                for (int i = 0; i < grid->n_s; ++i) {
                    for (int j = 0; j < grid->n_phi; ++j) {
                        pts.col(i * grid->n_phi + j) = grid->meridian_point(i, j);
                        vals.push_back(grid->values(i, j));
                    }
                }
                artifacts.emplace_back("eigen_" + safe_label(s.spec.label) + ".csv",
                                       report::csv_samples(pts, {"psi"}, {vals}));
            }
        }
    });
    report["eigen"] = arr;

    timed("placement", [&] {
        placement = domains::check_unlinked_placement(scaled, cfg_.band);
        Json balls = Json::array();
        for (const auto& b : placement->bounding_balls) {
            balls.push_back(Json{{"center", report::vector_json(b.center)}, {"radius", b.radius}});
        }
        Json pj{{"certified", placement->certified},
                {"pad", cfg_.band},
                {"pairwise_separation", placement->pairwise_separation},
                {"bounding_balls", balls}};
        if (placement->offending_pair) {
            pj["offending_pair"] = Json::array({cfg_.surfaces[placement->offending_pair->first].spec.label,
                                                cfg_.surfaces[placement->offending_pair->second].spec.label});
        }
        report["placement"] = pj;
    });
    eigen_done_ = true;
}

// ---------------------------------------------------------------- helmholtz

nodal::Region Pipeline::region_for(const domains::SurfaceSpec& target) const {
    if (cfg_.dimension == 3) return nodal::box_around(target, cfg_.nodal_pad);
    const Eigen::VectorXd& axis = w->axis();
    const auto& b = std::get<domains::Ball>(target.shape);
    const double z = b.center.dot(axis);
    if ((b.center - z * axis).norm() <= 1e-9 * (1.0 + b.center.norm())) {
        return nodal::meridian_around(target, axis, cfg_.nodal_pad);
    }
    return nodal::box_around(target, cfg_.nodal_pad);
}

NodalResult Pipeline::nodal_for(const runge::Field& f, const domains::SurfaceSpec& target, bool full) const {
    NodalResult n;
    n.region = region_for(target);
    n.mesh = nodal::extract_zero_set(f, n.region, cfg_.nodal_resolution);
    n.topology = nodal::verify_component_topology(n.mesh, f, target, cfg_.nodal_shell);
    if (full) {
        n.hausdorff = nodal::hausdorff_distance(nodal::restrict_to_shell(n.mesh, target, cfg_.nodal_shell), target,
                                                cfg_.hausdorff_samples);
        if (n.topology.pass) {
            n.stability = nodal::verify_structural_stability(f, n.mesh, n.region, target, cfg_.nodal_shell,
                                                             cfg_.probe_fraction);
        }
    }
    return n;
}

Json Pipeline::nodal_json(const NodalResult& n) const {
    Json j{{"region", region_kind(n.region)}, {"resolution", n.mesh.resolution}, {"topology", report::to_json(n.topology)}};
    if (n.hausdorff) j["hausdorff"] = *n.hausdorff;
    if (n.stability) j["stability"] = report::to_json(*n.stability);
    return j;
}

void Pipeline::helmholtz(bool full) {
    if (helmholtz_done_) return;
    eigen();
    const int d = cfg_.dimension;
    if (!placement->certified) {
        const auto [a, b] = placement->offending_pair.value_or(std::pair<int, int>{0, 0});
        throw ValidationError(cfg_.at(cfg_.surfaces[b].line) + "placement refused: '" + cfg_.surfaces[a].spec.label +
                              "' and '" + cfg_.surfaces[b].spec.label +
                              "' are not certified unlinked (padded bounding balls intersect)");
    }
    check("placement_certified", true);

    Json ext_json = Json::array();
    timed("extension", [&] {
        for (std::size_t i = 0; i < scaled.size(); ++i) {
            const auto& sd = scaled[i];
            if (!sd.eigen.closed_form() && !cfg_.collar) {
                throw ValidationError(cfg_.at(cfg_.surfaces[i].line) + "surface '" + cfg_.surfaces[i].spec.label +
                                      "' needs [extension] collar");
            }
            extensions.push_back(domains::extend_eigenfunction(sd.eigen, sd, cfg_.collar.value_or(1.0), cfg_.extension));
            const auto& e = extensions.back();
            ext_json.push_back(Json{{"label", cfg_.surfaces[i].spec.label},
                                    {"exact", e.exact()},
                                    {"n_sources", e.sources ? static_cast<long>(e.sources->size()) : 0L},
                                    {"holdout_mismatch", e.holdout_mismatch},
                                    {"collocation_residual", e.collocation_residual},
                                    {"rank", e.rank}});
        }
    });
    report["extension"] = ext_json;

    region = runge::FitRegion{scaled, cfg_.band};
    const runge::Field psi = runge::eigenfunction_target(scaled, extensions);
    const specfun::Dimension dim(d);

    std::optional<PointSourceSum> w2, w3;
    timed("shell_fit", [&] {
        auto [s, rep] = runge::fit_shell_sources(psi, *region, cfg_.shell_offset, cfg_.fit);
        w2 = std::move(s);
        report["shell_fit"] = report::to_json(rep);
        check("shell_fit", rep.pass(), {{"sup_err_C1", rep.sup_err_C1}, {"tolerance", rep.tolerance}});
    });

    double circ = 0.0;
    for (const auto& sd : scaled) circ = std::max(circ, domains::circumradius(sd.scaled_spec, cfg_.band));
    big_r = cfg_.big_r.value_or(2.0 * circ);
    const double outer = cfg_.outer_radius.value_or(2.0 * big_r);
    timed("push", [&] {
        auto [s, rep] = runge::push_sources_outside(*w2, *region, big_r, outer, cfg_.fit);
        w3 = std::move(s);
        Json j = report::to_json(rep);
        j["big_r"] = big_r;
        j["outer_radius"] = outer;
        report["push"] = j;
        check("push", rep.pass(), {{"sup_err_C1", rep.sup_err_C1}, {"tolerance", rep.tolerance}});
    });

    const Eigen::MatrixXd hold = runge::holdout_points(*region, cfg_.fit.n_holdout, cfg_.seed);
    timed("expansion", [&] {
        auto [fb, rep, info] = runge::expand_fourier_bessel(runge::field_of(*w3), dim, big_r, cfg_.expansion, hold);
        w = std::move(fb);
        Json j = report::to_json(rep);
        j["l0"] = info.l0;
        j["tail_satisfied"] = info.tail_satisfied;
        j["tail"] = doubles(info.tail);
        j["radius_used"] = doubles(info.radius_used);
        report["expansion"] = j;
        check("expansion", rep.pass(), {{"sup_err_C1", rep.sup_err_C1}, {"tolerance", rep.tolerance}});
        check("expansion_tail_rule", info.tail_satisfied || cfg_.expansion.l0.has_value(), {{"l0", info.l0}});

        final_report = runge::compare(runge::field_of(*w), psi, hold, cfg_.verify_c1);
        Json fj = report::to_json(final_report);
        fj["chain_bound_C0"] = report["shell_fit"]["sup_err_C0"].get<double>() +
                               report["push"]["sup_err_C0"].get<double>() + rep.sup_err_C0;
        report["final"] = fj;
        check("final_C0", final_report.sup_err_C0 < cfg_.verify_c0,
              {{"value", final_report.sup_err_C0}, {"threshold", cfg_.verify_c0}});
        check("final_C1", final_report.sup_err_C1 < cfg_.verify_c1,
              {{"value", final_report.sup_err_C1}, {"threshold", cfg_.verify_c1}});
    });

    Json sol{{"dimension", d},          {"lmax", w->lmax()},  {"zonal", w->zonal()},
             {"axis", report::vector_json(w->axis())}, {"ball_radius", w->ball_radius()},
             {"coefficients", report::vector_json(w->coeffs())}};
    artifacts.emplace_back("solution.json", report::dump(sol));

    if (full) {
        timed("decay", [&] {
            std::vector<Eigen::VectorXd> rays{Eigen::VectorXd::Unit(d, 0)};
            if (cfg_.decay_rays > 1) rays.push_back(Eigen::VectorXd::Ones(d).normalized());
            rng::Engine g(cfg_.seed);
            while (static_cast<int>(rays.size()) < cfg_.decay_rays) rays.push_back(rng::unit_vector(d, g));
            decay = runge::verify_decay(runge::field_of(*w), rays, cfg_.decay_r_min, cfg_.decay_r_max, cfg_.decay_step);
            const double expected = -(d - 1) / 2.0;
            report["decay"] = Json{{"r_min", cfg_.decay_r_min},        {"r_max", cfg_.decay_r_max},
                                   {"exponent", decay->exponent},      {"per_ray", doubles(decay->per_ray)},
                                   {"defined", decay->defined},        {"expected", expected}};
            check("decay_exponent", decay->defined && std::abs(decay->exponent - expected) <= cfg_.verify_decay_tol,
                  {{"value", decay->exponent}, {"expected", expected}, {"tolerance", cfg_.verify_decay_tol}});
        });
    }

    timed("nodal_w", [&] {
        const runge::Field fw = runge::field_of(*w);
        Json arr = Json::array();
        for (std::size_t i = 0; i < scaled.size(); ++i) {
            const auto& target = scaled[i].scaled_spec;
            nodal_w.push_back(nodal_for(fw, target, full));
            const auto& n = nodal_w.back();
            Json j{{"label", target.label}};
            const Json nj = nodal_json(n);
            for (const auto& [k, v] : nj.items()) j[k] = v;
            arr.push_back(j);
            const std::string tag = "[" + target.label + "]";
            check("nodal_topology" + tag, n.topology.pass,
                  {{"target_genus", n.topology.target_genus}, {"count_in_shell", n.topology.count_in_shell}});
            if (full) {
                check("hausdorff" + tag, n.hausdorff && *n.hausdorff < cfg_.verify_hausdorff,
                      {{"value", n.hausdorff ? Json(*n.hausdorff) : Json()}, {"threshold", cfg_.verify_hausdorff}});
                check("stability" + tag, n.stability && n.stability->certified && n.stability->probe_same,
                      {{"grad_min", n.stability ? Json(n.stability->grad_min) : Json()}});
            }
        }
        report["nodal"] = arr;
    });
    helmholtz_done_ = true;
}

// ---------------------------------------------------------------- promote

void Pipeline::promote(bool full) {
    if (cfg_.dimension < 4) {
        throw ValidationError(cfg_.at(cfg_.dimension_line) +
                              "promote requires dimension >= 4: the cubic term G*(u^3) is bounded in the weighted "
                              "norm only when 3(d-1)/2 > d, and d = 3 is the excluded boundary case");
    }
    helmholtz(full);
    current_stage = "promote";
    Json pj;
    timed("promote", [&] {
        bundle.emplace(allencahn::picard_iterate(*w, cfg_.eps, cfg_.picard));
        const auto& b = *bundle;
        pj = Json{{"eps_requested", b.eps_requested},
                  {"eps", b.eps},
                  {"halvings", b.halvings},
                  {"zonal", b.zonal},
                  {"w_norm", b.w_norm},
                  {"delta", b.delta},
                  {"iterations", b.iterations},
                  {"diff_history", doubles(b.diff_history)},
                  {"norm_history", doubles(b.norm_history)},
                  {"contraction_ratios", doubles(b.contraction_ratios)},
                  {"closeness", b.closeness},
                  {"fixed_point_defect", b.fixed_point_defect},
                  {"tail_bound", b.tail_bound}};
        double qmax = 0.0, nmax = 0.0;
        for (double q : b.contraction_ratios) qmax = std::max(qmax, q);
        for (double n : b.norm_history) nmax = std::max(nmax, n);
        check("contraction", qmax < 0.5, {{"max_ratio", qmax}});
        check("norm_cap", nmax < b.eps, {{"max_norm", nmax}, {"eps", b.eps}});
        check("fixed_point", b.fixed_point_defect <= 10.0 * cfg_.picard.tol, {{"defect", b.fixed_point_defect}});
    });

    const runge::Field u = allencahn::evaluator(*bundle);
    timed("residual", [&] {
        // Half the points on a diagonal ray, half on the target surfaces.
        const int d = cfg_.dimension;
        const int n_ray = cfg_.residual_points / 2;
        const int per = std::max(1, (cfg_.residual_points - n_ray) / static_cast<int>(scaled.size()));
        const double r1 = std::min(40.0, 0.5 * cfg_.picard.conv.r_max);
        Eigen::MatrixXd pts(d, n_ray + per * static_cast<int>(scaled.size()));
        const Eigen::VectorXd dir = Eigen::VectorXd::Ones(d).normalized();
        for (int k = 0; k < n_ray; ++k) pts.col(k) = (0.25 + (r1 - 0.25) * k / std::max(1, n_ray - 1)) * dir;
        for (std::size_t i = 0; i < scaled.size(); ++i) {
            pts.middleCols(n_ray + per * static_cast<int>(i), per) =
                domains::offset_surface_points(scaled[i].scaled_spec, per, 0.0);
        }
        residual = allencahn::residual_check(u, pts, cfg_.residual_h);
        const double qf = allencahn::quadrature_floor(*bundle, pts, cfg_.residual_h, cfg_.picard);
        bundle->residual_sup = residual->sup;
        pj["residual"] = Json{{"points", pts.cols()},          {"h", doubles(residual->h)},
                              {"raw_sup", doubles(residual->raw_sup)}, {"sup", residual->sup},
                              {"fd_floor", residual->fd_floor}, {"quadrature_floor", qf},
                              {"observed_order", residual->observed_order}};
        const double bound = 10.0 * (residual->fd_floor + qf);
        check("residual", residual->sup < bound, {{"value", residual->sup}, {"threshold", bound}});
    });

    if (full && cfg_.eps_grid.size() >= 2) {
        timed("closeness", [&] {
            const auto cr = allencahn::closeness_report(*w, cfg_.eps_grid, cfg_.picard);
            Json rows = Json::array();
            for (const auto& r : cr.rows) {
                rows.push_back(Json{{"eps_requested", r.eps_requested},
                                    {"eps", r.eps},
                                    {"closeness", r.closeness},
                                    {"iterations", r.iterations}});
            }
            pj["closeness"] = Json{{"rows", rows}, {"slope", cr.slope ? Json(*cr.slope) : Json()}, {"monotone", cr.monotone}};
            check("closeness_slope", cr.slope && std::abs(*cr.slope - 2.0) <= cfg_.verify_slope_tol,
                  {{"value", cr.slope ? Json(*cr.slope) : Json()}, {"expected", 2.0}, {"tolerance", cfg_.verify_slope_tol}});
        });
    }
    if (full && cfg_.check_oddness) {
        timed("oddness", [&] {
            const auto bm = allencahn::picard_iterate(w->negated(), cfg_.eps, cfg_.picard);
            const double od = allencahn::oddness_defect(*bundle, bm);
            pj["oddness_defect"] = od;
            check("oddness", od <= 1e-10, {{"value", od}, {"threshold", 1e-10}});
        });
    }

    timed("nodal_u", [&] {
        Json arr = Json::array();
        for (std::size_t i = 0; i < scaled.size(); ++i) {
            const auto& target = scaled[i].scaled_spec;
            nodal_u.push_back(nodal_for(u, target, false));
            const auto& n = nodal_u.back();
            const auto dist = nodal::mesh_distance(nodal_w[i].mesh, n.mesh);
            Json j{{"label", target.label}};
            const Json nj = nodal_json(n);
            for (const auto& [k, v] : nj.items()) j[k] = v;
            j["distance_to_w"] = dist ? Json(*dist) : Json();
            arr.push_back(j);
            const std::string tag = "[" + target.label + "]";
            check("nodal_u_topology" + tag, n.topology.pass, {{"count_in_shell", n.topology.count_in_shell}});
            check("level_set_distance" + tag, dist && *dist < cfg_.verify_level_set,
                  {{"value", dist ? Json(*dist) : Json()}, {"threshold", cfg_.verify_level_set}});
        }
        pj["nodal"] = arr;
    });
    report["promotion"] = pj;

    // u and delta w along the axis and the diagonal.
    const int d = cfg_.dimension;
    const double r1 = std::min(100.0, cfg_.picard.conv.r_max);
    const int n = static_cast<int>(r1 / 0.25) + 1;
    Eigen::MatrixXd pts(d, 2 * n);
    std::vector<double> uv, wv;
    for (int k = 0; k < n; ++k) {
        pts.col(k) = (0.25 * k) * w->axis();
        pts.col(n + k) = (0.25 * k) * Eigen::VectorXd::Ones(d).normalized();
    }
    for (Eigen::Index k = 0; k < pts.cols(); ++k) {
        uv.push_back(u.value(pts.col(k)));
        wv.push_back(bundle->delta * w->value(pts.col(k)));
    }
    artifacts.emplace_back("u_samples.csv", report::csv_samples(pts, {"u", "delta_w"}, {uv, wv}));
}

// ---------------------------------------------------------------- export

void Pipeline::export_artifacts() {
    timed("export", [&] {
        const int d = cfg_.dimension;
        const int n = cfg_.slice_points;
        Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(d, n * n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                pts(cfg_.slice_axis_a, i * n + j) = -cfg_.slice_extent + 2.0 * cfg_.slice_extent * i / (n - 1);
                pts(cfg_.slice_axis_b, i * n + j) = -cfg_.slice_extent + 2.0 * cfg_.slice_extent * j / (n - 1);
            }
        }
        std::vector<std::string> names{"w"};
        std::vector<std::vector<double>> cols(1);
        for (Eigen::Index k = 0; k < pts.cols(); ++k) cols[0].push_back(w->value(pts.col(k)));
        if (bundle) {
            const runge::Field u = allencahn::evaluator(*bundle);
            names.push_back("u");
            cols.emplace_back();
            for (Eigen::Index k = 0; k < pts.cols(); ++k) cols[1].push_back(u.value(pts.col(k)));
        }
        artifacts.emplace_back("slice.csv", report::csv_samples(pts, names, cols));
        for (std::size_t i = 0; i < nodal_w.size(); ++i) {
            const std::string l = safe_label(scaled[i].scaled_spec.label);
            artifacts.emplace_back("zero_set_w_" + l + ".vtk", report::vtk_polydata(nodal_w[i].mesh, "zero set of w near " + l));
        }
        for (std::size_t i = 0; i < nodal_u.size(); ++i) {
            const std::string l = safe_label(scaled[i].scaled_spec.label);
            artifacts.emplace_back("zero_set_u_" + l + ".vtk", report::vtk_polydata(nodal_u[i].mesh, "zero set of u near " + l));
        }
        Json list = Json::array();
        for (const auto& a : artifacts) list.push_back(a.first);
        report["artifacts"] = list;
    });
}

// ---------------------------------------------------------------- driver

int run_subcommand(const std::string& name, config::PipelineConfig cfg, const std::filesystem::path& out,
                   std::string* message) {
    Pipeline p(std::move(cfg));
    p.report["subcommand"] = name;
    int code = 0;
    std::string msg;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (name == "eigen") {
            p.eigen();
        } else if (name == "helmholtz") {
            p.helmholtz(false);
        } else if (name == "promote") {
            p.promote(false);
        } else if (name == "verify") {
            if (p.config().dimension >= 4) p.promote(true);
            else p.helmholtz(true);
        } else if (name == "export") {
            if (p.config().dimension >= 4) p.promote(false);
            else p.helmholtz(false);
            p.export_artifacts();
        } else {
            throw ValidationError("unknown subcommand '" + name + "'");
        }
    } catch (const ValidationError& e) {
        code = 2;
        msg = e.what();
        // Messages from the modules carry no line; anchor them at the stage's section.
        if (msg.rfind(p.config().source + ":", 0) != 0) msg = p.anchor() + msg;
        p.report["failure"] = Json{{"kind", "validation_error"}, {"stage", p.current_stage}, {"message", msg}};
    } catch (const StageFailure& e) {
        code = 3;
        msg = "stage '" + p.current_stage + "' failed: " + e.what();
        p.report["failure"] = Json{{"kind", "stage_failure"},
                                   {"stage", p.current_stage},
                                   {"message", e.what()},
                                   {"best_residual", e.best_residual()}};
    } catch (const std::exception& e) {
        code = 3;
        msg = "stage '" + p.current_stage + "' failed: " + e.what();
        p.report["failure"] = Json{{"kind", "error"}, {"stage", p.current_stage}, {"message", e.what()}};
    }
    if (code == 0 && !p.pass()) {
        code = 3;
        for (const auto& c : p.checks) {
            if (!c["pass"].get<bool>()) {
                if (!msg.empty()) msg += "; ";
                msg += "check '" + c["name"].get<std::string>() + "' failed";
            }
        }
    }
    p.report["checks"] = p.checks;
    p.report["pass"] = code == 0;
    p.report["status"] = code == 0 ? "pass" : code == 2 ? "validation_error" : "fail";
    p.timings["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::filesystem::create_directories(out);
    report::write_file(out / (name + ".json"), report::dump(p.report));
    report::write_file(out / "timings.json", report::dump(Json{{"subcommand", name}, {"seconds", p.timings}}));
    for (const auto& [file, content] : p.artifacts) report::write_file(out / file, content);
    if (message) *message = msg;
    return code;
}

}  // namespace actopo::pipeline
