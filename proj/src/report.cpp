#include "actopo/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "actopo/error.hpp"

namespace actopo::report {

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

void indent(std::string& out, int level) { out.append(static_cast<std::size_t>(2 * level), ' '); }

void emit(const Json& j, std::string& out, int level) {
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (const auto& [k, v] : j.items()) {
                if (!first) out += ",\n";
                first = false;
                indent(out, level + 1);
                out += Json(k).dump();
                out += ": ";
                emit(v, out, level + 1);
            }
            out += "\n";
            indent(out, level);
            out += "}";
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            // Arrays of scalars stay on one line.
            bool flat = true;
            for (const auto& v : j) flat = flat && !v.is_structured();
            if (flat) {
                out += "[";
                for (std::size_t i = 0; i < j.size(); ++i) {
                    if (i) out += ", ";
                    emit(j[i], out, level);
                }
                out += "]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ",\n";
                indent(out, level + 1);
                emit(j[i], out, level + 1);
            }
            out += "\n";
            indent(out, level);
            out += "]";
            return;
        }
        case Json::value_t::number_float: {
            const double x = j.get<double>();
            out += std::isfinite(x) ? format_double(x) : "null";
            return;
        }
        default:
            out += j.dump();
    }
}

}  // namespace

std::string dump(const Json& j) {
    std::string out;
    emit(j, out, 0);
    out += "\n";
    return out;
}

Json to_json(const runge::ApproximationReport& r) {
    return Json{{"sup_err_C0", r.sup_err_C0}, {"sup_err_C1", r.sup_err_C1}, {"sample_count", r.sample_count},
                {"tolerance", r.tolerance},   {"n_sources", r.n_sources},   {"rank", r.rank},
                {"escalations", r.escalations}, {"pass", r.pass()}};
}

Json to_json(const nodal::Component& c) {
    return Json{{"vertices", c.vertices}, {"edges", c.edges}, {"faces", c.faces},       {"euler", c.euler},
                {"closed", c.closed},     {"genus", c.genus}, {"grad_min", c.grad_min}, {"max_distance", c.max_distance}};
}

Json to_json(const nodal::TopologyReport& t) {
    Json comps = Json::array();
    for (const auto& c : t.in_shell) comps.push_back(to_json(c));
    Json j{{"label", t.label},
           {"target_genus", t.target_genus},
           {"count_in_shell", t.count_in_shell},
           {"components", comps},
           {"grad_min", t.grad_min},
           {"pass", t.pass}};
    if (!t.failure.empty()) j["failure"] = t.failure;
    return j;
}

Json to_json(const nodal::StabilityReport& s) {
    Json j{{"grad_min", s.grad_min}, {"tube_half_width", s.tube_half_width}, {"margin", s.margin},
           {"floor", s.floor},       {"certified", s.certified},             {"probe_c1", s.probe_c1},
           {"probe_same", s.probe_same}};
    if (!s.note.empty()) j["note"] = s.note;
    return j;
}

Json vector_json(const Eigen::VectorXd& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

std::string vtk_polydata(const nodal::LevelSetMesh& mesh, const std::string& title) {
    std::string out = "# vtk DataFile Version 3.0\n" + title + "\nASCII\nDATASET POLYDATA\n";
    const auto point = [&](double x, double y, double z) {
        out += format_double(x) + " " + format_double(y) + " " + format_double(z) + "\n";
    };
    if (const auto* s = std::get_if<nodal::Surface3D>(&mesh.geometry)) {
        out += "POINTS " + std::to_string(s->local.cols()) + " double\n";
        for (Eigen::Index k = 0; k < s->local.cols(); ++k) point(s->local(0, k), s->local(1, k), s->local(2, k));
        out += "POLYGONS " + std::to_string(s->triangles.size()) + " " + std::to_string(4 * s->triangles.size()) + "\n";
        for (const auto& t : s->triangles) {
            out += "3 " + std::to_string(t(0)) + " " + std::to_string(t(1)) + " " + std::to_string(t(2)) + "\n";
        }
    } else if (const auto* z = std::get_if<nodal::ZonalCurves>(&mesh.geometry)) {
        std::size_t n = 0, size = 0;
        for (const auto& c : z->curves) {
            n += c.points.size();
            size += 1 + c.points.size() + (c.closed ? 1 : 0);
        }
        out += "POINTS " + std::to_string(n) + " double\n";
        for (const auto& c : z->curves) {
            for (const auto& p : c.points) point(p(0), p(1), 0.0);
        }
        out += "LINES " + std::to_string(z->curves.size()) + " " + std::to_string(size) + "\n";
        std::size_t base = 0;
        for (const auto& c : z->curves) {
            out += std::to_string(c.points.size() + (c.closed ? 1 : 0));
            for (std::size_t i = 0; i < c.points.size(); ++i) out += " " + std::to_string(base + i);
            if (c.closed) out += " " + std::to_string(base);
            out += "\n";
            base += c.points.size();
        }
    } else {
        out += "POINTS 0 double\n";
    }
    return out;
}

std::string csv_samples(const Eigen::MatrixXd& points, const std::vector<std::string>& names,
                        const std::vector<std::vector<double>>& columns) {
    if (names.size() != columns.size()) throw ValidationError("csv_samples: one name per column");
    for (const auto& c : columns) {
        if (static_cast<Eigen::Index>(c.size()) != points.cols()) throw ValidationError("csv_samples: column length");
    }
    std::string out;
    for (Eigen::Index i = 0; i < points.rows(); ++i) out += (i ? ",x" : "x") + std::to_string(i + 1);
    for (const auto& n : names) out += "," + n;
    out += "\n";
    for (Eigen::Index k = 0; k < points.cols(); ++k) {
        for (Eigen::Index i = 0; i < points.rows(); ++i) {
            if (i) out += ",";
            out += format_double(points(i, k));
        }
        for (const auto& c : columns) out += "," + format_double(c[k]);
        out += "\n";
    }
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace actopo::report
