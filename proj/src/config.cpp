#include "actopo/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "actopo/error.hpp"

namespace actopo::config {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Drop a trailing comment introduced by '#' or ';'.
std::string strip_comment(const std::string& s) {
    const auto p = s.find_first_of("#;");
    return p == std::string::npos ? s : s.substr(0, p);
}

const std::set<std::string> kRepeatable{"surface"};

// Typed access to one section; remembers which keys were read.
class Reader {
public:
    Reader(const Section& sec, const std::string& source) : sec_(sec), source_(source) {}
    bool has(const std::string& key) const { return sec_.entries.count(key) > 0; }

    int line_of(const std::string& key) const {
        const auto it = sec_.entries.find(key);
        return it == sec_.entries.end() ? sec_.line : it->second.line;
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw ValidationError(source_ + ":" + std::to_string(line_of(key)) + ": [" + sec_.name + "] " + key +
                              ": " + what);
    }

    std::optional<std::string> text(const std::string& key) {
        used_.insert(key);
        const auto it = sec_.entries.find(key);
        if (it == sec_.entries.end()) return std::nullopt;
        return it->second.value;
    }

    std::vector<double> numbers(const std::string& key) {
        const auto t = text(key);
        std::vector<double> out;
        if (!t) return out;
        std::string s = *t;
        std::replace(s.begin(), s.end(), ',', ' ');
        std::istringstream in(s);
        std::string tok;
        while (in >> tok) out.push_back(parse_double(key, tok));
        if (out.empty()) fail(key, "expected a list of numbers");
        return out;
    }

    void real(const std::string& key, double& out, bool positive = true) {
        if (const auto t = text(key)) {
            out = parse_double(key, trim(*t));
            if (positive && !(out > 0.0)) fail(key, "must be > 0, got " + trim(*t));
        }
    }

    void real(const std::string& key, std::optional<double>& out) {
        if (has(key)) {
            double v = 0.0;
            real(key, v);
            out = v;
        } else {
            used_.insert(key);
        }
    }

    void integer(const std::string& key, int& out, int min_value = 1) {
        if (const auto t = text(key)) {
            const std::string s = trim(*t);
            char* end = nullptr;
            errno = 0;
            const long v = std::strtol(s.c_str(), &end, 10);
            if (s.empty() || *end != '\0' || errno == ERANGE || v > 1000000000L) fail(key, "expected an integer, got '" + s + "'");
            if (v < min_value) fail(key, "must be >= " + std::to_string(min_value) + ", got " + s);
            out = static_cast<int>(v);
        }
    }

    void flag(const std::string& key, bool& out) {
        if (const auto t = text(key)) {
            const std::string s = trim(*t);
            if (s == "true" || s == "yes" || s == "1") out = true;
            else if (s == "false" || s == "no" || s == "0") out = false;
            else fail(key, "expected true or false, got '" + s + "'");
        }
    }

    void finish() const {
        for (const auto& [k, e] : sec_.entries) {
            if (!used_.count(k)) {
                throw ValidationError(source_ + ":" + std::to_string(e.line) + ": unknown key '" + k + "' in [" +
                                      sec_.name + "]");
            }
        }
    }

private:
    double parse_double(const std::string& key, const std::string& s) const {
        char* end = nullptr;
        errno = 0;
        const double v = std::strtod(s.c_str(), &end);
        if (s.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
            fail(key, "expected a finite number, got '" + s + "'");
        }
        return v;
    }

    const Section& sec_;
    const std::string& source_;
    std::set<std::string> used_;
};

SurfaceEntry read_surface(Reader& r, const Section& sec, int d, int index, const std::string& source) {
    SurfaceEntry out;
    out.line = sec.line;
    const std::string label = r.text("label").value_or("surface" + std::to_string(index));
    const auto type = r.text("type");
    if (!type) throw ValidationError(source + ":" + std::to_string(sec.line) + ": [surface] missing key 'type'");
    const std::string t = trim(*type);
    std::vector<double> c = r.numbers("center");
    if (c.empty()) c.assign(d, 0.0);
    if (static_cast<int>(c.size()) != d) {
        r.fail("center", "expected " + std::to_string(d) + " coordinates, got " + std::to_string(c.size()));
    }
    const Eigen::VectorXd center = Eigen::Map<const Eigen::VectorXd>(c.data(), d);
    if (t == "ball") {
        if (!r.has("radius")) throw ValidationError(source + ":" + std::to_string(sec.line) + ": [surface] ball needs 'radius'");
        double radius = 0.0;
        r.real("radius", radius);
        out.spec = domains::SurfaceSpec{domains::Ball{center, radius}, label};
    } else if (t == "torus") {
        if (d != 3) r.fail("type", "tori are supported in dimension 3 only");
        if (!r.has("major_radius") || !r.has("minor_radius")) {
            throw ValidationError(source + ":" + std::to_string(sec.line) +
                                  ": [surface] torus needs 'major_radius' and 'minor_radius'");
        }
        double big = 0.0, small = 0.0;
        r.real("major_radius", big);
        r.real("minor_radius", small);
        out.spec = domains::SurfaceSpec{domains::SolidTorus{Eigen::Vector3d(center), big, small}, label};
    } else {
        r.fail("type", "expected ball or torus, got '" + t + "'");
    }
    try {
        domains::validate(out.spec);
    } catch (const ValidationError& e) {
        throw ValidationError(source + ":" + std::to_string(sec.line) + ": " + e.what());
    }
    std::vector<double> p = r.numbers("placement");
    if (p.empty()) {
        out.placement = center;
    } else {
        if (static_cast<int>(p.size()) != d) {
            r.fail("placement", "expected " + std::to_string(d) + " coordinates, got " + std::to_string(p.size()));
        }
        out.placement = Eigen::Map<const Eigen::VectorXd>(p.data(), d);
    }
    return out;
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text, const std::string& source) {
    ConfigFile f;
    f.source = source;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    std::set<std::string> seen;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = trim(strip_comment(raw));
        if (s.empty()) continue;
        const std::string at = source + ":" + std::to_string(line) + ": ";
        if (s.front() == '[') {
            if (s.back() != ']') throw ValidationError(at + "unterminated section header");
            const std::string name = trim(s.substr(1, s.size() - 2));
            if (name.empty()) throw ValidationError(at + "empty section name");
            if (seen.count(name) && !kRepeatable.count(name)) {
                throw ValidationError(at + "section [" + name + "] appears twice");
            }
            seen.insert(name);
            f.sections.push_back(Section{name, line, {}});
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ValidationError(at + "expected 'key = value'");
        if (f.sections.empty()) throw ValidationError(at + "key outside of any section");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty()) throw ValidationError(at + "empty key");
        if (value.empty()) throw ValidationError(at + "empty value for '" + key + "'");
        auto& sec = f.sections.back();
        if (sec.entries.count(key)) {
            throw ValidationError(at + "duplicate key '" + key + "' (first on line " +
                                  std::to_string(sec.entries[key].line) + ")");
        }
        sec.entries[key] = Entry{value, line};
    }
    return f;
}

ConfigFile ConfigFile::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError(path + ":0: cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

void PipelineConfig::set_seed(std::uint64_t s) {
    seed = s;
    fit.seed = s;
    extension.seed = s;
}

std::string PipelineConfig::at(int line) const { return source + ":" + std::to_string(line) + ": "; }

PipelineConfig build(const ConfigFile& file) {
    PipelineConfig c;
    c.source = file.source;
    const Section* run = nullptr;
    for (const auto& s : file.sections) {
        if (s.name == "run") run = &s;
    }
    if (!run) throw ValidationError(file.source + ":1: missing [run] section");
    {
        Reader r(*run, file.source);
        if (!r.has("dimension")) throw ValidationError(file.source + ":" + std::to_string(run->line) + ": [run] missing key 'dimension'");
        r.integer("dimension", c.dimension, 3);
        c.dimension_line = r.line_of("dimension");
        double seed = 1.0;
        if (r.has("seed")) {
            int si = 0;
            r.integer("seed", si, 0);
            seed = si;
        }
        c.set_seed(static_cast<std::uint64_t>(seed));
        r.finish();
    }

    using Handler = std::function<void(Reader&)>;
    const std::map<std::string, Handler> handlers{
        {"run", [](Reader&) {}},
        {"eigen",
         [&](Reader& r) {
             r.integer("torus_n_s", c.torus.n_s, 4);
             r.integer("torus_n_phi", c.torus.n_phi, 8);
             r.flag("richardson", c.torus.richardson);
             r.real("tol", c.torus.tol);
             r.integer("max_iter", c.torus.max_iter);
         }},
        {"extension",
         [&](Reader& r) {
             r.real("collar", c.collar);
             c.collar_line = r.line_of("collar");
             r.integer("n_sources", c.extension.n_sources);
             r.integer("n_colloc", c.extension.n_colloc);
             r.integer("n_boundary", c.extension.n_boundary);
             r.integer("n_holdout", c.extension.n_holdout);
             r.real("svd_tol", c.extension.svd_tol);
             r.real("tolerance", c.extension.tolerance);
             r.real("gap", c.extension.gap);
         }},
        {"fit",
         [&](Reader& r) {
             r.real("band", c.band);
             r.real("shell_offset", c.shell_offset);
             r.integer("n_sources", c.fit.n_sources);
             r.integer("n_colloc", c.fit.n_colloc);
             r.real("svd_tol", c.fit.svd_tol);
             r.real("tolerance", c.fit.tolerance);
             r.integer("max_sources", c.fit.max_sources);
             r.integer("n_holdout", c.fit.n_holdout);
             if (c.fit.n_colloc < 2 * c.fit.n_sources) r.fail("n_colloc", "must be at least 2 n_sources");
         }},
        {"push",
         [&](Reader& r) {
             r.real("big_r", c.big_r);
             r.real("outer_radius", c.outer_radius);
             if (c.big_r && c.outer_radius && *c.outer_radius <= *c.big_r) r.fail("outer_radius", "must exceed big_r");
         }},
        {"expansion",
         [&](Reader& r) {
             r.real("tolerance", c.expansion.tolerance);
             r.integer("lmax_cap", c.expansion.lmax_cap, 0);
             if (r.has("l0")) {
                 int l0 = 0;
                 r.integer("l0", l0, 0);
                 c.expansion.l0 = l0;
             }
             r.real("r_a", c.expansion.r_a);
             r.real("r_b", c.expansion.r_b);
             r.integer("polar_nodes", c.expansion.polar_nodes, 0);
             r.integer("azimuth_nodes", c.expansion.azimuth_nodes, 0);
             r.real("near_zero", c.expansion.near_zero);
         }},
        {"decay",
         [&](Reader& r) {
             r.real("r_min", c.decay_r_min);
             r.real("r_max", c.decay_r_max);
             r.integer("rays", c.decay_rays);
             r.real("step", c.decay_step);
             if (c.decay_r_max <= c.decay_r_min) r.fail("r_max", "must exceed r_min");
         }},
        {"nodal",
         [&](Reader& r) {
             r.real("resolution", c.nodal_resolution);
             r.real("pad", c.nodal_pad);
             r.real("shell", c.nodal_shell);
             r.real("probe_fraction", c.probe_fraction);
             r.integer("hausdorff_samples", c.hausdorff_samples);
         }},
        {"allencahn",
         [&](Reader& r) {
             r.real("eps", c.eps);
             if (r.has("eps_grid")) {
                 c.eps_grid = r.numbers("eps_grid");
                 for (double e : c.eps_grid) {
                     if (!(e > 0.0)) r.fail("eps_grid", "entries must be > 0");
                 }
             }
             r.real("tol", c.picard.tol);
             r.integer("max_iter", c.picard.max_iter);
             r.integer("max_halvings", c.picard.max_halvings, 0);
             if (const auto s = r.text("symmetry")) {
                 if (*s == "automatic") c.picard.symmetry = allencahn::Symmetry::automatic;
                 else if (*s == "radial") c.picard.symmetry = allencahn::Symmetry::radial;
                 else if (*s == "zonal") c.picard.symmetry = allencahn::Symmetry::zonal;
                 else r.fail("symmetry", "expected automatic, radial or zonal, got '" + *s + "'");
             }
             r.integer("polar_nodes", c.picard.polar_nodes, 0);
             r.real("residual_h", c.residual_h);
             r.integer("residual_points", c.residual_points);
             r.flag("oddness", c.check_oddness);
         }},
        {"weighted",
         [&](Reader& r) {
             r.real("r_max", c.picard.conv.r_max);
             r.real("panel", c.picard.conv.panel);
             r.integer("order", c.picard.conv.order, 2);
             r.integer("graded", c.picard.conv.graded, 0);
         }},
        {"verify",
         [&](Reader& r) {
             r.real("c0", c.verify_c0);
             r.real("c1", c.verify_c1);
             r.real("hausdorff", c.verify_hausdorff);
             r.real("decay_tol", c.verify_decay_tol);
             r.real("slope_tol", c.verify_slope_tol);
             r.real("level_set", c.verify_level_set);
         }},
        {"export",
         [&](Reader& r) {
             if (r.has("slice_axes")) {
                 const auto ax = r.numbers("slice_axes");
                 if (ax.size() != 2) r.fail("slice_axes", "expected two axis indices");
                 for (double a : ax) {
                     if (a != std::floor(a) || a < 0 || a >= c.dimension) {
                         r.fail("slice_axes", "indices must be integers in [0, " + std::to_string(c.dimension - 1) + "]");
                     }
                 }
                 if (ax[0] == ax[1]) r.fail("slice_axes", "axes must differ");
                 c.slice_axis_a = static_cast<int>(ax[0]);
                 c.slice_axis_b = static_cast<int>(ax[1]);
             }
             r.real("slice_extent", c.slice_extent);
             r.integer("slice_points", c.slice_points, 2);
         }},
    };

    int index = 0;
    for (const auto& s : file.sections) {
        c.section_lines.emplace(s.name, s.line);
        Reader r(s, file.source);
        if (s.name == "surface") {
            c.surfaces.push_back(read_surface(r, s, c.dimension, index++, file.source));
        } else if (const auto it = handlers.find(s.name); it != handlers.end()) {
            if (s.name == "run") continue;
            it->second(r);
        } else {
            throw ValidationError(file.source + ":" + std::to_string(s.line) + ": unknown section [" + s.name + "]");
        }
        r.finish();
    }
    std::set<std::string> labels;
    for (const auto& s : c.surfaces) {
        if (!labels.insert(s.spec.label).second) {
            throw ValidationError(c.at(s.line) + "duplicate surface label '" + s.spec.label + "'");
        }
    }
    return c;
}

PipelineConfig load(const std::string& path) { return build(ConfigFile::load(path)); }

}  // namespace actopo::config
