#pragma once

// Pipeline configuration: a line-oriented key = value file with one
// [section] per stage. [surface] may repeat, one per prescribed component.
// Every error message starts with "<file>:<line>:".

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "actopo/allencahn.hpp"
#include "actopo/domains.hpp"
#include "actopo/runge.hpp"

namespace actopo::config {

struct Entry {
    std::string value;
    int line = 0;
};

struct Section {
    std::string name;
    int line = 0;
    std::map<std::string, Entry> entries;
};

/// Raw syntax tree. Throws ValidationError on malformed lines and
/// duplicate keys.
struct ConfigFile {
    std::string source;  // shown in messages
    std::vector<Section> sections;

    static ConfigFile parse(const std::string& text, const std::string& source);
    static ConfigFile load(const std::string& path);
};

struct SurfaceEntry {
    domains::SurfaceSpec spec;
    Eigen::VectorXd placement;  // center after rescaling
    int line = 0;
};

struct PipelineConfig {
    std::string source;
    std::map<std::string, int> section_lines;  // first header line per section
    int dimension = 3;
    int dimension_line = 0;
    std::uint64_t seed = 1;
    std::vector<SurfaceEntry> surfaces;

    domains::TorusGrid torus;

    std::optional<double> collar;
    int collar_line = 0;
    domains::ExtensionFit extension;

    double band = 0.1;
    double shell_offset = 1.0;
    runge::FitParams fit;
    std::optional<double> big_r;
    std::optional<double> outer_radius;
    runge::ExpansionParams expansion;

    double decay_r_min = 20.0, decay_r_max = 100.0, decay_step = 0.02;
    int decay_rays = 4;

    double nodal_resolution = 0.05;
    double nodal_pad = 0.5;
    double nodal_shell = 0.25;
    double probe_fraction = 0.5;
    int hausdorff_samples = 4000;

    double eps = 0.1;
    std::vector<double> eps_grid{0.2, 0.1, 0.05, 0.025};
    allencahn::PicardParams picard;
    double residual_h = 1e-2;
    int residual_points = 60;
    bool check_oddness = true;

    double verify_c0 = 1e-3, verify_c1 = 1e-2, verify_hausdorff = 1e-2, verify_decay_tol = 0.1;
    double verify_slope_tol = 0.3, verify_level_set = 1e-2;

    int slice_axis_a = 0, slice_axis_b = 1;
    double slice_extent = 10.0;
    int slice_points = 101;

    /// Same seed in every randomized stage.
    void set_seed(std::uint64_t s);
    /// "<source>:<line>: " prefix for stage-level errors.
    std::string at(int line) const;
};

/// Typed reading and validation of every section. Unknown sections and
/// keys are errors.
PipelineConfig build(const ConfigFile& file);
PipelineConfig load(const std::string& path);

}  // namespace actopo::config
