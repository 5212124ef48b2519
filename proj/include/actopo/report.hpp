#pragma once

// Serialization of reports and artifacts: JSON with 17 significant digits,
// legacy ASCII VTK polydata for zero sets, CSV for field samples.

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "actopo/nodal.hpp"
#include "actopo/runge.hpp"

namespace actopo::report {

using Json = nlohmann::ordered_json;

/// "%.17g"; NaN and infinities are not valid JSON numbers and become null
/// in dump().
std::string format_double(double x);

/// Indented JSON with every floating-point value at 17 significant digits.
std::string dump(const Json& j);

Json to_json(const runge::ApproximationReport& r);
Json to_json(const nodal::Component& c);
Json to_json(const nodal::TopologyReport& t);
Json to_json(const nodal::StabilityReport& s);
Json vector_json(const Eigen::VectorXd& v);

/// VTK polydata: triangles of a surface (slice coordinates), or meridian
/// curves as polylines at (s, z, 0). Radial roots have no geometry here.
std::string vtk_polydata(const nodal::LevelSetMesh& mesh, const std::string& title);

/// Header row then one row per sample: x_1..x_d, then each named field.
std::string csv_samples(const Eigen::MatrixXd& points, const std::vector<std::string>& names,
                        const std::vector<std::vector<double>>& columns);

/// Writes bytes exactly; parent directories must exist.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace actopo::report
