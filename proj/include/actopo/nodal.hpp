#pragma once

// Zero sets of solutions: roots along a ray, meridian curves of zonal
// fields, and triangulated surfaces of 3-D fields or 3-D slices of d-D
// fields. Components, Euler characteristic, distance to a target surface
// and a gradient-based stability certificate.
//
// Cells are split into simplices (Kuhn tetrahedra in 3-D, two triangles per
// square in the meridian plane), so no ambiguous configurations arise. A
// vertex value of exactly zero counts as positive.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "actopo/domains.hpp"
#include "actopo/runge.hpp"

namespace actopo::nodal {

// ---------------------------------------------------------------- regions

/// Ray t -> t * direction, t in [r0, r1].
struct RadialInterval {
    double r0 = 0.0, r1 = 1.0;
    Eigen::VectorXd direction;
};

/// Meridian plane {s e_perp + z axis}, s in [-s_max, s_max], z in [z0, z1].
struct MeridianBox {
    Eigen::VectorXd axis, perp;
    double s_max = 1.0, z0 = -1.0, z1 = 1.0;
};

/// Box [lo, hi] in slice coordinates; ambient point origin + frame * y.
struct Box {
    Eigen::Vector3d lo, hi;
    Eigen::VectorXd origin;  // default: 0 in R^3
    Eigen::MatrixXd frame;   // d x 3, default identity
};

using Region = std::variant<RadialInterval, MeridianBox, Box>;

/// Box around a target surface: its bounding ball grown by `pad` (tight along
/// the axis for tori), in R^3
/// coordinates (d = 3) or the slice through the target center spanned by
/// frame (d >= 4).
Box box_around(const domains::SurfaceSpec& target, double pad, const Eigen::MatrixXd& frame = {});

/// Meridian box around a ball centered on the axis line, or any target in
/// the meridian plane, grown by pad.
MeridianBox meridian_around(const domains::SurfaceSpec& target, const Eigen::VectorXd& axis, double pad);

// ---------------------------------------------------------------- meshes

struct RadialRoots {
    std::vector<double> radii;
    Eigen::VectorXd direction;
};

struct Polyline {
    std::vector<Eigen::Vector2d> points;  // (s, z)
    bool closed = false;
};

struct ZonalCurves {
    std::vector<Polyline> curves;
    Eigen::VectorXd axis, perp;
    /// Ambient point of a meridian coordinate pair.
    Eigen::VectorXd ambient(const Eigen::Vector2d& sz) const { return sz(0) * perp + sz(1) * axis; }
    /// (r, theta) of a meridian point, theta signed by s, measured from the axis.
    static Eigen::Vector2d polar(const Eigen::Vector2d& sz);
};

struct Surface3D {
    Eigen::MatrixXd points;           // d x n ambient vertex positions
    Eigen::Matrix3Xd local;           // slice coordinates of the same vertices
    std::vector<Eigen::Vector3i> triangles;
};

struct LevelSetMesh {
    std::variant<RadialRoots, ZonalCurves, Surface3D> geometry;
    double resolution = 0.0;
    bool empty() const;
};

/// resolution: scan step (radial), cell size (meridian, box). Throws
/// ValidationError when the field is exactly zero at every grid node.
LevelSetMesh extract_zero_set(const runge::Field& field, const Region& region, double resolution);

// ---------------------------------------------------------------- topology

struct Component {
    int vertices = 0, edges = 0, faces = 0;
    int euler = 0;
    bool closed = false;
    int genus = -1;           // -1 when undefined (open or odd chi)
    double grad_min = 0.0;
    double max_distance = 0.0; // to the target surface, over vertices
};

/// Connected pieces of a mesh, with chi = V - E + F. Zonal loops get
/// chi = 0 and genus 0 when they meet the axis (a sphere of revolution) or
/// 1 otherwise (a ring); loops lying wholly in s < 0 are mirror images and
/// dropped. Radial roots are spheres.
std::vector<Component> components(const LevelSetMesh& mesh, const runge::Field& field,
                                  const domains::SurfaceSpec* target = nullptr);

/// Sub-mesh of the components whose every vertex lies within `shell` of the target.
LevelSetMesh restrict_to_shell(const LevelSetMesh& mesh, const domains::SurfaceSpec& target, double shell);

struct TopologyReport {
    std::string label;
    int target_genus = 0;
    int count_in_shell = 0;
    std::vector<Component> in_shell;
    double hausdorff = 0.0;
    double grad_min = 0.0;
    bool pass = false;
    std::string failure;
};

/// Pass iff exactly one closed component lies in the shell and its genus
/// matches the target's.
TopologyReport verify_component_topology(const LevelSetMesh& mesh, const runge::Field& field,
                                         const domains::SurfaceSpec& target, double shell);

/// Symmetric Hausdorff distance between the mesh and the target surface,
/// the latter sampled with n_target points. Undefined (nullopt) for empty meshes.
std::optional<double> hausdorff_distance(const LevelSetMesh& mesh, const domains::SurfaceSpec& target,
                                         int n_target = 4000);

/// Symmetric Hausdorff distance between two meshes of the same kind, both
/// extracted on the same region. Undefined when either is empty.
std::optional<double> mesh_distance(const LevelSetMesh& a, const LevelSetMesh& b);

struct StabilityReport {
    double grad_min = 0.0;
    double tube_half_width = 0.0;
    double margin = 0.0;       // grad_min * tube half-width
    double floor = 0.0;        // gradients at or below this are not trusted
    bool certified = false;
    double probe_c1 = 0.0;     // C^1 size of the bump that was added
    bool probe_same = false;   // topology unchanged under the bump
    TopologyReport probe;
    std::string note;
};

/// grad_min over the in-shell component, margin, and a re-extraction with a
/// Gaussian bump of C^1 size probe_fraction * margin centered at the vertex
/// of smallest gradient.
StabilityReport verify_structural_stability(const runge::Field& field, const LevelSetMesh& mesh,
                                            const Region& region, const domains::SurfaceSpec& target,
                                            double shell, double probe_fraction = 0.5);

/// Same, with the bump's C^1 size given directly (no certification claim).
TopologyReport probe_with_bump(const runge::Field& field, const LevelSetMesh& mesh, const Region& region,
                               const domains::SurfaceSpec& target, double shell, double c1_size);

}  // namespace actopo::nodal
