#pragma once

// Stage orchestration behind the command-line tool:
//   eigen -> rescale and place -> extend -> shell fit -> push -> expand
//   -> decay and nodal checks [-> promote -> residual, closeness, nodal].
// Each stage appends to one JSON report; timings are kept apart so the
// report itself is reproducible byte for byte.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "actopo/allencahn.hpp"
#include "actopo/config.hpp"
#include "actopo/domains.hpp"
#include "actopo/nodal.hpp"
#include "actopo/report.hpp"
#include "actopo/runge.hpp"

namespace actopo::pipeline {

using report::Json;

inline constexpr const char* kVersion = "0.1.0";

/// Zero set of one field near one target, with its checks.
struct NodalResult {
    nodal::Region region;
    nodal::LevelSetMesh mesh;
    nodal::TopologyReport topology;
    std::optional<double> hausdorff;
    std::optional<nodal::StabilityReport> stability;
};

class Pipeline {
public:
    explicit Pipeline(config::PipelineConfig cfg);

    const config::PipelineConfig& config() const { return cfg_; }

    void eigen();
    /// full adds the decay fit, Hausdorff distances and the stability probe.
    void helmholtz(bool full);
    /// full adds the closeness scan and the oddness run.
    void promote(bool full);
    /// Field slices and zero-set meshes, appended to artifacts.
    void export_artifacts();

    /// Files written next to the report: name, content.
    std::vector<std::pair<std::string, std::string>> artifacts;
    /// Stage running when an exception escaped, and its config anchor.
    std::string current_stage;
    std::string anchor() const;

    Json report;
    Json timings = Json::object();
    /// Named checks with pass flags; the run passes iff all do.
    Json checks = Json::array();
    bool pass() const;

    // Stage products, filled as the stages run.
    std::vector<domains::EigenResult> eigenpairs;
    std::vector<domains::ScaledDomain> scaled;
    std::optional<domains::PlacementCertificate> placement;
    std::vector<domains::Extension> extensions;
    std::optional<runge::FitRegion> region;
    std::optional<runge::FourierBesselSolution> w;
    runge::ApproximationReport final_report;
    std::optional<runge::DecayFit> decay;
    std::vector<NodalResult> nodal_w;
    std::optional<allencahn::SolutionBundle> bundle;
    std::optional<allencahn::ResidualReport> residual;
    std::vector<NodalResult> nodal_u;
    double big_r = 0.0;

private:
    void check(const std::string& name, bool ok, Json detail = Json::object());
    NodalResult nodal_for(const runge::Field& f, const domains::SurfaceSpec& target, bool full) const;
    Json nodal_json(const NodalResult& n) const;
    nodal::Region region_for(const domains::SurfaceSpec& target) const;
    template <class F>
    void timed(const std::string& stage, F&& f);

    config::PipelineConfig cfg_;
    bool eigen_done_ = false, helmholtz_done_ = false;
};

/// Runs one subcommand and writes <out>/<name>.json, <out>/timings.json and
/// the subcommand's artifacts. Returns 0 on pass, 2 on a validation error,
/// 3 on a stage failure or a failed check; the report is written in every
/// case once the config has been read.
int run_subcommand(const std::string& name, config::PipelineConfig cfg, const std::filesystem::path& out,
                   std::string* message = nullptr);

}  // namespace actopo::pipeline
