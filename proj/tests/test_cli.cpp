#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cfloat>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include "actopo/config.hpp"
#include "actopo/error.hpp"
#include "actopo/pipeline.hpp"
#include "actopo/report.hpp"

using namespace actopo;
namespace fs = std::filesystem;

namespace {

const char* kBall3 = R"(# small sphere run
[run]
dimension = 3
seed = 7

[surface]
label = sphere
type = ball
radius = 3.14159265358979323846

[fit]
n_sources = 200
n_colloc = 600
tolerance = 1e-3
n_holdout = 400

[expansion]
tolerance = 1e-3

[nodal]
resolution = 0.2
hausdorff_samples = 500

[export]
slice_points = 11
)";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("actopo_test_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

config::PipelineConfig from_text(const std::string& text) {
    return config::build(config::ConfigFile::parse(text, "t.ini"));
}

// Error message of a config that must be rejected.
std::string rejection(const std::string& text) {
    try {
        from_text(text);
    } catch (const ValidationError& e) {
        return e.what();
    }
    FAIL("config accepted: " << text);
    return {};
}

}  // namespace

TEST_CASE("config parses sections, comments and lists") {
    const auto c = from_text(kBall3);
    CHECK(c.dimension == 3);
    CHECK(c.seed == 7);
    CHECK(c.fit.seed == 7);
    REQUIRE(c.surfaces.size() == 1);
    CHECK(c.surfaces[0].spec.label == "sphere");
    CHECK(c.surfaces[0].line == 6);
    CHECK(c.fit.n_sources == 200);
    CHECK(c.expansion.tolerance == doctest::Approx(1e-3));
    CHECK(c.slice_points == 11);

    const auto d = from_text("[run]\ndimension = 4 ; trailing\n[surface]\ntype = ball\ncenter = 0, 0, 0, 6\n"
                             "radius = 2\n[allencahn]\neps_grid = 0.2 0.1\n");
    CHECK(d.surfaces[0].placement(3) == 6.0);
    CHECK(d.eps_grid.size() == 2);
}

TEST_CASE("config errors name the file and line") {
    const std::regex anchored("^t\\.ini:([0-9]+): .*");
    auto line_of = [&](const std::string& text) {
        const std::string msg = rejection(text);
        std::smatch m;
        REQUIRE_MESSAGE(std::regex_match(msg, m, anchored), msg);
        return std::stoi(m[1]);
    };
    CHECK(line_of("[run]\ndimension = 3\n[fit]\nbogus = 1\n") == 4);
    CHECK(line_of("[run]\ndimension = 3\n\n[nosuch]\n") == 4);
    CHECK(line_of("[run]\ndimension = 3\n[fit]\nband = -1\n") == 4);
    CHECK(line_of("[run]\ndimension = 3\n[fit]\nband = abc\n") == 4);
    CHECK(line_of("[run]\ndimension = 3\n[fit]\nband = 0.1\nband = 0.2\n") == 5);
    CHECK(line_of("[run]\ndimension = 3\n[fit]\n[fit]\n") == 4);
    CHECK(line_of("[run]\ndimension = 3\nthis is not a pair\n") == 3);
    CHECK(line_of("[run]\ndimension = 3\n[surface]\ntype = cube\n") == 4);
    CHECK(line_of("[run]\ndimension = 3\n[surface]\ntype = ball\ncenter = 0 0\nradius = 1\n") == 5);
    CHECK(line_of("[run]\ndimension = 4\n[surface]\ntype = torus\nmajor_radius = 3\nminor_radius = 1\n") == 4);
    CHECK(line_of("[run]\ndimension = 3\n[surface]\nlabel = a\ntype = ball\nradius = 1\n[surface]\n"
                  "label = a\ntype = ball\nradius = 1\n") > 0);
    CHECK(line_of("[run]\ndimension = 3\n[fit]\nn_sources = 400\nn_colloc = 100\n") > 0);
    CHECK(line_of("[run]\nseed = 1\n") == 1);
    CHECK(line_of("[surface]\ntype = ball\nradius = 1\n") == 1);
}

TEST_CASE("json doubles carry 17 significant digits") {
    CHECK(report::format_double(0.1) == "0.10000000000000001");
    CHECK(report::format_double(1.0) == "1");
    const report::Json j{{"x", 1.0 / 3.0}, {"nan", std::nan("")}, {"v", report::Json::array({0.5, 2})}};
    const std::string s = report::dump(j);
    CHECK(s.find("0.33333333333333331") != std::string::npos);
    CHECK(s.find("\"nan\": null") != std::string::npos);
    CHECK(s.find("[0.5, 2]") != std::string::npos);
    // Round trip is exact.
    const double x = 2.718281828459045;
    CHECK(std::strtod(report::format_double(x).c_str(), nullptr) == x);
}

TEST_CASE("csv has a header row and vtk is legacy ascii") {
    Eigen::MatrixXd pts(2, 2);
    pts << 0.0, 1.0, 0.5, 0.25;
    const std::string csv = report::csv_samples(pts, {"w"}, {{1.0, -0.5}});
    CHECK(csv == "x1,x2,w\n0,0.5,1\n1,0.25,-0.5\n");
    nodal::LevelSetMesh empty;
    CHECK(report::vtk_polydata(empty, "t").rfind("# vtk DataFile Version 3.0\nt\nASCII\nDATASET POLYDATA\n", 0) == 0);
}

TEST_CASE("promote in d = 3 is refused with exit 2") {
    const fs::path out = scratch("promote3");
    std::string msg;
    const int code = pipeline::run_subcommand("promote", from_text(kBall3), out, &msg);
    CHECK(code == 2);
    CHECK(msg.find("boundary case") != std::string::npos);
    CHECK(msg.rfind("t.ini:", 0) == 0);
    const std::string report = slurp(out / "promote.json");
    CHECK(report.find("\"status\": \"validation_error\"") != std::string::npos);
}

TEST_CASE("an empty surface list is refused") {
    const fs::path out = scratch("empty");
    std::string msg;
    const int code = pipeline::run_subcommand("verify", from_text("[run]\ndimension = 3\n"), out, &msg);
    CHECK(code == 2);
    CHECK(msg.rfind("t.ini:2:", 0) == 0);
    CHECK(fs::exists(out / "verify.json"));
}

TEST_CASE("overlapping placement is refused at the surface line") {
    const std::string text =
        "[run]\ndimension = 3\n[surface]\nlabel = a\ntype = ball\nradius = 3.14159\ncenter = -2 0 0\n"
        "[surface]\nlabel = b\ntype = ball\nradius = 3.14159\ncenter = 2 0 0\n";
    const fs::path out = scratch("overlap");
    std::string msg;
    CHECK(pipeline::run_subcommand("eigen", from_text(text), out, &msg) == 0);
    CHECK(pipeline::run_subcommand("helmholtz", from_text(text), out, &msg) == 2);
    CHECK(msg.find("not certified unlinked") != std::string::npos);
    CHECK(msg.rfind("t.ini:", 0) == 0);
    CHECK(slurp(out / "helmholtz.json").find("\"certified\": false") != std::string::npos);
}

TEST_CASE("helmholtz passes on the sphere and is deterministic") {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    std::string msg;
    REQUIRE_MESSAGE(pipeline::run_subcommand("helmholtz", from_text(kBall3), a, &msg) == 0, msg);
    REQUIRE(pipeline::run_subcommand("helmholtz", from_text(kBall3), b, &msg) == 0);
    for (const char* f : {"helmholtz.json", "solution.json"}) {
        const std::string x = slurp(a / f);
        CHECK(!x.empty());
        CHECK(x == slurp(b / f));
    }
    // A different seed changes the sampled points and hence the report.
    auto other = from_text(kBall3);
    other.set_seed(8);
    const fs::path c = scratch("det_c");
    REQUIRE(pipeline::run_subcommand("helmholtz", other, c, &msg) == 0);
    CHECK(slurp(a / "helmholtz.json") != slurp(c / "helmholtz.json"));
}

TEST_CASE("export is idempotent") {
    const fs::path out = scratch("export");
    std::string msg;
    REQUIRE_MESSAGE(pipeline::run_subcommand("export", from_text(kBall3), out, &msg) == 0, msg);
    std::map<std::string, std::string> first;
    for (const auto& e : fs::directory_iterator(out)) {
        if (e.path().filename() != "timings.json") first[e.path().filename().string()] = slurp(e.path());
    }
    CHECK(first.count("slice.csv") == 1);
    CHECK(first.count("zero_set_w_sphere.vtk") == 1);
    CHECK(first["slice.csv"].rfind("x1,x2,x3,w\n", 0) == 0);
    REQUIRE(pipeline::run_subcommand("export", from_text(kBall3), out, &msg) == 0);
    for (const auto& [name, content] : first) CHECK_MESSAGE(slurp(out / name) == content, name);
}
