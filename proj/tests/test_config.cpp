#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "kinpot/commands.hpp"
#include "kinpot/errors.hpp"

using namespace kinpot;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({"potential": {"modes": [{"k": [1], "a": -0.5}], "shift": 0.5}, "T": 0.0})";

const char* kTiny = R"({
  "potential": {"modes": [{"k": [1], "a": -0.5, "b": 0.0}], "shift": 0.5},
  "grid": {"d_x": 1, "d_v": 2, "nx": 4, "nv": 8, "v_max": 6.0},
  "kernel": {"n_angle": 8},
  "T": 0.02, "dt": 0.01, "substep": 0.0025,
  "initial_data": {"family": "small-smooth", "amplitude": 0.01}
})";

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("kinpot_test_" + name);
    fs::remove_all(p);
    return p;
}

std::vector<std::string> problems_of(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.problems;
    }
    return {};
}

bool mentions(const std::vector<std::string>& p, const std::string& s) {
    for (const auto& m : p)
        if (m.find(s) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST_CASE("a minimal config is filled with defaults and round-trips") {
    auto c = parse_config_text(kMinimal);
    ScenarioConfig d;
    CHECK(c.beta == d.beta);
    CHECK(c.grid.nv == d.grid.nv);
    CHECK(c.kernel.gamma == d.kernel.gamma);
    CHECK(c.potential.modes.size() == 1);
    CHECK(c.potential.modes[0].k == std::array<int, 3>{1, 0, 0});
    auto text = canonical_config(c);
    auto back = parse_config_text(text);
    CHECK(canonical_config(back) == text);
    CHECK(config_hash(back) == config_hash(c));
    CHECK(config_hash(c).size() == 16);
}

TEST_CASE("config hash ignores key order and whitespace but not values") {
    auto a = parse_config_text(R"({"T": 1.0, "potential": {"shift": 0.5, "modes": [{"a": -0.5, "k": [1]}]}})");
    auto b = parse_config_text(R"({"potential":{"modes":[{"k":[1],"a":-0.5}],"shift":0.5},"T":1.0})");
    CHECK(config_hash(a) == config_hash(b));
    b.T = 2.0;
    CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("out-of-range parameters are rejected with the admissible range") {
    auto p = problems_of(R"({"potential": {"modes": []}, "T": 1, "kernel": {"gamma": 1.5}})");
    REQUIRE(p.size() == 1);
    CHECK(mentions(p, "[0, 1]"));
    p = problems_of(R"({"potential": {"modes": []}, "T": 1, "beta": 3})");
    REQUIRE(p.size() == 1);
    CHECK(mentions(p, "beta >= 4"));
}

TEST_CASE("every problem is reported at once") {
    auto p = problems_of(R"({"potential": {"modes": [{"k": [0, 2], "a": 1}]}, "T": -1, "dt": 0,
                              "beta": 2, "grid": {"nv": 4, "d_x": 1}, "bogus": 1, "solver": {"loss": "quadratic"}})");
    CHECK(mentions(p, "T must be nonnegative"));
    CHECK(mentions(p, "dt must be positive"));
    CHECK(mentions(p, "beta"));
    CHECK(mentions(p, "grid.nv"));
    CHECK(mentions(p, "bogus"));
    CHECK(mentions(p, "wave-vector"));
    CHECK(mentions(p, "solver.loss"));
    CHECK(p.size() >= 7);
}

TEST_CASE("missing required keys and type errors") {
    auto p = problems_of(R"({"grid": {"nx": "eight"}})");
    CHECK(mentions(p, "potential"));
    CHECK(mentions(p, "T"));
    CHECK(mentions(p, "grid.nx"));
    CHECK_THROWS_AS(parse_config_text("{not json"), ConfigError);
    CHECK_THROWS_AS(parse_config("/nonexistent/kinpot.json"), ConfigError);
}

TEST_CASE("diagnostics header and row widths agree") {
    auto cols = diagnostics_columns(1, 2);
    CHECK(cols.front() == "t");
    CHECK(std::find(cols.begin(), cols.end(), "J_drift_1") != cols.end());
    CHECK(std::find(cols.begin(), cols.end(), "momentum_full_drift_2") != cols.end());
    DiagnosticsRecord r;
    r.momentum_drift = {0.0};
    r.momentum_full_drift = {0.0, 0.0};
    auto row = format_record(r, 2);
    CHECK(std::count(row.begin(), row.end(), ',') + 1 == static_cast<long>(cols.size()));
}

TEST_CASE("format_number round-trips doubles") {
    for (double x : {0.1, 1.0 / 3.0, 6.02e23, -1e-300, 0.0}) CHECK(std::stod(format_number(x)) == x);
}

TEST_CASE("csv reader skips comments and svg carries the requested size") {
    auto dir = scratch("csv");
    fs::create_directories(dir);
    write_text((dir / "a.csv").string(), "# comment\nt,a,b\n0,1,2\n1,0.5,4\n2,0.25,8\n");
    auto t = read_csv((dir / "a.csv").string());
    CHECK(t.header == std::vector<std::string>{"t", "a", "b"});
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[2][2] == 8.0);
    PlotOptions o;
    o.width = 640;
    o.height = 320;
    o.title = "demo";
    plot_command((dir / "a.csv").string(), (dir / "a.svg").string(), o);
    auto svg = slurp(dir / "a.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("width=\"640\"") != std::string::npos);
    CHECK(svg.find("height=\"320\"") != std::string::npos);
    CHECK(svg.find("demo") != std::string::npos);
    CHECK(std::count(svg.begin(), svg.end(), '\n') > 5);
    fs::remove_all(dir);
}

TEST_CASE("bound fitting uses the first half and reports holdout violations") {
    auto r = fit_ratios("x", {1.0, 2.0, 1.5, 3.0});
    CHECK(r.fitted_constant == 2.0);
    CHECK(r.max_violation_ratio == 1.5);
    CHECK(r.sample_size == 4);
    auto s = fit_ratios("y", {2.0, 1.0, 0.5});
    CHECK(s.max_violation_ratio == 0.5);
}

TEST_CASE("output directory precedence") {
    ::setenv(kOutDirEnv, "from_env", 1);
    CHECK(resolve_out_dir("flag") == "flag");
    CHECK(resolve_out_dir("") == "from_env");
    ::unsetenv(kOutDirEnv);
    CHECK(resolve_out_dir("") == "kinpot_out");
}

TEST_CASE("run command writes its artifacts and manifest") {
    auto cfg = parse_config_text(kTiny);
    auto dir = scratch("run");
    auto m = run_command(cfg, dir.string());
    CHECK(m.status == "ok");
    for (const char* f : {"config.json", "diagnostics.csv", "picard_report.json", "summary.json", "manifest.json"})
        CHECK(fs::exists(dir / f));
    auto csv = read_csv((dir / "diagnostics.csv").string());
    CHECK(csv.rows.size() >= 2);
    CHECK(csv.rows.back()[0] == 0.02);
    auto man = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(man["config_hash"] == config_hash(cfg));
    CHECK(man["status"] == "ok");
    CHECK(parse_config((dir / "config.json").string()).T == cfg.T);
    fs::remove_all(dir);
}

TEST_CASE("a failing run leaves an error manifest") {
    auto cfg = parse_config_text(kTiny);
    cfg.dt = -1.0;
    auto dir = scratch("fail");
    CHECK_THROWS_AS(run_command(cfg, dir.string()), ConfigError);
    auto man = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(man["status"] == "error");
    CHECK(man["error"].get<std::string>().find("dt") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("verify and trajectory commands produce tables") {
    auto cfg = parse_config_text(kTiny);
    auto dir = scratch("verify");
    BoundOptions o;
    o.kernel_pairs = 50;
    o.slices = 10;
    verify_command(cfg, dir.string(), o);
    auto b = read_csv((dir / "bounds.csv").string());
    CHECK(b.rows.size() >= 7);

    TrajectoryRequest q;
    q.t = 0.5;
    characteristics_command(cfg, dir.string(), q);
    auto tr = read_csv((dir / "trajectory.csv").string());
    CHECK(tr.header.front() == "s");
    CHECK(tr.header.back() == "detJ");
    CHECK(tr.rows.front()[0] == 0.5);
    CHECK(tr.rows.back()[0] == 0.0);
    jacobian_scan_command(cfg, dir.string(), q);
    CHECK(fs::exists(dir / "jacobian_scan.csv"));
    fs::remove_all(dir);
}
