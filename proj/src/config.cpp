#include "kinpot/config.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "kinpot/errors.hpp"

namespace kinpot {

ConfigError::ConfigError(std::vector<std::string> p)
    : Error([&] {
          std::string s = "invalid configuration:";
          for (const auto& x : p) s += "\n  " + x;
          return s;
      }()),
      problems(std::move(p)) {}

namespace {

using json = nlohmann::json;

// Walks a JSON tree, collecting every type error and unknown key.
class Reader {
public:
    std::vector<std::string> errors;

    bool object(const json& j, const std::string& path, const std::set<std::string>& allowed) {
        if (!j.is_object()) {
            errors.push_back(path + ": expected an object");
            return false;
        }
        for (const auto& [k, v] : j.items())
            if (!allowed.count(k)) errors.push_back(key(path, k) + ": unknown key");
        return true;
    }

    void get(const json& j, const std::string& path, const std::string& k, double& out) {
        if (!j.contains(k)) return;
        if (j[k].is_number()) out = j[k].get<double>();
        else errors.push_back(key(path, k) + ": expected a number");
    }
    void get(const json& j, const std::string& path, const std::string& k, int& out) {
        if (!j.contains(k)) return;
        if (j[k].is_number_integer()) out = j[k].get<int>();
        else errors.push_back(key(path, k) + ": expected an integer");
    }
    void get(const json& j, const std::string& path, const std::string& k, std::uint64_t& out) {
        if (!j.contains(k)) return;
        if (j[k].is_number_unsigned()) out = j[k].get<std::uint64_t>();
        else errors.push_back(key(path, k) + ": expected a nonnegative integer");
    }
    void get(const json& j, const std::string& path, const std::string& k, bool& out) {
        if (!j.contains(k)) return;
        if (j[k].is_boolean()) out = j[k].get<bool>();
        else errors.push_back(key(path, k) + ": expected true or false");
    }
    void get(const json& j, const std::string& path, const std::string& k, std::string& out) {
        if (!j.contains(k)) return;
        if (j[k].is_string()) out = j[k].get<std::string>();
        else errors.push_back(key(path, k) + ": expected a string");
    }
    void get(const json& j, const std::string& path, const std::string& k, Vec& out) {
        if (!j.contains(k)) return;
        const json& a = j[k];
        if (!a.is_array() || a.empty() || a.size() > 3) {
            errors.push_back(key(path, k) + ": expected an array of 1 to 3 numbers");
            return;
        }
        Vec v{};
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!a[i].is_number()) {
                errors.push_back(key(path, k) + ": expected an array of 1 to 3 numbers");
                return;
            }
            v[i] = a[i].get<double>();
        }
        out = v;
    }

    static std::string key(const std::string& path, const std::string& k) { return path.empty() ? k : path + "." + k; }
};

void read_modes(Reader& r, const json& j, std::vector<Mode>& modes) {
    if (!j.is_array()) {
        r.errors.push_back("potential.modes: expected an array");
        return;
    }
    for (std::size_t i = 0; i < j.size(); ++i) {
        std::string p = "potential.modes[" + std::to_string(i) + "]";
        const json& m = j[i];
        if (!r.object(m, p, {"k", "a", "b"})) continue;
        Mode mode;
        if (!m.contains("k") || !m["k"].is_array() || m["k"].empty() || m["k"].size() > 3) {
            r.errors.push_back(p + ".k: expected an array of 1 to 3 integers");
        } else {
            for (std::size_t a = 0; a < m["k"].size(); ++a) {
                if (!m["k"][a].is_number_integer()) {
                    r.errors.push_back(p + ".k: expected an array of 1 to 3 integers");
                    break;
                }
                mode.k[a] = m["k"][a].get<int>();
            }
        }
        r.get(m, p, "a", mode.a);
        r.get(m, p, "b", mode.b);
        modes.push_back(mode);
    }
}

ScenarioConfig from_json(const json& j) {
    Reader r;
    ScenarioConfig c;
    if (!r.object(j, "", {"potential", "grid", "kernel", "beta", "initial_data", "T", "dt", "substep", "diag_every",
                          "snapshot_every", "thresholds", "picard", "solver", "seed"}))
        throw ConfigError(r.errors);
    if (!j.contains("potential")) r.errors.push_back("potential: missing required key");
    if (!j.contains("T")) r.errors.push_back("T: missing required key");

    if (j.contains("potential") && r.object(j["potential"], "potential", {"modes", "shift", "auto_shift"})) {
        const json& p = j["potential"];
        if (p.contains("modes")) read_modes(r, p["modes"], c.potential.modes);
        r.get(p, "potential", "shift", c.potential.shift);
        r.get(p, "potential", "auto_shift", c.potential.auto_shift);
    }
    if (j.contains("grid") && r.object(j["grid"], "grid", {"d_x", "d_v", "nx", "nv", "v_max", "tail_tol"})) {
        const json& g = j["grid"];
        r.get(g, "grid", "d_x", c.grid.d_x);
        r.get(g, "grid", "d_v", c.grid.d_v);
        r.get(g, "grid", "nx", c.grid.nx);
        r.get(g, "grid", "nv", c.grid.nv);
        r.get(g, "grid", "v_max", c.grid.v_max);
        r.get(g, "grid", "tail_tol", c.grid.tail_tol);
    }
    if (j.contains("kernel") &&
        r.object(j["kernel"], "kernel", {"gamma", "c_b", "angular_exponent", "n_angle", "n_azimuth", "eps_reg"})) {
        const json& k = j["kernel"];
        r.get(k, "kernel", "gamma", c.kernel.gamma);
        r.get(k, "kernel", "c_b", c.kernel.c_b);
        r.get(k, "kernel", "angular_exponent", c.kernel.angular_exponent);
        r.get(k, "kernel", "n_angle", c.kernel.n_angle);
        r.get(k, "kernel", "n_azimuth", c.kernel.n_azimuth);
        r.get(k, "kernel", "eps_reg", c.kernel.eps_reg);
    }
    r.get(j, "", "beta", c.beta);
    if (j.contains("initial_data") &&
        r.object(j["initial_data"], "initial_data",
                 {"family", "amplitude", "x_center", "v_center", "x_radius", "v_radius", "mode", "v_width",
                  "zero_moments", "noise"})) {
        const json& d = j["initial_data"];
        const std::string p = "initial_data";
        r.get(d, p, "family", c.initial_data.family);
        r.get(d, p, "amplitude", c.initial_data.amplitude);
        r.get(d, p, "x_center", c.initial_data.x_center);
        r.get(d, p, "v_center", c.initial_data.v_center);
        r.get(d, p, "x_radius", c.initial_data.x_radius);
        r.get(d, p, "v_radius", c.initial_data.v_radius);
        r.get(d, p, "mode", c.initial_data.mode);
        r.get(d, p, "v_width", c.initial_data.v_width);
        r.get(d, p, "zero_moments", c.initial_data.zero_moments);
        r.get(d, p, "noise", c.initial_data.noise);
    }
    r.get(j, "", "T", c.T);
    r.get(j, "", "dt", c.dt);
    r.get(j, "", "substep", c.substep);
    r.get(j, "", "diag_every", c.diag_every);
    r.get(j, "", "snapshot_every", c.snapshot_every);
    if (j.contains("thresholds") &&
        r.object(j["thresholds"], "thresholds",
                 {"C1", "C_tilde1", "C_tilde2", "delta_star", "tol_pos", "tol_bound", "closure_C0", "closure_delta",
                  "fit_t_a", "fit_t_b"})) {
        const json& t = j["thresholds"];
        const std::string p = "thresholds";
        r.get(t, p, "C1", c.thresholds.C1);
        r.get(t, p, "C_tilde1", c.thresholds.C_tilde1);
        r.get(t, p, "C_tilde2", c.thresholds.C_tilde2);
        r.get(t, p, "delta_star", c.thresholds.delta_star);
        r.get(t, p, "tol_pos", c.thresholds.tol_pos);
        r.get(t, p, "tol_bound", c.thresholds.tol_bound);
        r.get(t, p, "closure_C0", c.thresholds.closure_C0);
        r.get(t, p, "closure_delta", c.thresholds.closure_delta);
        r.get(t, p, "fit_t_a", c.thresholds.fit_t_a);
        r.get(t, p, "fit_t_b", c.thresholds.fit_t_b);
    }
    if (j.contains("picard") && r.object(j["picard"], "picard", {"enabled", "C", "tol", "max_iter"})) {
        const json& q = j["picard"];
        r.get(q, "picard", "enabled", c.picard.enabled);
        r.get(q, "picard", "C", c.picard.C);
        r.get(q, "picard", "tol", c.picard.tol);
        r.get(q, "picard", "max_iter", c.picard.max_iter);
    }
    if (j.contains("solver") &&
        r.object(j["solver"], "solver", {"sources", "loss", "conservative_correction", "source_quadrature"})) {
        const json& s = j["solver"];
        r.get(s, "solver", "sources", c.solver.sources);
        r.get(s, "solver", "loss", c.solver.loss);
        r.get(s, "solver", "conservative_correction", c.solver.conservative_correction);
        r.get(s, "solver", "source_quadrature", c.solver.source_quadrature);
    }
    r.get(j, "", "seed", c.seed);

    auto more = c.problems();
    r.errors.insert(r.errors.end(), more.begin(), more.end());
    if (!r.errors.empty()) throw ConfigError(r.errors);
    return c;
}

json vec_json(const Vec& v) { return json::array({v[0], v[1], v[2]}); }

json to_json(const ScenarioConfig& c) {
    json modes = json::array();
    for (const auto& m : c.potential.modes)
        modes.push_back({{"k", json::array({m.k[0], m.k[1], m.k[2]})}, {"a", m.a}, {"b", m.b}});
    const auto& d = c.initial_data;
    const auto& t = c.thresholds;
    return {
        {"potential", {{"modes", modes}, {"shift", c.potential.shift}, {"auto_shift", c.potential.auto_shift}}},
        {"grid",
         {{"d_x", c.grid.d_x},
          {"d_v", c.grid.d_v},
          {"nx", c.grid.nx},
          {"nv", c.grid.nv},
          {"v_max", c.grid.v_max},
          {"tail_tol", c.grid.tail_tol}}},
        {"kernel",
         {{"gamma", c.kernel.gamma},
          {"c_b", c.kernel.c_b},
          {"angular_exponent", c.kernel.angular_exponent},
          {"n_angle", c.kernel.n_angle},
          {"n_azimuth", c.kernel.n_azimuth},
          {"eps_reg", c.kernel.eps_reg}}},
        {"beta", c.beta},
        {"initial_data",
         {{"family", d.family},
          {"amplitude", d.amplitude},
          {"x_center", vec_json(d.x_center)},
          {"v_center", vec_json(d.v_center)},
          {"x_radius", d.x_radius},
          {"v_radius", d.v_radius},
          {"mode", d.mode},
          {"v_width", d.v_width},
          {"zero_moments", d.zero_moments},
          {"noise", d.noise}}},
        {"T", c.T},
        {"dt", c.dt},
        {"substep", c.substep},
        {"diag_every", c.diag_every},
        {"snapshot_every", c.snapshot_every},
        {"thresholds",
         {{"C1", t.C1},
          {"C_tilde1", t.C_tilde1},
          {"C_tilde2", t.C_tilde2},
          {"delta_star", t.delta_star},
          {"tol_pos", t.tol_pos},
          {"tol_bound", t.tol_bound},
          {"closure_C0", t.closure_C0},
          {"closure_delta", t.closure_delta},
          {"fit_t_a", t.fit_t_a},
          {"fit_t_b", t.fit_t_b}}},
        {"picard",
         {{"enabled", c.picard.enabled}, {"C", c.picard.C}, {"tol", c.picard.tol}, {"max_iter", c.picard.max_iter}}},
        {"solver",
         {{"sources", c.solver.sources},
          {"loss", c.solver.loss},
          {"conservative_correction", c.solver.conservative_correction},
          {"source_quadrature", c.solver.source_quadrature}}},
        {"seed", c.seed},
    };
}

}  // namespace

ScenarioConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("malformed JSON: ") + e.what()});
    }
    return from_json(j);
}

ScenarioConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open config file " + path});
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string canonical_config(const ScenarioConfig& cfg, int indent) { return to_json(cfg).dump(indent); }

std::string config_hash(const ScenarioConfig& cfg) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : canonical_config(cfg, -1)) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string manifest_json(const RunManifest& m) {
    json j = {{"config_hash", m.config_hash}, {"tool_version", m.tool_version}, {"seed", m.seed},
              {"start_time", m.start_time},   {"end_time", m.end_time},         {"files", m.files},
              {"status", m.status}};
    if (!m.error.empty()) j["error"] = m.error;
    return j.dump(2);
}

std::string utc_timestamp() {
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace kinpot
