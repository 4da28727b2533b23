#include "kinpot/commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>

#include "kinpot/errors.hpp"

namespace kinpot {

namespace fs = std::filesystem;

namespace {

// Runs body with a manifest that is written whether or not body throws.
template <class Body>
RunManifest with_manifest(const ScenarioConfig& cfg, const std::string& out_dir, Body body) {
    fs::create_directories(out_dir);
    RunManifest m;
    m.config_hash = config_hash(cfg);
    m.seed = cfg.seed;
    m.start_time = utc_timestamp();
    auto finish = [&] {
        m.end_time = utc_timestamp();
        write_text((fs::path(out_dir) / "manifest.json").string(), manifest_json(m) + "\n");
    };
    try {
        body(m);
    } catch (const std::exception& e) {
        m.status = "error";
        m.error = e.what();
        finish();
        throw;
    }
    finish();
    return m;
}

std::string in_dir(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void echo_config(const ScenarioConfig& cfg, const std::string& out_dir, RunManifest& m) {
    write_text(in_dir(out_dir, "config.json"), canonical_config(cfg) + "\n");
    m.files.push_back("config.json");
}

}  // namespace

std::string resolve_out_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
    return "kinpot_out";
}

RunManifest run_command(const ScenarioConfig& cfg, const std::string& out_dir) {
    return with_manifest(cfg, out_dir, [&](RunManifest& m) {
        echo_config(cfg, out_dir, m);
        const int n_deg = static_cast<int>(degenerate_directions(
                                               PotentialField(cfg.grid.d_x, cfg.potential.modes, cfg.potential.shift),
                                               cfg.grid.d_v)
                                               .indices.size());
        m.files.push_back("diagnostics.csv");
        DiagnosticsWriter csv(in_dir(out_dir, "diagnostics.csv"), cfg, n_deg);
        const std::string hash = config_hash(cfg);
        RunObserver obs;
        obs.on_record = [&](const DiagnosticsRecord& r) { csv.write(r); };
        obs.on_picard = [&](const PicardReport& p) {
            write_text(in_dir(out_dir, "picard_report.json"), picard_report_json(p) + "\n");
            m.files.push_back("picard_report.json");
        };
        if (cfg.snapshot_every > 0) {
            fs::create_directories(fs::path(out_dir) / "snapshots");
            obs.on_snapshot = [&](const SolverState& s) {
                char name[64];
                std::snprintf(name, sizeof name, "snapshots/h_%06zu", s.step);
                write_snapshot(in_dir(out_dir, name), s.h, {s.t, hash});
                m.files.push_back(std::string(name) + ".bin");
                m.files.push_back(std::string(name) + ".meta");
            };
        }
        auto res = run(cfg, obs);
        write_text(in_dir(out_dir, "summary.json"), summary_json(res.summary, cfg) + "\n");
        m.files.push_back("summary.json");
    });
}

RunManifest local_command(const ScenarioConfig& cfg, const std::string& out_dir) {
    return with_manifest(cfg, out_dir, [&](RunManifest& m) {
        echo_config(cfg, out_dir, m);
        SolverContext ctx(cfg);
        auto F0 = initial_density(ctx);
        auto res = local_picard_solve(ctx, F0, std::numeric_limits<double>::infinity());
        write_text(in_dir(out_dir, "picard_report.json"), picard_report_json(res.report) + "\n");
        m.files.push_back("picard_report.json");
        const Baseline base = make_baseline(ctx, F0);
        DiagnosticsWriter csv(in_dir(out_dir, "diagnostics.csv"), cfg, ctx.degenerate.n0());
        m.files.push_back("diagnostics.csv");
        for (std::size_t j = 0; j < res.F.size(); ++j) {
            auto s = make_state(ctx, res.F[j], res.times[j]);
            s.step = j;
            s.damping_sample = res.damping[j];
            csv.write(compute_record(ctx, s, base));
        }
    });
}

RunManifest verify_command(const ScenarioConfig& cfg, const std::string& out_dir, const BoundOptions& opt) {
    return with_manifest(cfg, out_dir, [&](RunManifest& m) {
        echo_config(cfg, out_dir, m);
        PhaseGrid g(cfg.grid.d_x, cfg.grid.d_v, cfg.grid.nx, cfg.grid.nv, cfg.grid.v_max, cfg.grid.tail_tol);
        CollisionOperator op(g, cfg.kernel);
        BoundOptions o = opt;
        o.seed = cfg.seed;
        write_text(in_dir(out_dir, "bounds.csv"), bounds_csv(verify_bounds(op, o)));
        m.files.push_back("bounds.csv");
    });
}

namespace {
PotentialField potential_of(const ScenarioConfig& cfg) {
    PotentialField p(cfg.grid.d_x, cfg.potential.modes, cfg.potential.shift);
    return cfg.potential.auto_shift ? normalize_nonnegative(p) : p;
}
}  // namespace

RunManifest characteristics_command(const ScenarioConfig& cfg, const std::string& out_dir, const TrajectoryRequest& q) {
    return with_manifest(cfg, out_dir, [&](RunManifest& m) {
        auto phi = potential_of(cfg);
        const int dim = cfg.grid.d_v;
        auto tr = backtrace(phi, dim, q.t, q.x, q.v, q.s_end, cfg.substep);
        auto fj = flow_jacobian(phi, dim, q.t, q.x, q.v, q.s_end, cfg.substep);
        write_text(in_dir(out_dir, "trajectory.csv"), trajectory_csv(tr, fj.det, phi, dim));
        m.files.push_back("trajectory.csv");
    });
}

RunManifest jacobian_scan_command(const ScenarioConfig& cfg, const std::string& out_dir, const TrajectoryRequest& q) {
    return with_manifest(cfg, out_dir, [&](RunManifest& m) {
        auto phi = potential_of(cfg);
        double thr = q.threshold >= 0.0 ? q.threshold : cfg.thresholds.delta_star;
        auto scan = det_scan(phi, cfg.grid.d_v, q.t, q.x, q.v, thr, cfg.substep);
        std::string s = "# threshold=" + format_number(thr) +
                        " singular_measure=" + format_number(scan.singular_measure) + "\ns_lo,s_hi,near_singular\n";
        for (const auto& iv : scan.intervals)
            s += format_number(iv.s_lo) + "," + format_number(iv.s_hi) + "," + (iv.near_singular ? "1" : "0") + "\n";
        write_text(in_dir(out_dir, "jacobian_scan.csv"), s);
        m.files.push_back("jacobian_scan.csv");
    });
}

void plot_command(const std::string& csv_path, const std::string& svg_path, const PlotOptions& opt) {
    write_text(svg_path, render_svg(read_csv(csv_path), opt));
}

}  // namespace kinpot
