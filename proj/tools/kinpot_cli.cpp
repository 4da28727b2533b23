#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "kinpot/commands.hpp"
#include "kinpot/errors.hpp"
#include "kinpot/parallel.hpp"

using namespace kinpot;

namespace {

Vec to_vec(const std::vector<double>& a) {
    if (a.empty() || a.size() > 3) throw ContractError("expected 1 to 3 components");
    Vec v{};
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i];
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kinetic solver for the Boltzmann equation with an external potential"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    std::string config_path, out_flag;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    auto common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("--config", config_path, "JSON scenario file");
        if (config_required) opt->required();
        sub->add_option("--out", out_flag, "output directory (default: $KINPOT_OUT_DIR or kinpot_out)");
        sub->add_option("--seed", seed, "override the configured seed");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    };

    auto* run_cmd = app.add_subcommand("run", "Picard start then semi-Lagrangian marching to T");
    common(run_cmd, true);
    auto* local_cmd = app.add_subcommand("local", "Picard iteration on [0, T0] only");
    common(local_cmd, true);

    BoundOptions bopt;
    auto* verify_cmd = app.add_subcommand("verify", "Fit constants of the collision-kernel bounds");
    common(verify_cmd, false);
    verify_cmd->add_option("--pairs", bopt.kernel_pairs, "random velocity pairs");
    verify_cmd->add_option("--slices", bopt.slices, "random velocity slices (at least 10)");

    TrajectoryRequest traj;
    std::vector<double> xq{0.25}, vq{1.0, 0.0};
    auto traj_opts = [&](CLI::App* sub) {
        common(sub, false);
        sub->add_option("--x", xq, "start position")->delimiter(',');
        sub->add_option("--v", vq, "start velocity")->delimiter(',');
        sub->add_option("--t", traj.t, "start time");
        sub->add_option("--s-end", traj.s_end, "end time of the backward trace");
    };
    auto* char_cmd = app.add_subcommand("characteristics", "Dump one backward characteristic as CSV");
    traj_opts(char_cmd);
    auto* scan_cmd = app.add_subcommand("jacobian-scan", "Scan det(dX/dv) along a characteristic");
    traj_opts(scan_cmd);
    scan_cmd->add_option("--threshold", traj.threshold, "near-singular threshold (default thresholds.delta_star)");

    std::string csv_in, svg_out = "plot.svg";
    PlotOptions popt;
    bool linear = false;
    auto* plot_cmd = app.add_subcommand("plot", "Render columns of a CSV to an SVG line plot");
    plot_cmd->add_option("--csv", csv_in, "input CSV")->required();
    plot_cmd->add_option("--output", svg_out, "output SVG path");
    plot_cmd->add_option("--width", popt.width, "image width in px");
    plot_cmd->add_option("--height", popt.height, "image height in px");
    plot_cmd->add_option("--columns", popt.columns, "columns to draw (default: all but the first)")->delimiter(',');
    plot_cmd->add_flag("--linear", linear, "linear y axis instead of log10 |y|");
    plot_cmd->add_option("--title", popt.title, "plot title");

    CLI11_PARSE(app, argc, argv);

    try {
        set_thread_count(threads);
        if (plot_cmd->parsed()) {
            popt.log_y = !linear;
            plot_command(csv_in, svg_out, popt);
            return 0;
        }
        ScenarioConfig cfg = config_path.empty() ? ScenarioConfig{} : parse_config(config_path);
        if (seed) cfg.seed = *seed;
        const std::string out = resolve_out_dir(out_flag);
        if (run_cmd->parsed()) run_command(cfg, out);
        else if (local_cmd->parsed()) local_command(cfg, out);
        else if (verify_cmd->parsed()) verify_command(cfg, out, bopt);
        else {
            traj.x = to_vec(xq);
            traj.v = to_vec(vq);
            if (char_cmd->parsed()) characteristics_command(cfg, out, traj);
            else jacobian_scan_command(cfg, out, traj);
        }
        std::cout << "wrote " << out << "\n";
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
