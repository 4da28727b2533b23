#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "kinpot/bounds.hpp"
#include "kinpot/characteristics.hpp"
#include "kinpot/mild_solver.hpp"

namespace kinpot {

std::string format_number(double x);

std::vector<std::string> diagnostics_columns(int n_degenerate, int d_v);
std::string format_record(const DiagnosticsRecord& r, int d_v);

// Streams diagnostics rows, flushing after each so partial runs survive errors.
class DiagnosticsWriter {
public:
    DiagnosticsWriter(const std::string& path, const ScenarioConfig& cfg, int n_degenerate);
    void write(const DiagnosticsRecord& r);

private:
    std::ofstream out_;
    int d_v_;
};

std::string picard_report_json(const PicardReport& p);
std::string summary_json(const RunSummary& s, const ScenarioConfig& cfg);
std::string bounds_csv(const std::vector<BoundResult>& results);
// Columns s, X..., V..., H, detJ.
std::string trajectory_csv(const Trajectory& traj, const std::vector<double>& detJ, const PotentialField& phi, int dim);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};
CsvTable read_csv(const std::string& path);

struct PlotOptions {
    int width = 800;
    int height = 500;
    std::vector<std::string> columns;  // empty: every column except the first
    bool log_y = true;
    std::string title;
};
// Line plot of the chosen columns against the first column, as SVG.
std::string render_svg(const CsvTable& table, const PlotOptions& opt);

void write_text(const std::string& path, const std::string& text);

}  // namespace kinpot
