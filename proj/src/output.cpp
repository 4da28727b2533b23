#include "kinpot/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "kinpot/config.hpp"
#include "kinpot/errors.hpp"

namespace kinpot {

namespace {
using json = nlohmann::json;

json finite_or_string(double x) {
    if (std::isfinite(x)) return x;
    return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
}
}  // namespace

std::string format_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::vector<std::string> diagnostics_columns(int n_degenerate, int d_v) {
    std::vector<std::string> c{"t", "mass_drift", "energy_drift"};
    for (int i = 0; i < n_degenerate; ++i) c.push_back("J_drift_" + std::to_string(i + 1));
    for (const char* s : {"entropy_gap", "l2_norm", "linf_h", "small_moment_worst", "small_moment_pass",
                          "loss_bound_min_margin", "loss_bound_pass", "damping_sample", "floored_mass"})
        c.push_back(s);
    for (int i = 0; i < d_v; ++i) c.push_back("momentum_full_drift_" + std::to_string(i + 1));
    return c;
}

std::string format_record(const DiagnosticsRecord& r, int d_v) {
    std::vector<std::string> f{format_number(r.t), format_number(r.mass_drift), format_number(r.energy_drift)};
    for (double j : r.momentum_drift) f.push_back(format_number(j));
    f.push_back(format_number(r.entropy_gap));
    f.push_back(format_number(r.l2_norm));
    f.push_back(format_number(r.linf_h));
    f.push_back(format_number(r.small_moment_worst));
    f.push_back(r.small_moment_pass ? "1" : "0");
    f.push_back(format_number(r.loss_bound_min_margin));
    f.push_back(r.loss_bound_pass ? "1" : "0");
    f.push_back(format_number(r.damping_sample));
    f.push_back(format_number(r.floored_mass));
    for (int i = 0; i < d_v; ++i) f.push_back(format_number(r.momentum_full_drift[i]));
    std::string s;
    for (std::size_t i = 0; i < f.size(); ++i) s += (i ? "," : "") + f[i];
    return s;
}

DiagnosticsWriter::DiagnosticsWriter(const std::string& path, const ScenarioConfig& cfg, int n_degenerate)
    : out_(path), d_v_(cfg.grid.d_v) {
    if (!out_) throw Error("cannot write " + path);
    const auto& t = cfg.thresholds;
    out_ << "# config_hash=" << config_hash(cfg) << "\n";
    out_ << "# verdicts are conditional on the supplied constants: C1=" << format_number(t.C1)
         << " C_tilde1=" << format_number(t.C_tilde1) << " C_tilde2=" << format_number(t.C_tilde2)
         << " tol_bound=" << format_number(t.tol_bound) << " picard_C=" << format_number(cfg.picard.C) << "\n";
    auto cols = diagnostics_columns(n_degenerate, d_v_);
    for (std::size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
    out_ << "\n";
    out_.flush();
}

void DiagnosticsWriter::write(const DiagnosticsRecord& r) {
    out_ << format_record(r, d_v_) << "\n";
    out_.flush();
}

std::string picard_report_json(const PicardReport& p) {
    json j;
    j["T0"] = p.T0;
    j["C"] = p.C;
    j["h0_sup"] = p.h0_sup;
    j["levels"] = p.levels;
    j["dtau"] = p.dtau;
    j["iterations"] = p.iterations;
    j["converged"] = p.converged;
    j["verdict"] = p.converged ? "converged" : "failed";
    j["min_F"] = p.min_F;
    j["sup_norm"] = p.sup_norm;
    j["increment"] = p.increment;
    j["ratio"] = p.ratio;
    return j.dump(2);
}

std::string summary_json(const RunSummary& s, const ScenarioConfig& cfg) {
    json j;
    j["config_hash"] = config_hash(cfg);
    j["A0"] = s.A0;
    j["l2_f0"] = s.l2_f0;
    j["M"] = s.M;
    j["nu0"] = s.nu0;
    j["t_tilde"] = finite_or_string(s.t_tilde);
    j["closure"] = {{"A1", finite_or_string(s.closure.A1)},
                    {"T1", finite_or_string(s.closure.T1)},
                    {"C0", cfg.thresholds.closure_C0},
                    {"delta", cfg.thresholds.closure_delta}};
    j["T0"] = s.T0;
    j["picard_C"] = cfg.picard.C;
    j["picard_ran"] = s.picard_ran;
    j["final_time"] = s.final_time;
    j["steps"] = s.steps;
    j["total_floored_mass"] = s.total_floored_mass;
    j["max_linf_h"] = s.max_linf_h;
    if (s.decay) {
        j["decay"] = {{"t_a", s.decay->t_a},
                      {"t_b", s.decay->t_b},
                      {"rate", s.decay->rate},
                      {"prefactor", s.decay->prefactor},
                      {"residual", s.decay->residual},
                      {"samples", s.decay->samples}};
    } else {
        j["decay"] = {{"note", s.decay_note}};
    }
    j["l2_growth"] = {{"pass", s.l2_growth.pass},
                      {"minimal_constant", finite_or_string(s.l2_growth.minimal_constant)},
                      {"C_tilde1", cfg.thresholds.C_tilde1}};
    j["constants"] = {{"C1", cfg.thresholds.C1}, {"C_tilde2", cfg.thresholds.C_tilde2}};
    return j.dump(2);
}

std::string bounds_csv(const std::vector<BoundResult>& results) {
    std::string s = "bound_name,fitted_constant,sample_size,max_violation_ratio\n";
    for (const auto& r : results)
        s += r.name + "," + format_number(r.fitted_constant) + "," + std::to_string(r.sample_size) + "," +
             format_number(r.max_violation_ratio) + "\n";
    return s;
}

std::string trajectory_csv(const Trajectory& traj, const std::vector<double>& detJ, const PotentialField& phi,
                           int dim) {
    std::string s = "s";
    for (int i = 0; i < dim; ++i) s += ",X" + std::to_string(i + 1);
    for (int i = 0; i < dim; ++i) s += ",V" + std::to_string(i + 1);
    s += ",H,detJ\n";
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const auto& p = traj.states[k];
        s += format_number(traj.times[k]);
        for (int i = 0; i < dim; ++i) s += "," + format_number(p.x[i]);
        for (int i = 0; i < dim; ++i) s += "," + format_number(p.v[i]);
        s += "," + format_number(hamiltonian(phi, p.x, p.v));
        s += "," + format_number(k < detJ.size() ? detJ[k] : NAN) + "\n";
    }
    return s;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    CsvTable t;
    std::string line;
    auto split = [](const std::string& l) {
        std::vector<std::string> f;
        std::stringstream ss(l);
        std::string x;
        while (std::getline(ss, x, ',')) f.push_back(x);
        return f;
    };
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto f = split(line);
        if (t.header.empty()) {
            t.header = f;
            continue;
        }
        if (f.size() != t.header.size()) throw Error("ragged row in " + path);
        std::vector<double> row;
        for (const auto& x : f) row.push_back(std::strtod(x.c_str(), nullptr));
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw Error("no header in " + path);
    return t;
}

std::string render_svg(const CsvTable& table, const PlotOptions& opt) {
    if (opt.width < 100 || opt.height < 100) throw ContractError("plot dimensions must be at least 100 px");
    std::vector<std::size_t> cols;
    if (opt.columns.empty()) {
        for (std::size_t i = 1; i < table.header.size(); ++i) cols.push_back(i);
    } else {
        for (const auto& c : opt.columns) {
            auto it = std::find(table.header.begin(), table.header.end(), c);
            if (it == table.header.end()) throw Error("no column named " + c);
            cols.push_back(static_cast<std::size_t>(it - table.header.begin()));
        }
    }
    auto ymap = [&](double y) { return opt.log_y ? std::log10(std::abs(y)) : y; };
    auto usable = [&](double y) { return std::isfinite(y) && (!opt.log_y || y != 0.0); };
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& r : table.rows) {
        x0 = std::min(x0, r[0]);
        x1 = std::max(x1, r[0]);
        for (auto c : cols)
            if (usable(r[c])) {
                y0 = std::min(y0, ymap(r[c]));
                y1 = std::max(y1, ymap(r[c]));
            }
    }
    if (!(x1 > x0)) x1 = x0 + 1.0;
    if (!(y1 > y0)) {
        y0 = std::isfinite(y0) ? y0 - 1.0 : 0.0;
        y1 = y0 + 2.0;
    }
    const double L = 70, R = 160, Tm = 40, B = 50;
    const double pw = opt.width - L - R, ph = opt.height - Tm - B;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return Tm + (1.0 - (y - y0) / (y1 - y0)) * ph; };
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

    std::ostringstream s;
    s.precision(6);
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height
      << "\" viewBox=\"0 0 " << opt.width << " " << opt.height << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<rect x=\"" << L << "\" y=\"" << Tm << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    if (!opt.title.empty())
        s << "<text x=\"" << opt.width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\">"
          << opt.title << "</text>\n";
    for (int k = 0; k <= 4; ++k) {
        double xv = x0 + k * (x1 - x0) / 4, yv = y0 + k * (y1 - y0) / 4;
        s << "<text x=\"" << px(xv) << "\" y=\"" << Tm + ph + 18
          << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << xv << "</text>\n";
        s << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4
          << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
          << (opt.log_y ? "1e" : "") << yv << "</text>\n";
    }
    s << "<text x=\"" << L + pw / 2 << "\" y=\"" << opt.height - 10
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\">" << table.header[0] << "</text>\n";
    for (std::size_t k = 0; k < cols.size(); ++k) {
        const char* color = palette[k % 7];
        s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& r : table.rows)
            if (usable(r[cols[k]])) s << px(r[0]) << "," << py(ymap(r[cols[k]])) << " ";
        s << "\"/>\n";
        double ly = Tm + 16 + 18.0 * k;
        s << "<line x1=\"" << L + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << L + pw + 30 << "\" y2=\"" << ly
          << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        s << "<text x=\"" << L + pw + 34 << "\" y=\"" << ly + 4 << "\" font-size=\"11\" font-family=\"sans-serif\">"
          << table.header[cols[k]] << (opt.log_y ? " (|.|, log10)" : "") << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << text;
}

}  // namespace kinpot
