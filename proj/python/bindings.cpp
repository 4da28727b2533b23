#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "kinpot/bounds.hpp"
#include "kinpot/characteristics.hpp"
#include "kinpot/commands.hpp"
#include "kinpot/config.hpp"
#include "kinpot/errors.hpp"
#include "kinpot/mild_solver.hpp"

namespace py = pybind11;
using namespace kinpot;

namespace {

Vec to_vec(const std::vector<double>& a) {
    if (a.empty() || a.size() > 3) throw py::value_error("expected 1 to 3 coordinates");
    Vec v{};
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i];
    return v;
}

py::array_t<double> rows(const std::vector<Vec>& pts, int dim) {
    py::array_t<double> out({static_cast<py::ssize_t>(pts.size()), static_cast<py::ssize_t>(dim)});
    auto m = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (int k = 0; k < dim; ++k) m(i, k) = pts[i][k];
    return out;
}

py::array_t<double> array_of(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

std::vector<double> values_of(const py::array_t<double, py::array::c_style | py::array::forcecast>& a, std::size_t n) {
    if (static_cast<std::size_t>(a.size()) != n)
        throw py::value_error("expected " + std::to_string(n) + " values, got " + std::to_string(a.size()));
    return {a.data(), a.data() + n};
}

py::object json_loads(const std::string& s) { return py::module_::import("json").attr("loads")(s); }

// Diagnostics records as a column-name list plus a 2-D array, formatted exactly as the CSV.
py::dict records_table(const std::vector<DiagnosticsRecord>& recs, int n_deg, int d_v) {
    auto cols = diagnostics_columns(n_deg, d_v);
    py::array_t<double> data({static_cast<py::ssize_t>(recs.size()), static_cast<py::ssize_t>(cols.size())});
    auto m = data.mutable_unchecked<2>();
    for (std::size_t i = 0; i < recs.size(); ++i) {
        std::stringstream ss(format_record(recs[i], d_v));
        std::string cell;
        for (std::size_t k = 0; k < cols.size() && std::getline(ss, cell, ','); ++k) m(i, k) = std::stod(cell);
    }
    py::dict d;
    d["columns"] = cols;
    d["data"] = data;
    return d;
}

py::dict bound_dict(const BoundResult& b) {
    py::dict d;
    d["name"] = b.name;
    d["fitted_constant"] = b.fitted_constant;
    d["sample_size"] = b.sample_size;
    d["max_violation_ratio"] = b.max_violation_ratio;
    return d;
}

}  // namespace

PYBIND11_MODULE(_kinpot, m) {
    m.doc() = "Kinetic solver with an external potential: characteristics, collision operator, mild solver";
    m.attr("__version__") = kToolVersion;

    // The newest translator is tried first, so the base class goes first.
    py::register_exception<Error>(m, "KinpotError", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def("canonical_config", [](const std::string& text) { return canonical_config(parse_config_text(text)); },
          py::arg("config_json"), "Validated configuration with every default filled in, as JSON text.");
    m.def("config_hash", [](const std::string& text) { return config_hash(parse_config_text(text)); },
          py::arg("config_json"));

    py::class_<PotentialField>(m, "Potential")
        .def(py::init([](int d, const std::vector<std::tuple<std::vector<int>, double, double>>& modes, double shift) {
                 std::vector<Mode> ms;
                 for (const auto& [k, a, b] : modes) {
                     if (k.empty() || k.size() > 3) throw py::value_error("wave vector needs 1 to 3 components");
                     Mode md;
                     for (std::size_t i = 0; i < k.size(); ++i) md.k[i] = k[i];
                     md.a = a;
                     md.b = b;
                     ms.push_back(md);
                 }
                 return PotentialField(d, ms, shift);
             }),
             py::arg("dim"), py::arg("modes"), py::arg("shift") = 0.0,
             "modes: list of (wave_vector, cos_coefficient, sin_coefficient)")
        .def_property_readonly("dim", &PotentialField::dim)
        .def_property_readonly("m_norm", &PotentialField::m_norm)
        .def("__call__", [](const PotentialField& p, const std::vector<double>& x) { return p.evaluate(to_vec(x)); })
        .def("gradient", [](const PotentialField& p, const std::vector<double>& x) {
            Vec g = p.gradient(to_vec(x));
            return std::vector<double>(g.begin(), g.end());
        })
        .def("degenerate_directions",
             [](const PotentialField& p, int ambient) { return degenerate_directions(p, ambient).indices; },
             py::arg("ambient_dim") = 3);

    m.def(
        "backtrace",
        [](const PotentialField& phi, int dim, double t, const std::vector<double>& x, const std::vector<double>& v,
           double s_end, double substep) {
            auto tr = backtrace(phi, dim, t, to_vec(x), to_vec(v), s_end, substep);
            std::vector<Vec> X, V;
            for (const auto& p : tr.states) {
                X.push_back(p.x);
                V.push_back(p.v);
            }
            py::dict d;
            d["times"] = array_of(tr.times);
            d["X"] = rows(X, dim);
            d["V"] = rows(V, dim);
            d["h_drift"] = tr.h_drift;
            return d;
        },
        py::arg("potential"), py::arg("dim"), py::arg("t"), py::arg("x"), py::arg("v"), py::arg("s_end") = 0.0,
        py::arg("substep") = 1e-3, "Backward characteristic from (x, v) at time t down to s_end.");
    m.def(
        "flow_jacobian_det",
        [](const PotentialField& phi, int dim, double t, const std::vector<double>& x, const std::vector<double>& v,
           double s_end, double substep) {
            auto fj = flow_jacobian(phi, dim, t, to_vec(x), to_vec(v), s_end, substep);
            return py::make_tuple(array_of(fj.times), array_of(fj.det));
        },
        py::arg("potential"), py::arg("dim"), py::arg("t"), py::arg("x"), py::arg("v"), py::arg("s_end") = 0.0,
        py::arg("substep") = 1e-3, "Times and det(dX/dv) along the backward characteristic.");

    py::class_<CollisionOperator>(m, "CollisionOperator")
        .def(py::init([](int d_v, int nv, double v_max, double gamma, int n_angle, int n_azimuth) {
                 CollisionKernelSpec s;
                 s.gamma = gamma;
                 s.n_angle = n_angle;
                 s.n_azimuth = n_azimuth;
                 s.validate();
                 return CollisionOperator(PhaseGrid(1, d_v, 4, nv, v_max), s);
             }),
             py::arg("d_v") = 2, py::arg("nv") = 24, py::arg("v_max") = 6.0, py::arg("gamma") = 1.0,
             py::arg("n_angle") = 16, py::arg("n_azimuth") = 16)
        .def_property_readonly("v_nodes",
                               [](const CollisionOperator& op) { return rows(op.grid().v_nodes(), op.grid().d_v()); })
        .def_property_readonly("v_weights", [](const CollisionOperator& op) { return array_of(op.grid().v_weights()); })
        .def_property_readonly("mu", [](const CollisionOperator& op) { return array_of(op.mu()); })
        .def_property_readonly("nu", [](const CollisionOperator& op) { return array_of(op.nu()); })
        .def("nu_at", [](const CollisionOperator& op, const std::vector<double>& v) { return op.nu_at(to_vec(v)); })
        .def("apply_K",
             [](const CollisionOperator& op, py::array_t<double, py::array::c_style | py::array::forcecast> f) {
                 auto vals = values_of(f, op.grid().n_v_cells());
                 return array_of(op.apply_K(vals.data()));
             })
        .def("gamma_gain",
             [](const CollisionOperator& op, py::array_t<double, py::array::c_style | py::array::forcecast> f1,
                py::array_t<double, py::array::c_style | py::array::forcecast> f2) {
                 auto a = values_of(f1, op.grid().n_v_cells()), b = values_of(f2, op.grid().n_v_cells());
                 return array_of(op.gamma_gain(a.data(), b.data()));
             })
        .def(
            "collision",
            [](const CollisionOperator& op, py::array_t<double, py::array::c_style | py::array::forcecast> F1,
               py::array_t<double, py::array::c_style | py::array::forcecast> F2, bool maxwellian_extension) {
                auto a = values_of(F1, op.grid().n_v_cells()), b = values_of(F2, op.grid().n_v_cells());
                VelocitySlice s1{a.data(), 1.0, maxwellian_extension, 1.0}, s2{b.data(), 1.0, maxwellian_extension, 1.0};
                std::vector<double> gain(a.size()), loss(a.size());
                for (std::size_t i = 0; i < a.size(); ++i) {
                    gain[i] = op.q_gain(s1, s2, op.grid().v_nodes()[i]);
                    loss[i] = op.q_loss(s1, s2, op.grid().v_nodes()[i]);
                }
                return py::make_tuple(array_of(gain), array_of(loss));
            },
            py::arg("F1"), py::arg("F2"), py::arg("maxwellian_extension") = false,
            "Gain and loss parts of Q(F1, F2) at the lattice nodes.");

    m.def(
        "run",
        [](const std::string& text) {
            auto cfg = parse_config_text(text);
            RunResult res;
            {
                py::gil_scoped_release release;
                res = run(cfg);
            }
            PotentialField phi(cfg.grid.d_x, cfg.potential.modes, cfg.potential.shift);
            const int n_deg = degenerate_directions(phi, cfg.grid.d_v).n0();
            py::dict d;
            d["records"] = records_table(res.records, n_deg, cfg.grid.d_v);
            d["summary"] = json_loads(summary_json(res.summary, cfg));
            d["picard"] = res.summary.picard_ran ? json_loads(picard_report_json(res.picard)) : py::object(py::none());
            d["config_hash"] = config_hash(cfg);
            return d;
        },
        py::arg("config_json"), "Full run; returns diagnostics records, summary and Picard report.");
    m.def(
        "run_to_directory",
        [](const std::string& text, const std::string& out_dir) {
            auto cfg = parse_config_text(text);
            py::gil_scoped_release release;
            return manifest_json(run_command(cfg, out_dir));
        },
        py::arg("config_json"), py::arg("out_dir"), "Writes the run artifacts; returns the manifest JSON.");
    m.def(
        "verify_bounds",
        [](const std::string& text, std::size_t pairs, std::size_t slices) {
            auto cfg = parse_config_text(text);
            PhaseGrid g(cfg.grid.d_x, cfg.grid.d_v, cfg.grid.nx, cfg.grid.nv, cfg.grid.v_max, cfg.grid.tail_tol);
            CollisionOperator op(g, cfg.kernel);
            BoundOptions o;
            o.seed = cfg.seed;
            o.kernel_pairs = pairs;
            o.slices = slices;
            std::vector<BoundResult> res;
            {
                py::gil_scoped_release release;
                res = verify_bounds(op, o);
            }
            py::list out;
            for (const auto& b : res) out.append(bound_dict(b));
            return out;
        },
        py::arg("config_json"), py::arg("pairs") = 10000, py::arg("slices") = 100);
}
