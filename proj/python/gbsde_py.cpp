#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "gbsde/bsde_solver.hpp"
#include "gbsde/decomposition.hpp"
#include "gbsde/errors.hpp"
#include "gbsde/evaluation.hpp"
#include "gbsde/experiments.hpp"
#include "gbsde/fixed_point.hpp"
#include "gbsde/representation.hpp"

namespace py = pybind11;
using namespace gbsde;

namespace {

std::vector<std::vector<double>> rows(const Process& p) {
    std::vector<std::vector<double>> out;
    for (int k = p.first_step(); k <= p.last_step(); ++k) out.emplace_back(p.step(k).begin(), p.step(k).end());
    return out;
}

Process from_rows(const BinomialTree& tree, int first, const std::vector<std::vector<double>>& r) {
    if (r.empty()) throw ShapeError("process needs at least one step");
    const int last = first + static_cast<int>(r.size()) - 1;
    Process p(tree, first, last);
    for (int k = first; k <= last; ++k) {
        const auto& row = r[k - first];
        if (static_cast<int>(row.size()) != k + 1) throw ShapeError("step " + std::to_string(k) + " needs k+1 values");
        std::copy(row.begin(), row.end(), p.step(k).begin());
    }
    return p;
}

// Python callables may run on worker threads during recovery.
Generator python_generator(const std::string& name, py::function f, double mu, const Modulus& phi,
                           bool zero_at_zero) {
    auto holder = std::make_shared<py::function>(std::move(f));
    return Generator(name, Generator::TimeDriver([holder](double t, double y, double z) {
                         py::gil_scoped_acquire gil;
                         return (*holder)(t, y, z).cast<double>();
                     }),
                     mu, phi, zero_at_zero);
}

py::dict report_dict(const ValidationReport& r) {
    nlohmann::json j = r;
    return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_gbsde, m) {
    m.doc() = "Nonlinear evaluations and BSDEs on a recombining binomial lattice";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
    py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

    py::class_<Modulus>(m, "Modulus")
        .def(py::init([](const std::string& name, std::function<double(double)> fn, double nu) {
                 return Modulus(name, std::move(fn), nu);
             }),
             py::arg("name"), py::arg("fn"), py::arg("nu"))
        .def("__call__", &Modulus::operator())
        .def_property_readonly("nu", &Modulus::nu)
        .def_property_readonly("name", &Modulus::name)
        .def_static("identity", &Modulus::identity)
        .def_static("scaled", &Modulus::scaled)
        .def_static("sqrt", &Modulus::sqrt)
        .def_static("capped_sqrt", &Modulus::capped_sqrt)
        .def_static("saturating", &Modulus::saturating)
        .def_static("zero", &Modulus::zero);
    m.def("check_modulus", [](const Modulus& phi) { return report_dict(check_modulus(phi)); });

    py::class_<Generator>(m, "Generator")
        .def("__call__", [](const Generator& g, double t, double y, double z) { return g(t, y, z); })
        .def_property_readonly("name", &Generator::name)
        .def_property_readonly("mu", &Generator::mu)
        .def_property_readonly("phi", &Generator::phi);
    m.def("make_mu_phi", &make_mu_phi, py::arg("mu"), py::arg("phi"), py::arg("sign") = 1);
    m.def("make_linear", &make_linear, py::arg("a"), py::arg("b"), py::arg("c"));
    m.def("make_constant", &make_constant);
    m.def("make_zero", &make_zero);
    m.def("make_generator", &python_generator, py::arg("name"), py::arg("fn"), py::arg("mu"), py::arg("phi"),
          py::arg("zero_at_zero") = true, "Driver g(t, y, z) from a Python callable.");
    m.def("inf_convolution", [](const Generator& g, double m_, double y, double z, double t) {
              return inf_convolution(g, m_, ConvolutionLattice::around(y, z), t, y, z);
          },
          py::arg("g"), py::arg("m"), py::arg("y"), py::arg("z"), py::arg("t") = 0.0);
    m.def("sup_convolution", [](const Generator& g, double m_, double y, double z, double t) {
              return sup_convolution(g, m_, ConvolutionLattice::around(y, z), t, y, z);
          },
          py::arg("g"), py::arg("m"), py::arg("y"), py::arg("z"), py::arg("t") = 0.0);
    m.def("check_a1", [](const Generator& g, int samples, double radius, std::uint64_t seed, double horizon) {
              A1CheckOptions o;
              o.horizon = horizon;
              return report_dict(check_a1(g, samples, radius, seed, o));
          },
          py::arg("g"), py::arg("samples") = 2000, py::arg("radius") = 5.0, py::arg("seed") = 0,
          py::arg("horizon") = 1.0);

    py::class_<BinomialTree>(m, "BinomialTree")
        .def(py::init<double, int>(), py::arg("horizon"), py::arg("steps"))
        .def_property_readonly("horizon", &BinomialTree::horizon)
        .def_property_readonly("steps", &BinomialTree::steps)
        .def_property_readonly("dt", &BinomialTree::dt)
        .def("time", &BinomialTree::time)
        .def("brownian", &BinomialTree::brownian);

    py::class_<Process>(m, "Process")
        .def(py::init<const BinomialTree&, int, int, double>(), py::arg("tree"), py::arg("first_step"),
             py::arg("last_step"), py::arg("fill") = 0.0)
        .def_static("from_rows", &from_rows, py::arg("tree"), py::arg("first_step"), py::arg("rows"),
                    "Row k - first_step holds the k + 1 node values of step k.")
        .def_static("from_function",
                    [](const BinomialTree& tree, int first, int last, const std::function<double(int, int)>& f) {
                        return Process::from_function(tree, first, last, f);
                    })
        .def_property_readonly("first_step", &Process::first_step)
        .def_property_readonly("last_step", &Process::last_step)
        .def("at", [](const Process& p, int k, int j) {
            if (!p.covers(k) || j < 0 || j > k) throw py::index_error("node outside the process");
            return p.at(k, j);
        })
        .def("rows", &rows)
        .def("sup_norm", py::overload_cast<>(&Process::sup_norm, py::const_));
    m.def("brownian_process", &brownian_process);

    py::class_<LatticeStoppingTime>(m, "StoppingTime")
        .def_static("deterministic", &LatticeStoppingTime::deterministic, py::arg("start_step"), py::arg("step"))
        .def_readonly("start_step", &LatticeStoppingTime::start_step)
        .def_readonly("cap_step", &LatticeStoppingTime::cap_step)
        .def("stopped", &LatticeStoppingTime::stopped)
        .def("capped", &LatticeStoppingTime::capped);
    m.def("hitting_time", &hitting_time, py::arg("tree"), py::arg("start_step"), py::arg("barrier"),
          py::arg("anchor_node") = py::none());
    m.def("precedes", &precedes);

    py::class_<Solution>(m, "Solution")
        .def_readonly("Y", &Solution::Y)
        .def_readonly("Z", &Solution::Z)
        .def_readonly("residual", &Solution::residual);
    m.def("solve",
          [](const BinomialTree& tree, const Generator& g, const Process& terminal, std::optional<Process> gamma,
             std::optional<LatticeStoppingTime> tau) {
              const auto K = gamma ? IntegrandK::from_density(*gamma) : IntegrandK::zero();
              return solve(tree, g, terminal, K, tau.value_or(LatticeStoppingTime::deterministic(0, tree.steps())));
          },
          py::arg("tree"), py::arg("g"), py::arg("terminal"), py::arg("gamma") = py::none(),
          py::arg("tau") = py::none());

    py::class_<Evaluation>(m, "Evaluation")
        .def_static("generator_backed",
                    [](const BinomialTree& tree, const Generator& g) { return Evaluation::generator_backed(tree, g); })
        .def("as_black_box", &Evaluation::as_black_box)
        .def_property_readonly("dominating_mu", &Evaluation::dominating_mu)
        .def_property_readonly("is_generator_backed", &Evaluation::is_generator_backed);
    m.def("evaluate",
          [](const Evaluation& E, int s, int t, const Process& X, std::optional<Process> gamma) {
              return evaluate(E, s, t, X, gamma ? IntegrandK::from_density(*gamma) : IntegrandK::zero());
          },
          py::arg("E"), py::arg("s"), py::arg("t"), py::arg("X"), py::arg("gamma") = py::none());
    m.def("check_axioms", [](const Evaluation& E, int trials, std::uint64_t seed) {
              return report_dict(check_axioms(E, trials, seed));
          },
          py::arg("E"), py::arg("trials") = 200, py::arg("seed") = 0);
    m.def("check_domination", [](const Evaluation& E, int trials, std::uint64_t seed) {
              return report_dict(check_domination(E, trials, seed));
          },
          py::arg("E"), py::arg("trials") = 200, py::arg("seed") = 0);
    m.def("classify", [](const Evaluation& E, const Process& Y) {
        const auto v = classify(E, Y);
        return py::make_tuple(to_string(v.kind), v.max_excess, v.max_deficit);
    });

    m.def("doob_meyer",
          [](const Evaluation& E, const Process& Y, const LatticeStoppingTime& tau, std::vector<double> schedule,
             std::optional<double> target) {
              DoobMeyerOptions o;
              o.schedule = std::move(schedule);
              o.target_residual = target;
              const auto r = doob_meyer(E, Y, tau, o);
              py::dict d;
              d["A_density"] = r.A_density;
              d["g"] = r.g_proc;
              d["Z"] = r.Z;
              d["y"] = r.y;
              d["residual"] = r.residual;
              d["levels"] = r.levels_used;
              d["residuals"] = r.residuals;
              d["report"] = report_dict(r.report);
              return d;
          },
          py::arg("E"), py::arg("Y"), py::arg("tau"), py::arg("schedule") = std::vector<double>{},
          py::arg("target_residual") = py::none());

    m.def("solve_e_bsde",
          [](const Evaluation& E, const std::function<double(int, int, double)>& f, double lambda, const Process& X,
             double tolerance, std::optional<int> piece_steps) {
              FixedPointOptions o;
              o.tolerance = tolerance;
              o.piece_steps = piece_steps;
              const auto problem = make_problem(E, f, lambda, X, 0, E.tree().steps());
              const auto s = solve_e_bsde(problem, o);
              return py::make_tuple(s.y, s.trace.partition, s.trace.changes);
          },
          py::arg("E"), py::arg("f"), py::arg("lam"), py::arg("X"), py::arg("tolerance") = 1e-10,
          py::arg("piece_steps") = py::none());
    m.def("contraction_horizon", &contraction_horizon);

    m.def("quick_recover", &quick_recover, py::arg("E"), py::arg("t_step"), py::arg("y"), py::arg("z"),
          py::arg("h_steps"));
    m.def("recover_generator",
          [](const Evaluation& E, int level, std::pair<double, double> y_range, int y_count,
             std::pair<double, double> z_range, int z_count, bool project, int threads) {
              const auto grid = make_recovery_grid(E.tree(), level, y_range.first, y_range.second, y_count,
                                                   z_range.first, z_range.second, z_count);
              RecoverOptions o;
              o.threads = threads;
              RecoveredGenerator rec;
              {
                  py::gil_scoped_release release;
                  rec = recover_generator(E, grid, o);
              }
              if (!rec.failures.empty()) throw ConvergenceError(rec.failures.front());
              if (project) project_a1(rec);
              py::dict d;
              d["time_steps"] = grid.time_steps;
              d["y_points"] = grid.y_points;
              d["z_points"] = grid.z_points;
              d["values"] = rec.values;
              d["generator"] = rec.to_generator();
              return d;
          },
          py::arg("E"), py::arg("level"), py::arg("y_range"), py::arg("y_count"), py::arg("z_range"),
          py::arg("z_count"), py::arg("project_a1") = true, py::arg("threads") = 1);

    m.def("run_experiment",
          [](const std::string& command, const std::string& config_json) {
              std::ostringstream log;
              int code;
              try {
                  code = run_command(command, parse_config(nlohmann::json::parse(config_json)), log);
              } catch (const std::exception& e) {
                  log << "config error: " << e.what() << "\n";
                  code = exit_config_invalid;
              }
              return py::make_tuple(code, log.str());
          },
          py::arg("command"), py::arg("config_json"),
          "Runs a CLI subcommand on a JSON config; returns (exit_code, log).");
    m.attr("__version__") = engine_version();
}
