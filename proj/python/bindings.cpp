#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stlrisk/error.hpp"
#include "stlrisk/formula.hpp"
#include "stlrisk/milp.hpp"
#include "stlrisk/mpc.hpp"
#include "stlrisk/risk_measures.hpp"
#include "stlrisk/risk_semantics.hpp"
#include "stlrisk/semantics.hpp"
#include "stlrisk/stl_encoding.hpp"
#include "stlrisk/tightening.hpp"

namespace py = pybind11;
using namespace stlrisk;

namespace {

Run to_run(const Eigen::MatrixXd& states) {
  Run run;
  for (Eigen::Index t = 0; t < states.rows(); ++t) run.states.push_back(states.row(t).transpose());
  return run;
}

Formula parse_text(const std::string& text, const std::map<std::string, std::pair<Eigen::VectorXd, double>>& preds,
                   double period) {
  PredicateEnv env;
  for (const auto& [name, ab] : preds) env.emplace(name, AffinePredicate(ab.first, ab.second, name));
  ParseOptions opts;
  opts.env = &env;
  opts.period = period;
  return parse(text, opts);
}

RiskBounds bounds(double default_delta, const std::map<std::string, double>& by_name) {
  RiskBounds b;
  b.default_delta = default_delta;
  for (const auto& [k, v] : by_name) b.by_name[k] = v;
  return b;
}

LtvSystem lti(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& w_cov, int horizon) {
  return LtvSystem::time_invariant(A, B, Eigen::VectorXd::Zero(A.rows()), w_cov, horizon);
}

py::dict summary(const SimResult& r) {
  py::dict d;
  d["mode"] = std::string(to_string(r.mode));
  d["runs"] = r.runs.size();
  d["safety_violations"] = r.safety_violations;
  d["goal_reached"] = r.goal_reached;
  d["runs_with_infeasibility"] = r.runs_with_infeasibility;
  d["median_safety_margin"] = r.median_safety_margin();
  d["seconds"] = r.seconds;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Risk-aware signal temporal logic: semantics, tightening and MILP control";

  py::register_exception<Error>(m, "StlRiskError", PyExc_ValueError);

  py::class_<Formula>(m, "Formula")
      .def("__str__", [](const Formula& f) { return print(f); })
      .def("__repr__", [](const Formula& f) { return "Formula(" + print(f) + ")"; })
      .def("__eq__", [](const Formula& a, const Formula& b) { return a == b; })
      .def_property_readonly("horizon", [](const Formula& f) { return horizon(f); });

  m.def("parse", &parse_text, py::arg("text"),
        py::arg("predicates") = std::map<std::string, std::pair<Eigen::VectorXd, double>>{},
        py::arg("period") = 0.0, "Parse formula text (negation normal form). predicates maps name -> (a, b).");

  m.def(
      "robustness", [](const Eigen::MatrixXd& states, const Formula& f, int t) { return robustness(to_run(states), t, f); },
      py::arg("states"), py::arg("formula"), py::arg("t") = 0, "Robustness of a run given as a (T+1) x n array.");
  m.def(
      "satisfies", [](const Eigen::MatrixXd& states, const Formula& f, int t) { return satisfies(to_run(states), t, f); },
      py::arg("states"), py::arg("formula"), py::arg("t") = 0);

  m.def(
      "eval_risk",
      [](const std::string& spec, const std::vector<double>& x) { return eval_risk(RiskSpec::from_string(spec), x); },
      py::arg("spec"), py::arg("samples"), "Empirical risk, spec like 'cvar:0.1'.");
  m.def(
      "stl_risk",
      [](const std::vector<Eigen::MatrixXd>& runs, const Formula& f, const std::string& spec, int t) {
        std::vector<Run> rs;
        for (const auto& r : runs) rs.push_back(to_run(r));
        return stl_risk(Ensemble(std::move(rs)), t, f, RiskSpec::from_string(spec));
      },
      py::arg("runs"), py::arg("formula"), py::arg("spec"), py::arg("t") = 0,
      "STL risk of an ensemble given as a list of (T+1) x n arrays.");
  m.def("drvar_violation_prob", &drvar_violation_prob, py::arg("mean"), py::arg("variance"));

  m.def(
      "tighten",
      [](const Formula& f, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& w_cov,
         double default_delta, const std::map<std::string, double>& by_name) {
        const LtvSystem sys = lti(A, B, w_cov, horizon(f));
        const RiskBounds b = bounds(default_delta, by_name);
        py::list rows;
        for (const auto& r : margin_table(f, sys, b, 0)) {
          rows.append(py::make_tuple(r.predicate, r.sign == Sign::Minus ? "-" : "+", r.time, r.delta, r.margin));
        }
        return py::make_tuple(tighten_formula(f, sys, b, 0), rows);
      },
      py::arg("formula"), py::arg("A"), py::arg("B"), py::arg("w_cov"), py::arg("delta") = 0.1,
      py::arg("by_name") = std::map<std::string, double>{},
      "Tightened formula and (predicate, sign, time, delta, margin) rows.");

  m.def(
      "plan",
      [](const Formula& f, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::VectorXd& x0,
         const Eigen::VectorXd& u_max, double input_cost) {
        const int H = horizon(f);
        const LtvSystem sys = lti(A, B, Eigen::MatrixXd::Zero(A.rows(), A.rows()), H);
        EncodeOptions eo;
        eo.simplify = true;
        eo.split_inputs = true;
        eo.input_lower = -u_max;
        eo.input_upper = u_max;
        StlEncoding enc = encode_deterministic_stl(f, sys, {x0}, H, eo);
        for (std::size_t s = 0; s < enc.input_vars.size(); ++s) {
          for (int v : enc.input_vars[s]) enc.model.add_objective(v, input_cost);
          for (int v : enc.input_neg_vars[s]) enc.model.add_objective(v, input_cost);
        }
        const MilpSolution sol = solve_milp(enc.model);
        py::dict out;
        out["status"] = std::string(to_string(sol.status));
        if (sol.has_incumbent) {
          out["objective"] = sol.objective;
          out["states"] = extract_states(enc, sol.x);
          out["inputs"] = extract_inputs(enc, sol.x);
        }
        return out;
      },
      py::arg("formula"), py::arg("A"), py::arg("B"), py::arg("x0"), py::arg("u_max"), py::arg("input_cost") = 1.0,
      "Minimum-effort input sequence satisfying the formula on x+ = Ax + Bu.");

  m.def(
      "run_experiment",
      [](int runs, std::uint64_t seed, int threads, double variance) {
        ExperimentConfig c = ExperimentConfig::scaled();
        c.runs = runs;
        c.seed = seed;
        c.threads = threads;
        c.disturbance_variance = variance;
        SimResult t1, t2;
        {
          py::gil_scoped_release release;
          std::tie(t1, t2) = run_experiment(c);
        }
        return py::make_tuple(summary(t1), summary(t2));
      },
      py::arg("runs") = 100, py::arg("seed") = 1, py::arg("threads") = 0, py::arg("variance") = 0.005,
      "Scaled two-agent experiment: (type1, type2) summaries.");
}
