#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "massdeath/bounds.hpp"
#include "massdeath/chain.hpp"
#include "massdeath/errors.hpp"
#include "massdeath/infer.hpp"
#include "massdeath/predict.hpp"
#include "massdeath/sim.hpp"
#include "massdeath/specfun.hpp"
#include "massdeath/version.hpp"

namespace py = pybind11;
using namespace massdeath;

namespace {

NegJumpRecord make_record(std::vector<double> times, std::vector<int> magnitudes) {
  NegJumpRecord r;
  r.times = std::move(times);
  r.magnitudes = std::move(magnitudes);
  r.validate();
  return r;
}

py::dict bound_dict(const BoundReport& r) {
  py::dict d;
  d["kind"] = to_string(r.kind);
  d["m"] = r.m;
  d["t"] = r.t;
  d["exact"] = r.exact;
  d["bound"] = r.bound;
  d["truncation"] = r.truncation;
  d["rounding"] = r.rounding;
  d["holds"] = r.holds();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Birth/mass-death chain: closed-form transitions, bounds, prediction and estimation";
  m.attr("__version__") = kVersion;

  auto guard = py::register_exception<NumericalGuardError>(m, "NumericalGuardError", PyExc_ArithmeticError);
  py::register_exception<ConditioningError>(m, "ConditioningError", guard.ptr());
  py::register_exception<UnderflowError>(m, "UnderflowError", guard.ptr());
  py::register_exception<NonConvergenceError>(m, "NonConvergenceError", guard.ptr());

  py::class_<ChainParams>(m, "ChainParams")
      .def_static("from_rates", &ChainParams::from_rates, py::arg("lam"), py::arg("mu"))
      .def_static("from_ratio", &ChainParams::from_ratio, py::arg("theta"), py::arg("mu"))
      .def_property_readonly("lam", &ChainParams::lambda)
      .def_property_readonly("mu", &ChainParams::mu)
      .def_property_readonly("theta", &ChainParams::theta)
      .def("__repr__", [](const ChainParams& p) {
        return "ChainParams(lam=" + std::to_string(p.lambda()) + ", mu=" + std::to_string(p.mu()) + ")";
      });

  py::class_<StateDistribution>(m, "StateDistribution")
      .def_static("point_mass", &StateDistribution::point_mass, py::arg("x"))
      .def_static("from_weights", &StateDistribution::from_weights, py::arg("weights"),
                  py::arg("normalize") = false)
      .def_static("truncated_geometric", &StateDistribution::truncated_geometric, py::arg("p"),
                  py::arg("n_max"))
      .def_property_readonly("weights", [](const StateDistribution& d) {
        return std::vector<double>(d.weights().begin(), d.weights().end());
      })
      .def_property_readonly("tail_mass", &StateDistribution::tail_mass)
      .def("weight", &StateDistribution::weight, py::arg("x"));

  m.def("equilibrium_pmf", [](const ChainParams& p, State n) { return equilibrium(p).pmf(n); },
        py::arg("params"), py::arg("n"));
  m.def("equilibrium", [](const ChainParams& p, double tol) { return equilibrium(p).to_distribution(tol); },
        py::arg("params"), py::arg("tol") = kDefaultTruncationTol);
  m.def("equilibrium_tail", &equilibrium_tail, py::arg("theta"), py::arg("n"));
  m.def("tail_R",
        [](const ChainParams& p, const StateDistribution& start, State n, double t, double max_rel_error) {
          return tail_R(p, start, n, t, TailOptions{max_rel_error});
        },
        py::arg("params"), py::arg("start"), py::arg("n"), py::arg("t"), py::arg("max_rel_error") = 1e-6);
  m.def("transition", &transition, py::arg("params"), py::arg("x"), py::arg("y"), py::arg("t"));
  m.def("transition_row", &transition_row, py::arg("params"), py::arg("x"), py::arg("t"),
        py::arg("tol") = kDefaultTruncationTol);
  m.def("propagate", &propagate, py::arg("params"), py::arg("start"), py::arg("t"),
        py::arg("tol") = kDefaultTruncationTol);

  m.def("link", [](double theta) {
    const auto e = eval_L(theta);
    return py::make_tuple(e.value, e.d1, e.d2);
  }, py::arg("theta"), "L(theta) with its first two derivatives.");
  m.def("solve_link", [](double dbar) { return solve_link(dbar); }, py::arg("dbar"));
  m.def("phi_pmf", &phi_pmf, py::arg("theta"), py::arg("d"));
  m.def("phi_variance", &phi_variance, py::arg("theta"));

  m.def("sample_path",
        [](const ChainParams& p, const StateDistribution& start, double horizon, std::uint64_t seed,
           std::uint64_t stream) {
          const auto path = sample_path(p, start, horizon, seed, stream);
          return py::make_tuple(path.jump_times, path.states);
        },
        py::arg("params"), py::arg("start"), py::arg("horizon"), py::arg("seed"), py::arg("stream") = 0,
        "Jump times and the states they lead to (states[0] is the initial state).");
  m.def("sample_negjumps",
        [](const ChainParams& p, const StateDistribution& start, double horizon, std::uint64_t seed) {
          const auto rec = extract_negjumps(sample_path(p, start, horizon, seed));
          return py::make_tuple(rec.times, rec.magnitudes);
        },
        py::arg("params"), py::arg("start"), py::arg("horizon"), py::arg("seed"));
  m.def("sample_magnitudes", &sample_magnitudes, py::arg("theta"), py::arg("n"), py::arg("seed"),
        py::arg("stream") = 0);

  m.def("estimate_theta", [](const std::vector<int>& sample) {
    const auto r = estimate_theta(sample);
    py::dict d;
    d["theta_hat"] = r.theta_hat;
    d["n"] = r.n;
    d["dbar"] = r.dbar;
    d["se_asymptotic"] = r.se_asymptotic ? py::cast(*r.se_asymptotic) : py::none();
    d["residual"] = r.residual;
    d["iterations"] = r.iterations;
    return d;
  }, py::arg("sample"));
  m.def("asymptotic_se", &asymptotic_se, py::arg("theta0"), py::arg("n"));
  m.def("consistency_bound", &consistency_bound, py::arg("theta0"), py::arg("m"), py::arg("eps"));
  m.def("replicate_estimates", &replicate_estimates, py::arg("theta0"), py::arg("n"), py::arg("reps"),
        py::arg("seed"), py::arg("threads") = 0);

  m.def("kolmogorov_bound", [](const ChainParams& p, const StateDistribution& tau, double t) {
    return bound_dict(kolmogorov_bound(p, tau, t));
  }, py::arg("params"), py::arg("start"), py::arg("t"));
  m.def("moment_bound", [](const ChainParams& p, const StateDistribution& tau, int order, double t) {
    return bound_dict(moment_bound(p, tau, order, t));
  }, py::arg("params"), py::arg("start"), py::arg("m"), py::arg("t"));
  m.def("gini_bound", [](const ChainParams& p, const StateDistribution& tau, double t) {
    return bound_dict(gini_bound(p, tau, t));
  }, py::arg("params"), py::arg("start"), py::arg("t"));

  auto query = [](const ChainParams& p, const StateDistribution& tau, std::vector<double> times,
                  std::vector<int> mags, int xi) {
    return PredictionQuery{p, tau, make_record(std::move(times), std::move(mags)), xi};
  };
  m.def("tail_unseen",
        [query](const ChainParams& p, const StateDistribution& tau, std::vector<double> times,
                std::vector<int> mags, int xi) { return tail_unseen(query(p, tau, times, mags, xi)).value; },
        py::arg("params"), py::arg("start"), py::arg("times"), py::arg("magnitudes"), py::arg("xi"),
        "P(X(t_n) >= xi | record).");
  m.def("expected_unseen",
        [query](const ChainParams& p, const StateDistribution& tau, std::vector<double> times,
                std::vector<int> mags) { return expected_unseen(query(p, tau, times, mags, 0)).value; },
        py::arg("params"), py::arg("start"), py::arg("times"), py::arg("magnitudes"),
        "E[X(t_n) | record].");
  m.def("weights",
        [](const ChainParams& p, const StateDistribution& tau, std::vector<double> times,
           std::vector<int> mags) {
          const auto w = weights(p, tau, make_record(std::move(times), std::move(mags)));
          return py::make_tuple(w.weights, w.tail);
        },
        py::arg("params"), py::arg("start"), py::arg("times"), py::arg("magnitudes"));
}
