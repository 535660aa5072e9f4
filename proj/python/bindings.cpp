#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lindopt/archive.hpp"
#include "lindopt/experiments.hpp"

namespace py = pybind11;
using namespace lindopt;

namespace {

Model parse_model(const std::string& name) {
  if (name == "kitaev") return Model::kitaev;
  if (name == "pspl") return Model::pspl;
  throw py::value_error("model must be 'kitaev' or 'pspl'");
}

std::vector<Matrix> layers_of(const IsometryVector& xv) {
  std::vector<Matrix> out;
  for (const auto& l : xv.layers) out.push_back(l.matrix);
  return out;
}

IsometryVector isometries_from(const std::vector<Matrix>& layers, int n_tau) {
  IsometryVector xv;
  xv.schedule = splitting::layer_schedule(n_tau);
  if (static_cast<int>(layers.size()) != xv.schedule.layer_count())
    throw py::value_error("expected 2*n_tau + 1 layers");
  for (const Matrix& l : layers) xv.layers.push_back(StiefelPoint{l});
  return xv;
}

struct PyProblem {
  experiments::ProblemSetup setup;
  LindbladModel model;
  double tau;
  int n_tau;
};

PyProblem make_py_problem(const std::string& model_name, double tau, int n_tau, int rank, int sites, double gamma,
                          double alpha0, double alpha1, const std::string& directions) {
  LindbladModel model = lindblad::make_model(parse_model(model_name), gamma);
  DirectionKind dirs = directions == "projected-unit" ? DirectionKind::projected_unit : DirectionKind::canonical;
  if (rank <= 0) {
    Dissipator d = lindblad::local_dissipator(model.jump_ops);
    rank = chanrep::choi_natural_rank(
        chanrep::superop_to_choi(Superoperator{lindblad::expm(tau / n_tau * d.matrix), 2, 2}));
  }
  return PyProblem{experiments::make_problem(model, tau, n_tau, rank, sites, MetricParams{alpha0, alpha1}, dirs),
                   model, tau, n_tau};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Riemannian optimization of nearest-neighbor Lindbladian splittings";

  // channel representations
  m.def("vec_row", &chanrep::vec_row, py::arg("matrix"));
  m.def(
      "unvec_row", [](const Vector& v) { return chanrep::unvec_row(v); }, py::arg("vector"));
  m.def(
      "superop_to_choi",
      [](const Matrix& s) { return chanrep::superop_to_choi(Superoperator{s, 2, 2}).matrix; },
      py::arg("superop"), "Choi matrix of a two-site superoperator (d = 2).");
  m.def(
      "choi_to_kraus",
      [](const Matrix& c, int rank) { return chanrep::choi_to_kraus(ChoiMatrix{c}, rank).ops; },
      py::arg("choi"), py::arg("rank"));
  m.def(
      "kraus_to_stiefel",
      [](const std::vector<Matrix>& ops) { return chanrep::kraus_to_stiefel(KrausSet{ops}).matrix; },
      py::arg("kraus_ops"));
  m.def(
      "stiefel_to_superop", [](const Matrix& x) { return chanrep::stiefel_to_superop(StiefelPoint{x}).matrix; },
      py::arg("stiefel_point"));
  m.def(
      "choi_rank",
      [](const Matrix& s, int sites, double tol) { return chanrep::choi_rank(Superoperator{s, sites, 2}, tol); },
      py::arg("superop"), py::arg("sites"), py::arg("tol") = 1e-10);

  // models and generators
  m.def(
      "jump_operators",
      [](const std::string& model, double gamma) { return lindblad::jump_operators(parse_model(model), gamma); },
      py::arg("model"), py::arg("gamma") = 1.0);
  m.def(
      "local_dissipator",
      [](const std::vector<Matrix>& jump_ops) { return lindblad::local_dissipator(jump_ops).matrix; },
      py::arg("jump_ops"));
  m.def(
      "full_liouvillian",
      [](const std::string& model, int sites, double gamma) {
        return lindblad::full_liouvillian(lindblad::make_model(parse_model(model), gamma), sites).matrix;
      },
      py::arg("model"), py::arg("sites"), py::arg("gamma") = 1.0);
  m.def("expm", &lindblad::expm, py::arg("matrix"));

  // splitting
  m.def(
      "layer_count", [](int n_tau) { return splitting::layer_schedule(n_tau).layer_count(); }, py::arg("n_tau"));
  m.def(
      "trotter_error",
      [](const std::string& model, double tau, int n_tau, int sites, double gamma) {
        return splitting::trotter_error(lindblad::make_model(parse_model(model), gamma), tau, n_tau, sites);
      },
      py::arg("model"), py::arg("tau"), py::arg("n_tau"), py::arg("sites") = 4, py::arg("gamma") = 1.0);
  m.def(
      "build_ansatz",
      [](const std::string& model, double tau, int n_tau, int rank, double gamma) {
        LindbladModel m_ = lindblad::make_model(parse_model(model), gamma);
        Dissipator d = lindblad::local_dissipator(m_.jump_ops);
        return layers_of(
            splitting::build_ansatz(splitting::build_trotter_layers(d, tau, n_tau), splitting::layer_schedule(n_tau), rank));
      },
      py::arg("model"), py::arg("tau"), py::arg("n_tau"), py::arg("rank"), py::arg("gamma") = 1.0);
  m.def(
      "compose_global",
      [](const std::vector<Matrix>& layers, int n_tau, int sites) {
        return splitting::compose_global(isometries_from(layers, n_tau), sites).matrix;
      },
      py::arg("layers"), py::arg("n_tau"), py::arg("sites"));

  // experiments
  m.def("random_density_matrix", &experiments::random_density_matrix, py::arg("dim"), py::arg("seed"));
  m.def("average_error", &experiments::average_error, py::arg("scheme_superop"), py::arg("reference"),
        py::arg("n_samples"), py::arg("seed"));

  // optimization
  m.def(
      "optimize",
      [](const std::string& model, double tau, int n_tau, int rank, int sites, int iters, double gamma,
         double alpha0, double alpha1, const std::string& directions, int threads) {
        PyProblem p = make_py_problem(model, tau, n_tau, rank, sites, gamma, alpha0, alpha1, directions);
        TrustRegionConfig cfg;
        cfg.max_outer = iters;
        cfg.threads = threads;
        OptimRecord rec = optim::trust_region_run(p.setup.objective, p.setup.ansatz, cfg);
        py::dict out;
        out["cost_history"] = rec.cost_history;
        out["initial_cost"] = rec.initial_cost;
        out["final_cost"] = rec.final_cost;
        out["dof"] = rec.dof;
        out["stop_reason"] = rec.stop_reason;
        out["isometries"] = layers_of(rec.final_isometries);
        return out;
      },
      py::arg("model"), py::arg("tau") = 1.0, py::arg("n_tau") = 1, py::arg("rank") = 0, py::arg("sites") = 4,
      py::arg("iters") = 100, py::arg("gamma") = 1.0, py::arg("alpha0") = 1.0, py::arg("alpha1") = 0.5,
      py::arg("directions") = "canonical", py::arg("threads") = 0);
  m.def(
      "cost",
      [](const std::string& model, double tau, int n_tau, int rank, int sites, const std::vector<Matrix>& layers,
         double gamma) {
        PyProblem p = make_py_problem(model, tau, n_tau, rank, sites, gamma, 1.0, 0.5, "canonical");
        return optim::cost(isometries_from(layers, n_tau), p.setup.objective);
      },
      py::arg("model"), py::arg("tau"), py::arg("n_tau"), py::arg("rank"), py::arg("sites"), py::arg("layers"),
      py::arg("gamma") = 1.0);

  m.attr("__version__") = "1.0.0";
}
