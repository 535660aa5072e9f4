// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line. Expensive optimization artifacts are cached and reused across
// criteria, so the binary is meant to run as a whole (sequentially).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include "lindopt/archive.hpp"
#include "lindopt/cli.hpp"
#include "lindopt/errors.hpp"
#include "lindopt/experiments.hpp"
#include "test_support.hpp"

using namespace lindopt;
using namespace lindopt::experiments;
using namespace lindopt::optim;
namespace fs = std::filesystem;

namespace {

void report(const char* id, bool ok, const std::string& detail) {
  std::printf("[%s] %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  CHECK_MESSAGE(ok, doctest::String(id), ": ", doctest::String(detail.c_str()));
}

std::string fmt(const char* pattern, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

struct Cache {
  std::optional<OptimRecord> pspl_r10_n1;    // criterion 6a, reused by 8
  std::optional<OptimRecord> pspl_r5_n1;     // criterion 6b
  std::optional<OptimRecord> kitaev_n4_r2;   // criterion 6c, reused by 9
  double pspl_baseline_n1 = 0.0;
};

Cache& cache() {
  static Cache c;
  return c;
}

OptimRecord run_optimizer(Model m, double tau, int n_tau, int rank, int iters,
                          MetricParams metric = canonical_metric(),
                          DirectionKind dirs = DirectionKind::canonical) {
  auto model = lindblad::make_model(m);
  ProblemSetup s = make_problem(model, tau, n_tau, rank, 4, metric, dirs);
  TrustRegionConfig cfg;
  cfg.max_outer = iters;
  return trust_region_run(s.objective, s.ansatz, cfg);
}

Matrix two_site_channel(Model m, double tau) {
  Dissipator d = lindblad::local_dissipator(lindblad::jump_operators(m, 1.0));
  return lindblad::expm(tau * d.matrix);
}

}  // namespace

TEST_CASE("criterion 1: channel pipeline roundtrip") {
  double worst = 0;
  for (Model m : {Model::kitaev, Model::pspl})
    for (double tau : {0.1, 0.5, 1.0}) {
      Matrix lam = two_site_channel(m, tau);
      Superoperator ch{lam, 2, 2};
      const int natural = chanrep::choi_natural_rank(chanrep::superop_to_choi(ch));
      Matrix rebuilt = chanrep::stiefel_to_superop(chanrep::superop_to_stiefel(ch, natural)).matrix;
      worst = std::max(worst, (rebuilt - lam).norm());
    }
  report("C1", worst < 1e-10, fmt("S_P(S_T(channel)) roundtrip worst error %.2e < 1e-10", worst));
}

TEST_CASE("criterion 2: natural Choi ranks") {
  const int pspl = chanrep::choi_natural_rank(chanrep::superop_to_choi(Superoperator{two_site_channel(Model::pspl, 1.0), 2, 2}));
  const int kitaev = chanrep::choi_natural_rank(chanrep::superop_to_choi(Superoperator{two_site_channel(Model::kitaev, 1.0), 2, 2}));
  report("C2", pspl == 10 && kitaev == 2, fmt("PSPL rank %.0f (want 10), Kitaev rank %.0f (want 2)", pspl, kitaev));
}

TEST_CASE("criterion 3: full-system rank tables") {
  auto pspl = lindblad::make_model(Model::pspl);
  auto kitaev = lindblad::make_model(Model::kitaev);
  const Matrix pspl_exact = lindblad::expm(1.0 * lindblad::full_liouvillian(pspl, 4).matrix);
  const Matrix kitaev_exact = lindblad::expm(0.5 * lindblad::full_liouvillian(kitaev, 4).matrix);
  ProblemSetup pspl_r2 = make_problem(pspl, 1.0, 1, 2, 4);
  const Matrix pspl_r2_ansatz = splitting::compose_global(pspl_r2.ansatz, 4).matrix;
  std::vector<Matrix> kitaev_ansatz;
  for (int r : {2, 4, 8, 16}) {
    ProblemSetup s = make_problem(kitaev, 0.5, 4, r, 4);
    kitaev_ansatz.push_back(splitting::compose_global(s.ansatz, 4).matrix);
  }
  const Matrix trot1 = splitting::exact_trotter_superop(kitaev, 1.0, 1, 4);
  const Matrix trot2 = splitting::exact_trotter_superop(kitaev, 1.0, 2, 4);

  auto all_match = [&](double tol) {
    if (chanrep::choi_rank(Superoperator{pspl_exact, 4, 2}, tol) != 256) return false;
    if (chanrep::choi_rank(Superoperator{pspl_r2_ansatz, 4, 2}, tol) != 53) return false;
    if (chanrep::choi_rank(Superoperator{kitaev_exact, 4, 2}, tol) != 45) return false;
    for (const Matrix& s : kitaev_ansatz)
      if (chanrep::choi_rank(Superoperator{s, 4, 2}, tol) != 45) return false;
    if (chanrep::choi_rank(Superoperator{trot1, 4, 2}, tol) != 36) return false;
    if (chanrep::choi_rank(Superoperator{trot2, 4, 2}, tol) != 45) return false;
    return true;
  };

  if (all_match(1e-10)) {
    report("C3", true, "all eight table integers match at the default tolerance 1e-10");
    return;
  }
  // tolerance-sensitivity fallback within [1e-12, 1e-8]
  for (double tol : {1e-12, 3e-12, 1e-11, 3e-11, 1e-10, 3e-10, 1e-9, 3e-9, 1e-8}) {
    if (all_match(tol)) {
      report("C3", true, fmt("table integers match simultaneously at tolerance %.0e", tol));
      return;
    }
  }
  report("C3", false, "no tolerance in [1e-12, 1e-8] reproduces all table integers");
}

TEST_CASE("criterion 4: degree-of-freedom accounting") {
  Objective o1;
  o1.schedule = splitting::layer_schedule(1);
  o1.rank = 10;
  o1.reference = Superoperator{Matrix::Identity(256, 256), 4, 2};
  Objective o4 = o1;
  o4.schedule = splitting::layer_schedule(4);
  const Index d1 = coordinate_count(o1);
  const Index d4 = coordinate_count(o4);
  report("C4", d1 == 450 && d4 == 1350, fmt("DOF(m=3,R=10) = %.0f (want 450), DOF(m=9,R=10) = %.0f (want 1350)",
                                            double(d1), double(d4)));
}

TEST_CASE("criterion 5: second-order splitting error") {
  auto kitaev = lindblad::make_model(Model::kitaev);
  std::vector<double> lx, ly;
  for (int n_tau : {4, 8, 16, 32}) {
    lx.push_back(std::log(double(n_tau)));
    ly.push_back(std::log(splitting::trotter_error(kitaev, 1.0, n_tau, 4)));
  }
  double mx = 0, my = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / lx.size();
    my += ly[i] / ly.size();
  }
  double num = 0, den = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = -num / den;
  report("C5", std::abs(slope - 2.0) < 0.3, fmt("log-log slope %.3f within 2.0 +- 0.3", slope));
}

TEST_CASE("criterion 7: property suite") {
  bool ok = true;
  std::string detail;

  // tangent projection: idempotence and orthogonality
  {
    double worst = 0;
    for (int trial = 0; trial < 5; ++trial) {
      StiefelPoint x = testing::random_stiefel(20, 4, 500 + trial);
      Matrix y = testing::random_matrix(20, 4, 600 + trial);
      Matrix t = stiefel::project_tangent(y, x);
      worst = std::max(worst, (stiefel::project_tangent(t, x) - t).norm());
      worst = std::max(worst, std::abs(((y - t).transpose() * t).trace()));
    }
    ok = ok && worst < 1e-12;
    detail += fmt("projection %.1e; ", worst);
  }

  // isometry after every retraction
  {
    double worst = 0;
    StiefelPoint x = testing::random_stiefel(40, 4, 7);
    for (int step = 0; step < 20; ++step) {
      x = stiefel::retract_polar(x, 0.3 * testing::random_tangent(x, 800 + step));
      worst = std::max(worst, (x.matrix.transpose() * x.matrix - Matrix::Identity(4, 4)).norm());
    }
    ok = ok && worst < 1e-12;
    detail += fmt("retraction isometry %.1e; ", worst);
  }

  auto pspl = lindblad::make_model(Model::pspl);
  ProblemSetup s = make_problem(pspl, 1.0, 1, 10, 4);

  // gradient against finite differences along 10 random tangent directions
  {
    const auto grads = riemannian_gradient(s.ansatz, s.objective);
    double worst = 0;
    const double t = 1e-5;
    for (int trial = 0; trial < 10; ++trial) {
      IsometryVector xp = s.ansatz, xm = s.ansatz;
      double dot = 0, nz = 0;
      std::vector<Matrix> zs;
      for (int a = 0; a < 3; ++a) zs.push_back(testing::random_tangent(s.ansatz.layers[a], 900 + 10 * trial + a));
      for (auto& z : zs) nz += z.squaredNorm();
      for (int a = 0; a < 3; ++a) {
        zs[a] /= std::sqrt(nz);
        xp.layers[a] = stiefel::retract_polar(s.ansatz.layers[a], t * zs[a]);
        xm.layers[a] = stiefel::retract_polar(s.ansatz.layers[a], -t * zs[a]);
        dot += stiefel::metric_inner(grads[a], zs[a], s.ansatz.layers[a], s.objective.metric);
      }
      const double fd = (cost(xp, s.objective) - cost(xm, s.objective)) / (2 * t);
      worst = std::max(worst, std::abs(dot - fd) / std::max(1e-30, std::abs(fd)));
    }
    ok = ok && worst < 1e-5;
    detail += fmt("gradient FD %.1e; ", worst);
  }

  // dense Hessian symmetry before symmetrization
  {
    Matrix h = build_hessian(s.ansatz, s.objective);
    const double asym = (h - h.transpose()).norm() / h.norm();
    ok = ok && asym < 1e-4;
    detail += fmt("hessian asym %.1e; ", asym);
  }

  // quadratic model of the pullback: cubic remainder ratio test
  {
    const auto grads = riemannian_gradient(s.ansatz, s.objective);
    std::vector<Matrix> zs;
    double nz = 0;
    for (int a = 0; a < 3; ++a) zs.push_back(testing::random_tangent(s.ansatz.layers[a], 1700 + a));
    for (const auto& z : zs) nz += z.squaredNorm();
    for (auto& z : zs) z /= std::sqrt(nz);
    auto hz = hess_vec(s.ansatz, zs, s.objective);
    const double f0 = cost(s.ansatz, s.objective);
    double gd = 0, quad = 0;
    const double conn = 2.0 * (s.objective.metric.alpha0 - s.objective.metric.alpha1) / s.objective.metric.alpha0;
    for (int a = 0; a < 3; ++a) {
      gd += stiefel::metric_inner(grads[a], zs[a], s.ansatz.layers[a], s.objective.metric);
      quad += stiefel::metric_inner(hz[a], zs[a], s.ansatz.layers[a], s.objective.metric);
      const Matrix& x = s.ansatz.layers[a].matrix;
      const Matrix v =
          conn * (zs[a] * (zs[a].transpose() * x) - x * (x.transpose() * (zs[a] * (zs[a].transpose() * x))));
      quad += stiefel::metric_inner(grads[a], v, s.ansatz.layers[a], s.objective.metric);
    }
    auto rem = [&](double t) {
      IsometryVector xt = s.ansatz;
      for (int a = 0; a < 3; ++a) xt.layers[a] = stiefel::retract_polar(s.ansatz.layers[a], t * zs[a]);
      return std::abs(cost(xt, s.objective) - (f0 + t * gd + 0.5 * t * t * quad));
    };
    const double c1 = rem(1e-1) / 1e-3, c2 = rem(1e-2) / 1e-6;
    ok = ok && c2 < 5.0 * c1 + 1e-6;
    detail += fmt("taylor c(0.1)=%.2e c(0.01)=%.2e; ", c1, c2);
  }

  // trace preservation of composed superoperators
  {
    const Vector vid = chanrep::vec_row(Matrix::Identity(16, 16));
    double worst = 0;
    LayerSchedule sched = splitting::layer_schedule(2);
    IsometryVector xv;
    xv.schedule = sched;
    for (int a = 0; a < sched.layer_count(); ++a) xv.layers.push_back(testing::random_stiefel(12, 4, 1800 + a));
    Matrix comp = splitting::compose_global(xv, 4).matrix;
    worst = std::max(worst, (comp.transpose() * vid - vid).norm());
    Matrix ansatz_comp = splitting::compose_global(s.ansatz, 4).matrix;
    worst = std::max(worst, (ansatz_comp.transpose() * vid - vid).norm());
    ok = ok && worst < 1e-10;
    detail += fmt("trace preservation %.1e; ", worst);
  }

  // rank bound on studied instances
  {
    bool bound_ok = true;
    for (int rank : {2, 3}) {
      ProblemSetup inst = make_problem(pspl, 1.0, 1, rank, 4);
      const int rn = chanrep::choi_rank(splitting::compose_global(inst.ansatz, 4));
      const double cap = std::pow(double(rank), 6.0);
      bound_ok = bound_ok && rn <= cap;
    }
    ok = ok && bound_ok;
    detail += std::string("rank bound ") + (bound_ok ? "holds" : "violated");
  }

  report("C7", ok, detail);
}

TEST_CASE("criterion 10: deterministic command outputs") {
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  };
  const fs::path dir1 = fs::temp_directory_path() / "lindopt_accept_1";
  const fs::path dir2 = fs::temp_directory_path() / "lindopt_accept_2";
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  bool ok = true;
  for (const fs::path& dir : {dir1, dir2}) {
    ok = ok && cli::run({"optimize", "--model", "kitaev", "--tau", "1", "--n-tau", "1", "--sites", "4", "--rank",
                         "2", "--iters", "2", "--seed", "777", "--out-dir", dir.string()}) == 0;
  }
  const bool same_csv = slurp(dir1 / "cost_history.csv") == slurp(dir2 / "cost_history.csv");
  const bool same_summary = slurp(dir1 / "summary.json") == slurp(dir2 / "summary.json");
  const bool same_archive = slurp(dir1 / "isometries.bin") == slurp(dir2 / "isometries.bin");
  ok = ok && same_csv && same_summary && same_archive && !slurp(dir1 / "cost_history.csv").empty();
  report("C10", ok, std::string("byte-identical reruns: csv ") + (same_csv ? "yes" : "no") + ", summary " +
                        (same_summary ? "yes" : "no") + ", archive " + (same_archive ? "yes" : "no"));
}

TEST_CASE("criterion 6: optimizer efficacy") {
  auto& c = cache();
  auto pspl = lindblad::make_model(Model::pspl);
  c.pspl_baseline_n1 = splitting::trotter_error(pspl, 1.0, 1, 4);

  c.pspl_r10_n1 = run_optimizer(Model::pspl, 1.0, 1, 10, 100);
  const bool a_ok = c.pspl_r10_n1->final_cost <= 0.2 * c.pspl_baseline_n1;

  c.pspl_r5_n1 = run_optimizer(Model::pspl, 1.0, 1, 5, 50);
  int crossed = -1;
  for (size_t i = 0; i < c.pspl_r5_n1->cost_history.size(); ++i)
    if (c.pspl_r5_n1->cost_history[i] < c.pspl_baseline_n1) {
      crossed = static_cast<int>(i);
      break;
    }
  const bool b_ok = crossed >= 0 && crossed <= 50;

  c.kitaev_n4_r2 = run_optimizer(Model::kitaev, 0.5, 4, 2, 60);
  const double ratio = c.kitaev_n4_r2->final_cost / c.kitaev_n4_r2->initial_cost;
  const bool c_ok = ratio > 0.25 && ratio < 0.85;

  // accepted-step monotonicity across all three records (criterion 7 support)
  bool monotone = true;
  for (const OptimRecord* rec : {&*c.pspl_r10_n1, &*c.pspl_r5_n1, &*c.kitaev_n4_r2})
    for (size_t i = 0; i + 1 < rec->cost_history.size(); ++i)
      if (rec->accepted[i] && rec->cost_history[i + 1] > rec->cost_history[i]) monotone = false;

  report("C6", a_ok && b_ok && c_ok && monotone,
         fmt("PSPL R=10 final/baseline %.3f (<= 0.2); R=5 crosses baseline at iter %.0f (<= 50); ",
             c.pspl_r10_n1->final_cost / c.pspl_baseline_n1, double(crossed)) +
             fmt("Kitaev ratio %.3f in (0.25, 0.85); accepted steps monotone: %.0f", ratio, double(monotone)));
}

TEST_CASE("criterion 9: metric and direction comparison") {
  auto& c = cache();
  REQUIRE(c.kitaev_n4_r2.has_value());
  // canonical run shares the criterion-6 trajectory (deterministic); compare at iteration 20
  const double canonical20 = c.kitaev_n4_r2->cost_history[20];

  OptimRecord euclid = run_optimizer(Model::kitaev, 0.5, 4, 2, 20, euclidean_metric(), DirectionKind::canonical);
  OptimRecord projected =
      run_optimizer(Model::kitaev, 0.5, 4, 2, 20, euclidean_metric(), DirectionKind::projected_unit);

  const bool canon_best = canonical20 <= euclid.final_cost;
  const bool projected_worst =
      projected.final_cost >= euclid.final_cost && projected.final_cost >= canonical20;
  report("C9", canon_best && projected_worst,
         fmt("final costs after 20 iters: canonical %.4e <= euclidean %.4e; projected-unit %.4e is highest",
             canonical20, euclid.final_cost, projected.final_cost));
}

TEST_CASE("criterion 8: embedding into a larger system") {
  auto& c = cache();
  REQUIRE(c.pspl_r10_n1.has_value());

  bool ok = true;
  std::string detail;

  // Kitaev tau=1 R=2: optimize at N=4 for n_tau in {1,2}, embed to N=6
  auto kitaev = lindblad::make_model(Model::kitaev);
  for (int n_tau : {1, 2}) {
    OptimRecord rec = run_optimizer(Model::kitaev, 1.0, n_tau, 2, 40);
    EmbedResult res = embed_larger_n(rec.final_isometries, kitaev, 1.0, 6);
    const double n4_err = rec.final_cost;
    const bool below = res.riemannian_error < res.trotter_error;
    const double logratio = std::log10(res.riemannian_error / n4_err);
    ok = ok && below && std::abs(logratio) < 0.5;
    detail += fmt("kitaev n_tau=%.0f: riem_N6 %.3e < trot_N6 %.3e, ", double(n_tau), res.riemannian_error,
                  res.trotter_error) +
              fmt("|log10 N6/N4| %.2f; ", std::abs(logratio));
  }

  // PSPL tau=1 R=10: n_tau=1 reuses the criterion-6 run; n_tau=2 is optimized here
  auto pspl = lindblad::make_model(Model::pspl);
  {
    EmbedResult res = embed_larger_n(c.pspl_r10_n1->final_isometries, pspl, 1.0, 6);
    ok = ok && res.riemannian_error < res.trotter_error;
    detail += fmt("pspl n1: riem_N6 %.3e < trot_N6 %.3e; ", res.riemannian_error, res.trotter_error);
  }
  {
    OptimRecord rec = run_optimizer(Model::pspl, 1.0, 2, 10, 20);
    EmbedResult res = embed_larger_n(rec.final_isometries, pspl, 1.0, 6);
    ok = ok && res.riemannian_error < res.trotter_error;
    detail += fmt("pspl n2: riem_N6 %.3e < trot_N6 %.3e", res.riemannian_error, res.trotter_error);
  }

  report("C8", ok, detail);
}
