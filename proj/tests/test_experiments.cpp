#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lindopt/experiments.hpp"

using namespace lindopt;
using namespace lindopt::experiments;

TEST_CASE("random density matrices") {
  Matrix rho = random_density_matrix(16, 99);
  CHECK(rho.trace() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK((rho - rho.transpose()).norm() < 1e-14);
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues()(0) > -1e-14);

  Matrix again = random_density_matrix(16, 99);
  CHECK((rho - again).norm() == 0.0);
  Matrix other = random_density_matrix(16, 100);
  CHECK((rho - other).norm() > 1e-3);
}

TEST_CASE("average error over sampled states") {
  auto model = lindblad::make_model(Model::pspl);
  const Matrix exact = lindblad::expm(1.0 * lindblad::full_liouvillian(model, 4).matrix);
  CHECK(average_error(exact, exact, 10, 1) == 0.0);

  // monotone decrease of the splitting error with the step count
  double prev = std::numeric_limits<double>::infinity();
  for (int n_tau : {1, 2, 4, 8}) {
    const Matrix composite = splitting::exact_trotter_superop(model, 1.0, n_tau, 4);
    const double err = average_error(composite, exact, 50, 7);
    CHECK(err < prev);
    prev = err;
  }

  // sampling is stable between 250 and 500 draws
  const Matrix composite = splitting::exact_trotter_superop(model, 1.0, 1, 4);
  const double e250 = average_error(composite, exact, 250, 11);
  const double e500 = average_error(composite, exact, 500, 11);
  CHECK(std::abs(e250 - e500) / e500 < 0.05);
}

TEST_CASE("rank study records costs and ranks") {
  auto model = lindblad::make_model(Model::pspl);
  TrustRegionConfig cfg;
  RankStudyResult result = rank_study(model, 1.0, 1, {2, 5}, 0, 4, cfg);
  REQUIRE(result.rows.size() == 2);
  CHECK(result.rows[0].rank == 2);
  CHECK(result.rows[0].rank_before == 53);
  CHECK(result.rows[0].rank_after == 53);
  CHECK(result.rows[1].rank_before == 256);
  for (const auto& row : result.rows) {
    CHECK(row.final_cost == row.initial_cost);  // zero iterations
    CHECK(row.rank_before <= 256);
  }
  CHECK_THROWS_AS(rank_study(model, 1.0, 1, {1}, 0, 4, cfg), std::invalid_argument);
}

TEST_CASE("trotter rank sweep") {
  auto kitaev = lindblad::make_model(Model::kitaev);
  CHECK(trotter_rank_sweep(kitaev, 1.0, {1, 2}) == std::vector<int>{36, 45});
  CHECK(trotter_rank_sweep(kitaev, 0.0, {1}) == std::vector<int>{1});
}

TEST_CASE("embedding consistency at the source size") {
  auto model = lindblad::make_model(Model::kitaev);
  ProblemSetup s = make_problem(model, 1.0, 1, 2, 4);
  EmbedResult res = embed_larger_n(s.ansatz, model, 1.0, 4);
  CHECK(res.trotter_error == doctest::Approx(splitting::trotter_error(model, 1.0, 1, 4)).epsilon(1e-12));
  CHECK(res.riemannian_error == doctest::Approx(optim::cost(s.ansatz, s.objective)).epsilon(1e-9));
}

TEST_CASE("identity isometries against a trivial model") {
  LindbladModel empty{Model::kitaev, 1.0, {}};
  IsometryVector xv;
  xv.schedule = splitting::layer_schedule(1);
  for (int i = 0; i < 3; ++i) xv.layers.push_back(StiefelPoint{Matrix::Identity(4, 4)});
  EmbedResult res = embed_larger_n(xv, empty, 0.7, 4);
  // exp(tau L) = I, so both schemes match it exactly
  CHECK(res.trotter_error < 1e-13);
  CHECK(res.riemannian_error < 1e-13);
}

TEST_CASE("metric comparison shares the ansatz cost") {
  auto model = lindblad::make_model(Model::kitaev);
  TrustRegionConfig cfg;
  MetricComparison cmp = metric_comparison(model, 0.5, 1, 2, 4, cfg);
  REQUIRE(cmp.euclidean_projected.size() == 3);
  REQUIRE(cmp.euclidean_canonical_dirs.size() == 3);
  REQUIRE(cmp.canonical.size() == 3);
  CHECK(cmp.euclidean_projected[0] == cmp.canonical[0]);
  CHECK(cmp.euclidean_canonical_dirs[0] == cmp.canonical[0]);
  for (const auto* hist : {&cmp.euclidean_projected, &cmp.euclidean_canonical_dirs, &cmp.canonical})
    CHECK(hist->back() <= hist->front());
}

TEST_CASE("convergence study normalizes trajectories") {
  auto model = lindblad::make_model(Model::pspl);
  TrustRegionConfig cfg;
  auto trajectories = convergence_study(model, 0.7, 6, {1, 2}, 2, 2, cfg);
  REQUIRE(trajectories.size() == 2);
  for (const auto& t : trajectories) {
    CHECK(t.front() == 1.0);
    CHECK(t.back() <= 1.0);
  }
}

TEST_CASE("experiments are deterministic") {
  auto model = lindblad::make_model(Model::pspl);
  TrustRegionConfig cfg;
  auto a = convergence_study(model, 0.7, 6, {1}, 3, 2, cfg);
  auto b = convergence_study(model, 0.7, 6, {1}, 3, 2, cfg);
  REQUIRE(a[0].size() == b[0].size());
  for (size_t i = 0; i < a[0].size(); ++i) CHECK(a[0][i] == b[0][i]);
}
