#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <unsupported/Eigen/KroneckerProduct>

#include "lindopt/chanrep.hpp"
#include "lindopt/errors.hpp"
#include "lindopt/lindblad.hpp"
#include "test_support.hpp"

using namespace lindopt;
using namespace lindopt::lindblad;
using lindopt::testing::random_matrix;

namespace {

std::set<double> entry_set(const Matrix& m) {
  std::set<double> s;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) s.insert(std::round(m(i, j) * 1e12) / 1e12);
  return s;
}

}  // namespace

TEST_CASE("jump operators of the two models") {
  auto kitaev = jump_operators(Model::kitaev, 1.0);
  REQUIRE(kitaev.size() == 1);
  CHECK(entry_set(kitaev[0]) == std::set<double>{0.0, 0.25});

  auto pspl = jump_operators(Model::pspl, 1.0);
  REQUIRE(pspl.size() == 2);
  CHECK(entry_set(pspl[0]) == std::set<double>{-1.0, 0.0, 1.0});
  CHECK(entry_set(pspl[1]) == std::set<double>{-2.0, 0.0, 2.0});

  // sqrt(gamma) scaling
  auto scaled = jump_operators(Model::kitaev, 4.0);
  CHECK((scaled[0] - 2.0 * kitaev[0]).norm() < 1e-15);

  CHECK_THROWS_AS(jump_operators(Model::kitaev, 0.0), std::invalid_argument);
}

TEST_CASE("local dissipator") {
  CHECK(local_dissipator({}).matrix.norm() == 0.0);

  // vec(I) is a left fixed point of exp(tau D)
  const Vector vid = chanrep::vec_row(Matrix::Identity(4, 4));
  Dissipator d = local_dissipator(jump_operators(Model::kitaev, 1.0));
  Matrix ch = expm(1.0 * d.matrix);
  CHECK((ch.transpose() * vid - vid).norm() < 1e-12);

  // PSPL generator has a real spectrum with nonpositive real parts
  Dissipator dp = local_dissipator(jump_operators(Model::pspl, 1.0));
  Eigen::EigenSolver<Matrix> es(dp.matrix);
  CHECK(es.eigenvalues().imag().cwiseAbs().maxCoeff() < 1e-10);
  CHECK(es.eigenvalues().real().maxCoeff() < 1e-10);
}

TEST_CASE("two-site channels are completely positive") {
  for (Model m : {Model::kitaev, Model::pspl}) {
    Dissipator d = local_dissipator(jump_operators(m, 1.0));
    for (double tau : {0.1, 0.5, 1.0}) {
      ChoiMatrix c = chanrep::superop_to_choi(Superoperator{expm(tau * d.matrix), 2, 2});
      Eigen::SelfAdjointEigenSolver<Matrix> es(c.matrix, Eigen::EigenvaluesOnly);
      CHECK(es.eigenvalues()(0) > -1e-10);
    }
  }
}

TEST_CASE("embedding helpers") {
  Matrix a = random_matrix(2, 2, 1), b = random_matrix(2, 2, 2);
  Matrix ab = Eigen::kroneckerProduct(a, b);
  CHECK((permute_sites(ab, {1, 0}, 2) - Eigen::kroneckerProduct(b, a).eval()).norm() < 1e-14);

  // interior embedding agrees with the direct kron expression
  Matrix id2 = Matrix::Identity(2, 2);
  Matrix direct = Eigen::kroneckerProduct(id2, Eigen::kroneckerProduct(ab, id2).eval());
  CHECK((embed_two_site(ab, 4, 2) - direct).norm() < 1e-14);

  // boundary pair (4,1): first factor on site 4, second on site 1
  Matrix wrap = embed_two_site(ab, 4, 4);
  Matrix expected = Eigen::kroneckerProduct(b, Eigen::kroneckerProduct(Matrix::Identity(4, 4), a).eval());
  CHECK((wrap - expected).norm() < 1e-14);
}

TEST_CASE("full Liouvillian assembly") {
  auto model = make_model(Model::kitaev);

  // N=2: the two orderings (1,2) and (2,1) summed
  FullLiouvillian l2 = full_liouvillian(model, 2);
  Matrix expected = Matrix::Zero(16, 16);
  expected += liouvillian_term(model.jump_ops[0]);
  expected += liouvillian_term(embed_two_site(model.jump_ops[0], 2, 2));
  CHECK((l2.matrix - expected).norm() < 1e-14);

  CHECK_THROWS_AS(full_liouvillian(model, 3), std::invalid_argument);
  CHECK_THROWS_AS(full_liouvillian(model, 8), ConfigError);

  LindbladModel empty{Model::kitaev, 1.0, {}};
  FullLiouvillian l0 = full_liouvillian(empty, 4);
  CHECK(l0.matrix.norm() == 0.0);
  CHECK((expm(0.3 * l0.matrix) - Matrix::Identity(256, 256)).norm() == 0.0);

  // odd + even partition reassembles the full generator
  auto pspl = make_model(Model::pspl);
  Matrix lo = parity_liouvillian(pspl, 4, Parity::odd);
  Matrix le = parity_liouvillian(pspl, 4, Parity::even);
  CHECK((lo + le - full_liouvillian(pspl, 4).matrix).norm() < 1e-13);
}

TEST_CASE("full-system trace preservation and semigroup") {
  for (Model m : {Model::kitaev, Model::pspl}) {
    auto model = make_model(m);
    for (int sites : {2, 4}) {
      const Matrix lhat = full_liouvillian(model, sites).matrix;
      const Vector vid = chanrep::vec_row(Matrix::Identity(1 << sites, 1 << sites));
      for (double tau : {0.1, 0.5, 1.0}) {
        Matrix ch = expm(tau * lhat);
        CHECK((ch.transpose() * vid - vid).norm() < 1e-10);
      }
      CHECK((expm(0.3 * lhat) * expm(0.4 * lhat) - expm(0.7 * lhat)).norm() < 1e-10);
      CHECK((expm(0.0 * lhat) - Matrix::Identity(lhat.rows(), lhat.cols())).norm() < 1e-13);
    }
  }
}

TEST_CASE("matrix exponential") {
  CHECK((expm(Matrix::Zero(5, 5)) - Matrix::Identity(5, 5)).norm() == 0.0);

  Matrix diag = Matrix::Zero(2, 2);
  diag(0, 0) = 0.3;
  diag(1, 1) = -1.7;
  Matrix e = expm(diag);
  CHECK(e(0, 0) == doctest::Approx(std::exp(0.3)).epsilon(1e-14));
  CHECK(e(1, 1) == doctest::Approx(std::exp(-1.7)).epsilon(1e-14));
  CHECK(std::abs(e(0, 1)) + std::abs(e(1, 0)) == 0.0);

  // scaled Taylor-series oracle on a dissipator-sized matrix
  Dissipator d = local_dissipator(jump_operators(Model::pspl, 1.0));
  Matrix m = d.matrix + 0.05 * random_matrix(16, 16, 11);
  const int squarings = 8;
  Matrix small = m / double(1 << squarings);
  Matrix taylor = Matrix::Identity(16, 16), term = Matrix::Identity(16, 16);
  for (int k = 1; k <= 200; ++k) {
    term = (term * small / double(k)).eval();
    taylor += term;
  }
  for (int s = 0; s < squarings; ++s) taylor = (taylor * taylor).eval();
  CHECK((expm(m) - taylor).norm() / taylor.norm() < 1e-11);

  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(expm(bad), NumericError);
  CHECK_THROWS_AS(expm(random_matrix(2, 3, 1)), std::invalid_argument);
}
