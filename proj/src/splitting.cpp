#include "lindopt/splitting.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "lindopt/errors.hpp"

namespace lindopt::splitting {

LayerSchedule layer_schedule(int n_tau) {
  if (n_tau < 1) throw std::invalid_argument("layer_schedule: n_tau must be >= 1");
  LayerSchedule s;
  s.n_tau = n_tau;
  s.entries.push_back({0.5, Parity::odd});
  for (int step = 0; step < n_tau; ++step) {
    s.entries.push_back({1.0, Parity::even});
    if (step + 1 < n_tau) s.entries.push_back({1.0, Parity::odd});
  }
  s.entries.push_back({0.5, Parity::odd});
  return s;
}

std::vector<Matrix> build_trotter_layers(const Dissipator& d, double tau, int n_tau) {
  if (tau < 0.0) throw std::invalid_argument("build_trotter_layers: tau must be nonnegative");
  const LayerSchedule sched = layer_schedule(n_tau);
  const double dt = tau / n_tau;
  std::map<double, Matrix> cache;
  std::vector<Matrix> layers;
  layers.reserve(sched.entries.size());
  for (const auto& e : sched.entries) {
    auto it = cache.find(e.coeff);
    if (it == cache.end()) it = cache.emplace(e.coeff, lindblad::expm(e.coeff * dt * d.matrix)).first;
    layers.push_back(it->second);
  }
  return layers;
}

IsometryVector build_ansatz(const std::vector<Matrix>& layers, const LayerSchedule& schedule, int rank) {
  if (layers.size() != schedule.entries.size())
    throw std::invalid_argument("build_ansatz: layer count does not match schedule");
  IsometryVector xv;
  xv.schedule = schedule;
  xv.layers.reserve(layers.size());
  for (const Matrix& lam : layers) {
    Superoperator s{lam, 2, 2};
    StiefelPoint x = chanrep::superop_to_stiefel(s, rank);
    // Below the natural rank the stacked Kraus blocks are not complete; the
    // ansatz must still live on the manifold, so take the closest isometry.
    const Index p = x.cols();
    if ((x.matrix.transpose() * x.matrix - Matrix::Identity(p, p)).norm() > 1e-12) {
      Eigen::BDCSVD<Matrix> svd(x.matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
      x.matrix = svd.matrixU() * svd.matrixV().transpose();
    }
    xv.layers.push_back(std::move(x));
  }
  return xv;
}

Superoperator compose_global(const IsometryVector& xvec, int sites) {
  if (sites < 2 || sites % 2 != 0) throw std::invalid_argument("compose_global: N must be even and >= 2");
  if (xvec.layers.empty()) throw std::invalid_argument("compose_global: empty isometry vector");
  if (xvec.layers.size() != xvec.schedule.entries.size())
    throw std::invalid_argument("compose_global: layers do not match schedule");

  const LegPermutation perm_odd = chanrep::global_local_perm(sites, 0);
  const LegPermutation perm_even = chanrep::global_local_perm(sites, 1);
  const int pairs = sites / 2;
  const Index dim = perm_odd.dim();

  Matrix product = Matrix::Identity(dim, dim);
  for (size_t alpha = 0; alpha < xvec.layers.size(); ++alpha) {
    const Matrix phi = chanrep::stiefel_to_superop(xvec.layers[alpha]).matrix;
    Matrix local = phi;
    for (int b = 1; b < pairs; ++b) {
      Matrix next(local.rows() * phi.rows(), local.cols() * phi.cols());
      for (Index i = 0; i < local.rows(); ++i)
        for (Index j = 0; j < local.cols(); ++j)
          next.block(i * phi.rows(), j * phi.cols(), phi.rows(), phi.cols()) = local(i, j) * phi;
      local = std::move(next);
    }
    const LegPermutation& perm = xvec.schedule.entries[alpha].parity == Parity::odd ? perm_odd : perm_even;
    // Layer alpha acts first on the state, so it lands rightmost.
    product = perm.to_global(local) * product;
  }
  return Superoperator{std::move(product), sites, 2};
}

Matrix exact_trotter_superop(const LindbladModel& model, double tau, int n_tau, int sites) {
  const LayerSchedule sched = layer_schedule(n_tau);
  const double dt = tau / n_tau;
  const Matrix l_odd = lindblad::parity_liouvillian(model, sites, Parity::odd);
  const Matrix l_even = lindblad::parity_liouvillian(model, sites, Parity::even);
  std::map<std::pair<double, int>, Matrix> cache;
  Matrix product = Matrix::Identity(l_odd.rows(), l_odd.cols());
  for (const auto& e : sched.entries) {
    const std::pair<double, int> key{e.coeff, e.parity == Parity::odd ? 0 : 1};
    auto it = cache.find(key);
    if (it == cache.end())
      it = cache.emplace(key, lindblad::expm(e.coeff * dt * (e.parity == Parity::odd ? l_odd : l_even))).first;
    product = it->second * product;
  }
  return product;
}

double trotter_error(const LindbladModel& model, double tau, int n_tau, int sites) {
  const Matrix exact = lindblad::expm(tau * lindblad::full_liouvillian(model, sites).matrix);
  return (exact - exact_trotter_superop(model, tau, n_tau, sites)).norm();
}

}  // namespace lindopt::splitting
