#include "lindopt/experiments.hpp"

#include <cmath>
#include <stdexcept>

#include "lindopt/errors.hpp"

namespace lindopt::experiments {

// mt19937_64 core (Matsumoto & Nishimura parameters).
NormalSampler::NormalSampler(std::uint64_t seed) : mt_index_(312) {
  state_[0] = seed;
  for (int i = 1; i < 312; ++i)
    state_[i] = 6364136223846793005ULL * (state_[i - 1] ^ (state_[i - 1] >> 62)) + static_cast<std::uint64_t>(i);
}

std::uint64_t NormalSampler::next_u64() {
  if (mt_index_ >= 312) {
    for (int i = 0; i < 312; ++i) {
      const std::uint64_t x = (state_[i] & 0xFFFFFFFF80000000ULL) | (state_[(i + 1) % 312] & 0x7FFFFFFFULL);
      std::uint64_t xa = x >> 1;
      if (x & 1) xa ^= 0xB5026F5AA96619E9ULL;
      state_[i] = state_[(i + 156) % 312] ^ xa;
    }
    mt_index_ = 0;
  }
  std::uint64_t y = state_[mt_index_++];
  y ^= (y >> 29) & 0x5555555555555555ULL;
  y ^= (y << 17) & 0x71D67FFFEDA60000ULL;
  y ^= (y << 37) & 0xFFF7EEE000000000ULL;
  y ^= y >> 43;
  return y;
}

double NormalSampler::next_unit() {
  // 53-bit uniform in (0, 1].
  return (static_cast<double>(next_u64() >> 11) + 1.0) / 9007199254740993.0;
}

double NormalSampler::operator()() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = next_unit();
  const double u2 = next_unit();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 6.283185307179586476925286766559 * u2;
  spare_ = radius * std::sin(angle);
  have_spare_ = true;
  return radius * std::cos(angle);
}

Matrix random_density_matrix(Index dim, std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("random_density_matrix: dim must be >= 1");
  NormalSampler normal(seed);
  Matrix a(dim, dim);
  for (Index i = 0; i < dim; ++i)
    for (Index j = 0; j < dim; ++j) a(i, j) = normal();
  Matrix rho = a * a.transpose();
  return rho / rho.trace();
}

double average_error(const Matrix& scheme_superop, const Matrix& reference, int n_samples, std::uint64_t seed) {
  if (scheme_superop.rows() != reference.rows() || scheme_superop.cols() != reference.cols())
    throw std::invalid_argument("average_error: size mismatch");
  if (n_samples < 1) throw std::invalid_argument("average_error: need at least one sample");
  const Index dim = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(reference.rows()))));
  if (dim * dim != reference.rows()) throw std::invalid_argument("average_error: side must be a perfect square");
  const Matrix diff = reference - scheme_superop;
  double total = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const Matrix rho = random_density_matrix(dim, seed + static_cast<std::uint64_t>(s));
    total += (diff * chanrep::vec_row(rho)).norm();
  }
  return total / n_samples;
}

ProblemSetup make_problem(const LindbladModel& model, double tau, int n_tau, int rank, int sites,
                          MetricParams metric, DirectionKind directions) {
  ProblemSetup setup;
  const Dissipator d = lindblad::local_dissipator(model.jump_ops);
  const LayerSchedule schedule = splitting::layer_schedule(n_tau);
  setup.exact = lindblad::expm(tau * lindblad::full_liouvillian(model, sites).matrix);
  setup.objective = Objective{Superoperator{setup.exact, sites, 2}, schedule, sites, rank, metric, directions};
  setup.ansatz = splitting::build_ansatz(splitting::build_trotter_layers(d, tau, n_tau), schedule, rank);
  return setup;
}

RankStudyResult rank_study(const LindbladModel& model, double tau, int n_tau, const std::vector<int>& ranks,
                           int iters, int sites, const TrustRegionConfig& cfg, double choi_tol) {
  for (int r : ranks)
    if (r < 2 || r > 16) throw std::invalid_argument("rank_study: ranks must lie in [2, d^4]");
  RankStudyResult result;
  for (int r : ranks) {
    ProblemSetup setup = make_problem(model, tau, n_tau, r, sites);
    TrustRegionConfig run_cfg = cfg;
    run_cfg.max_outer = iters;
    const OptimRecord rec = optim::trust_region_run(setup.objective, setup.ansatz, run_cfg);
    RankStudyRow row;
    row.rank = r;
    row.initial_cost = rec.initial_cost;
    row.final_cost = rec.final_cost;
    row.rank_before = chanrep::choi_rank(splitting::compose_global(setup.ansatz, sites), choi_tol);
    row.rank_after = chanrep::choi_rank(splitting::compose_global(rec.final_isometries, sites), choi_tol);
    result.rows.push_back(row);
  }
  return result;
}

std::vector<int> trotter_rank_sweep(const LindbladModel& model, double tau, const std::vector<int>& n_taus,
                                    int sites, double choi_tol) {
  std::vector<int> ranks;
  ranks.reserve(n_taus.size());
  for (int n_tau : n_taus) {
    if (tau == 0.0) {
      ranks.push_back(1);
      continue;
    }
    const Matrix composite = splitting::exact_trotter_superop(model, tau, n_tau, sites);
    ranks.push_back(chanrep::choi_rank(Superoperator{composite, sites, 2}, choi_tol));
  }
  return ranks;
}

EmbedResult embed_larger_n(const IsometryVector& xvec, const LindbladModel& model, double tau, int n_target) {
  if (n_target < 4 || n_target % 2 != 0) throw std::invalid_argument("embed_larger_n: N must be even and >= 4");
  EmbedResult out;
  const Matrix exact = lindblad::expm(tau * lindblad::full_liouvillian(model, n_target).matrix);
  out.trotter_error = (exact - splitting::exact_trotter_superop(model, tau, xvec.schedule.n_tau, n_target)).norm();
  out.riemannian_error = (exact - splitting::compose_global(xvec, n_target).matrix).norm();
  return out;
}

MetricComparison metric_comparison(const LindbladModel& model, double tau, int n_tau, int iters, int sites,
                                   const TrustRegionConfig& cfg) {
  const Dissipator d = lindblad::local_dissipator(model.jump_ops);
  const int rank = chanrep::choi_natural_rank(
      chanrep::superop_to_choi(Superoperator{lindblad::expm(tau / n_tau * d.matrix), 2, 2}));

  TrustRegionConfig run_cfg = cfg;
  run_cfg.max_outer = iters;
  auto run = [&](MetricParams metric, DirectionKind dirs) {
    ProblemSetup setup = make_problem(model, tau, n_tau, rank, sites, metric, dirs);
    return optim::trust_region_run(setup.objective, setup.ansatz, run_cfg).cost_history;
  };
  MetricComparison cmp;
  cmp.euclidean_projected = run(euclidean_metric(), DirectionKind::projected_unit);
  cmp.euclidean_canonical_dirs = run(euclidean_metric(), DirectionKind::canonical);
  cmp.canonical = run(canonical_metric(), DirectionKind::canonical);
  return cmp;
}

std::vector<std::vector<double>> convergence_study(const LindbladModel& model, double tau, int rank,
                                                   const std::vector<int>& n_taus, int iters, int sites,
                                                   const TrustRegionConfig& cfg) {
  std::vector<std::vector<double>> out;
  for (int n_tau : n_taus) {
    ProblemSetup setup = make_problem(model, tau, n_tau, rank, sites);
    TrustRegionConfig run_cfg = cfg;
    run_cfg.max_outer = iters;
    const OptimRecord rec = optim::trust_region_run(setup.objective, setup.ansatz, run_cfg);
    std::vector<double> normalized;
    normalized.reserve(rec.cost_history.size());
    for (double c : rec.cost_history) normalized.push_back(c / rec.initial_cost);
    out.push_back(std::move(normalized));
  }
  return out;
}

}  // namespace lindopt::experiments
