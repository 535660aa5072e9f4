#pragma once

#include <cstdint>
#include <vector>

#include "lindopt/optimizer.hpp"

namespace lindopt {

/// Per-rank outcome of a rank sweep: costs and full-system Choi ranks of
/// S(X) before and after optimization.
struct RankStudyRow {
  int rank = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int rank_before = 0;
  int rank_after = 0;
};

struct RankStudyResult {
  std::vector<RankStudyRow> rows;
};

/// Average-error curve entries per scheme and time-step count.
struct ErrorCurveRow {
  int n_tau = 0;
  double trotter = 0.0;
  double riemannian = 0.0;
};

namespace experiments {

/// Deterministic normal sampler (Box-Muller over a 64-bit Mersenne Twister);
/// avoids std::normal_distribution so streams are identical across toolchains.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed);
  double operator()();

 private:
  std::uint64_t state_[312];
  int mt_index_;
  bool have_spare_ = false;
  double spare_ = 0.0;
  std::uint64_t next_u64();
  double next_unit();
};

/// rho = A A^T / tr(A A^T) with A iid standard normal; symmetric PSD, unit trace.
Matrix random_density_matrix(Index dim, std::uint64_t seed);

/// Mean over samples of || (reference - scheme) vec(rho_0) ||_2, the Frobenius
/// distance of the evolved density matrices.
double average_error(const Matrix& scheme_superop, const Matrix& reference, int n_samples, std::uint64_t seed);

RankStudyResult rank_study(const LindbladModel& model, double tau, int n_tau, const std::vector<int>& ranks,
                           int iters, int sites = 4, const TrustRegionConfig& cfg = {}, double choi_tol = 1e-10);

/// Choi rank of the exact-layer splitting composite per n_tau.
std::vector<int> trotter_rank_sweep(const LindbladModel& model, double tau, const std::vector<int>& n_taus,
                                    int sites = 4, double choi_tol = 1e-10);

struct EmbedResult {
  double trotter_error = 0.0;
  double riemannian_error = 0.0;
};

/// Rebuild S(X) and exp(tau L) at a larger (even) system size from per-layer
/// isometries optimized at a smaller one, and evaluate both scheme errors.
EmbedResult embed_larger_n(const IsometryVector& xvec, const LindbladModel& model, double tau, int n_target);

struct MetricComparison {
  std::vector<double> euclidean_projected;
  std::vector<double> euclidean_canonical_dirs;
  std::vector<double> canonical;
};

/// Cost trajectories for the three metric/direction combinations, all
/// starting from the same natural-rank ansatz.
MetricComparison metric_comparison(const LindbladModel& model, double tau, int n_tau, int iters, int sites = 4,
                                   const TrustRegionConfig& cfg = {});

/// Normalized cost trajectories f(X^beta)/f(X^0) per n_tau.
std::vector<std::vector<double>> convergence_study(const LindbladModel& model, double tau, int rank,
                                                   const std::vector<int>& n_taus, int iters, int sites = 4,
                                                   const TrustRegionConfig& cfg = {});

/// Shared helper: reference, schedule and Trotter ansatz for a run.
struct ProblemSetup {
  Objective objective;
  IsometryVector ansatz;
  Matrix exact;
};
ProblemSetup make_problem(const LindbladModel& model, double tau, int n_tau, int rank, int sites,
                          MetricParams metric = canonical_metric(),
                          DirectionKind directions = DirectionKind::canonical);

}  // namespace experiments
}  // namespace lindopt
