#pragma once

#include <string>
#include <vector>

#include "lindopt/splitting.hpp"
#include "lindopt/stiefel.hpp"

namespace lindopt {

/// Elementary directions used for Hessian columns and the step parametrization:
/// `canonical` uses the orthonormal (E^A, E^B) tangent basis; `projected_unit`
/// traverses all n*p unit matrices projected onto the tangent space (the
/// suboptimal variant, paired with the Euclidean metric).
enum class DirectionKind { canonical, projected_unit };

/// The approximation-error objective f(X) = ||exp(tau L) - S(X)||_F over the
/// m-fold product of Stiefel manifolds.
struct Objective {
  Superoperator reference;
  LayerSchedule schedule;
  int sites = 4;
  int rank = 2;
  MetricParams metric = canonical_metric();
  DirectionKind directions = DirectionKind::canonical;
};

struct TrustRegionConfig {
  double delta0 = -1.0;     // <= 0: defaults to 0.1 * sqrt(DOF)
  double delta_max = -1.0;  // <= 0: defaults to sqrt(DOF)
  double rho_accept = 0.1;
  double rho_good = 0.75;
  double shrink = 0.25;
  double grow = 2.0;
  int max_outer = 100;
  double cg_kappa = 0.1;
  double cg_theta = 1.0;
  bool fd_hessian = false;    // finite-difference gradient-field derivatives instead of the exact ones
  double hess_fd_step = 1e-6;  // step for the finite-difference path
  double grad_tol = 1e-10;
  double cost_tol = 1e-13;
  Index hessian_dof_cap = 2000;
  int threads = 0;  // 0: hardware concurrency, capped by LINDBLAD_RIEMANN_THREADS
};

struct OptimRecord {
  std::vector<double> cost_history;  // entry 0 is the ansatz cost
  std::vector<double> rho_history;
  std::vector<double> radius_history;  // radius used for each step
  std::vector<char> accepted;
  IsometryVector final_isometries;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  Index dof = 0;
  std::string stop_reason;
};

namespace optim {

/// Worker count: `requested` (or hardware concurrency when <= 0), capped by
/// the LINDBLAD_RIEMANN_THREADS environment variable.
int resolve_threads(int requested);

/// Number of step coordinates: m * p(2n-p-1)/2 for canonical directions,
/// m * n * p for the projected-unit variant.
Index coordinate_count(const Objective& obj);

double cost(const IsometryVector& xvec, const Objective& obj);

/// Analytic gradient of f with respect to each layer's ambient entries.
/// Throws NumericError when f < 1e-14 (the norm is not differentiable at 0).
std::vector<Matrix> ambient_gradient(const IsometryVector& xvec, const Objective& obj);

/// Riemannian gradient of every layer (metric from the objective).
std::vector<Matrix> riemannian_gradient(const IsometryVector& xvec, const Objective& obj);

/// Riemannian Hessian-vector product: the directional derivative of the
/// Riemannian gradient field plus the metric connection terms, projected back
/// onto the tangent spaces. The derivative is exact by default; a positive
/// fd_step switches to central differences in ambient space with step
/// fd_step * (1 + |X|), which serves as the validation oracle.
std::vector<Matrix> hess_vec(const IsometryVector& xvec, const std::vector<Matrix>& zvec, const Objective& obj,
                             double fd_step = 0.0);

/// Dense Hessian over the step coordinates; column (alpha, idx) holds the
/// parametrized hess_vec of that elementary direction. Returned raw
/// (symmetrize before use). Columns are computed in parallel.
Matrix build_hessian(const IsometryVector& xvec, const Objective& obj, const TrustRegionConfig& cfg = {});

/// Steihaug-Toint truncated CG for min g.z + 1/2 z.H.z subject to |z| <= delta.
/// Stops on negative curvature or boundary crossing (step to the boundary) or
/// on the residual condition |r| <= |r0| min(kappa, |r0|^theta).
Vector tcg_solve(const Vector& grad, const Matrix& hess, double delta, double cg_kappa = 0.1, double cg_theta = 1.0,
                 Index max_iter = -1);

/// Trust-region quotient rho = (f_now - f_candidate) / (m(0) - m(u)).
double tr_quotient(const Vector& grad, const Matrix& hess, const Vector& step, double f_now, double f_candidate);

OptimRecord trust_region_run(const Objective& obj, const IsometryVector& x0, const TrustRegionConfig& cfg);

}  // namespace optim
}  // namespace lindopt
