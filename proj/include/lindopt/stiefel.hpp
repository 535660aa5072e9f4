#pragma once

#include <vector>

#include "lindopt/chanrep.hpp"

namespace lindopt {

/// Two-parameter family of Riemannian metrics on St(n,p):
/// <Z,W>_X = tr Z^T (alpha0 (I - X X^T) + alpha1 X X^T) W.
/// (1,1) is the Euclidean metric, (1,1/2) the canonical one.
struct MetricParams {
  double alpha0 = 1.0;
  double alpha1 = 0.5;
};

inline MetricParams euclidean_metric() { return {1.0, 1.0}; }
inline MetricParams canonical_metric() { return {1.0, 0.5}; }

namespace stiefel {

/// pi_T(Y) = Y - X sym(X^T Y); output satisfies X^T Z + Z^T X = 0.
Matrix project_tangent(const Matrix& y, const StiefelPoint& x);

/// pi_N(Y) = X sym(X^T Y); pi_T(Y) + pi_N(Y) = Y.
Matrix project_normal(const Matrix& y, const StiefelPoint& x);

double metric_inner(const Matrix& z, const Matrix& w, const StiefelPoint& x, const MetricParams& params);

/// grad f = G/alpha0 + (alpha1^{-1} - 2 alpha0^{-1})/2 * X X^T G - X G^T X / (2 alpha1),
/// for ambient gradient G. Reduces to pi_T(G) at (1,1) and G - X G^T X at (1,1/2).
/// Valid as a smooth ambient extension for arbitrary (not necessarily
/// isometric) base matrices, which the Hessian finite differences rely on.
Matrix riemannian_gradient(const Matrix& ambient_grad, const Matrix& x, const MetricParams& params);

/// Polar retraction: the isometry factor U I_{n,p} V^T of the SVD of X + Z.
StiefelPoint retract_polar(const StiefelPoint& x, const Matrix& z);

/// Orthonormal completion X_perp with [X X_perp] orthogonal; empty for n = p.
Matrix orthogonal_complement(const StiefelPoint& x);

/// Dimension of T_X St(n,p): p(p-1)/2 + p(n-p) = p(2n-p-1)/2.
Index tangent_dof(Index n, Index p);

/// Coordinates of a tangent vector Z = X A + X_perp B: the strict upper
/// triangle of A = X^T Z (row-major) followed by all of B = X_perp^T Z
/// (row-major). Throws if Z fails the skew-symmetry check.
Vector tangent_to_param(const Matrix& z, const StiefelPoint& x, const Matrix& x_perp);

Matrix param_to_tangent(const Vector& coords, const StiefelPoint& x, const Matrix& x_perp);

/// Elementary tangent direction for idx in [0, p(2n-p-1)/2):
/// X (E_ij - E_ji) over the strict upper triangle first, then X_perp E_ij.
/// The set is orthonormal under the canonical metric.
Matrix elementary_direction(const StiefelPoint& x, const Matrix& x_perp, Index idx);

/// pi_T(E_ij) for the n x p unit matrix E_ij (Euclidean-metric variant).
Matrix suboptimal_direction(const StiefelPoint& x, Index i, Index j);

}  // namespace stiefel
}  // namespace lindopt
