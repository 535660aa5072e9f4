#include "lindopt/stiefel.hpp"

#include <stdexcept>

#include "lindopt/errors.hpp"

namespace lindopt::stiefel {

Matrix project_tangent(const Matrix& y, const StiefelPoint& x) {
  if (y.rows() != x.rows() || y.cols() != x.cols()) throw std::invalid_argument("project_tangent: shape mismatch");
  const Matrix xty = x.matrix.transpose() * y;
  return y - 0.5 * x.matrix * (xty + xty.transpose());
}

Matrix project_normal(const Matrix& y, const StiefelPoint& x) {
  if (y.rows() != x.rows() || y.cols() != x.cols()) throw std::invalid_argument("project_normal: shape mismatch");
  const Matrix xty = x.matrix.transpose() * y;
  return 0.5 * x.matrix * (xty + xty.transpose());
}

double metric_inner(const Matrix& z, const Matrix& w, const StiefelPoint& x, const MetricParams& params) {
  if (params.alpha0 <= 0.0 || params.alpha1 <= 0.0) throw std::invalid_argument("metric_inner: params must be positive");
  const Matrix xtw = x.matrix.transpose() * w;
  return params.alpha0 * (z.transpose() * w).trace() +
         (params.alpha1 - params.alpha0) * (z.transpose() * x.matrix * xtw).trace();
}

Matrix riemannian_gradient(const Matrix& ambient_grad, const Matrix& x, const MetricParams& params) {
  if (params.alpha0 <= 0.0 || params.alpha1 <= 0.0)
    throw std::invalid_argument("riemannian_gradient: params must be positive");
  const double a0 = params.alpha0, a1 = params.alpha1;
  return ambient_grad / a0 + 0.5 * (1.0 / a1 - 2.0 / a0) * x * (x.transpose() * ambient_grad) -
         x * (ambient_grad.transpose() * x) / (2.0 * a1);
}

StiefelPoint retract_polar(const StiefelPoint& x, const Matrix& z) {
  if (z.rows() != x.rows() || z.cols() != x.cols()) throw std::invalid_argument("retract_polar: shape mismatch");
  Eigen::BDCSVD<Matrix> svd(x.matrix + z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 1e-13 * sv(0))
    throw NumericError("retract_polar: X + Z is rank deficient");
  return StiefelPoint{svd.matrixU() * svd.matrixV().transpose()};
}

Matrix orthogonal_complement(const StiefelPoint& x) {
  const Index n = x.rows(), p = x.cols();
  if (n == p) return Matrix(n, 0);
  Eigen::HouseholderQR<Matrix> qr(x.matrix);
  const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  return q.rightCols(n - p);
}

Index tangent_dof(Index n, Index p) { return p * (2 * n - p - 1) / 2; }

Vector tangent_to_param(const Matrix& z, const StiefelPoint& x, const Matrix& x_perp) {
  const Index n = x.rows(), p = x.cols();
  const Matrix a = x.matrix.transpose() * z;
  if ((a + a.transpose()).norm() > 1e-8 * std::max(1.0, z.norm()))
    throw std::invalid_argument("tangent_to_param: Z is not tangent at X");
  const Matrix b = x_perp.transpose() * z;
  Vector coords(tangent_dof(n, p));
  Index k = 0;
  for (Index i = 0; i < p; ++i)
    for (Index j = i + 1; j < p; ++j) coords(k++) = 0.5 * (a(i, j) - a(j, i));
  for (Index i = 0; i < n - p; ++i)
    for (Index j = 0; j < p; ++j) coords(k++) = b(i, j);
  return coords;
}

Matrix param_to_tangent(const Vector& coords, const StiefelPoint& x, const Matrix& x_perp) {
  const Index n = x.rows(), p = x.cols();
  if (coords.size() != tangent_dof(n, p)) throw std::invalid_argument("param_to_tangent: coordinate length mismatch");
  Matrix a = Matrix::Zero(p, p);
  Index k = 0;
  for (Index i = 0; i < p; ++i)
    for (Index j = i + 1; j < p; ++j) {
      a(i, j) = coords(k);
      a(j, i) = -coords(k);
      ++k;
    }
  Matrix b(n - p, p);
  for (Index i = 0; i < n - p; ++i)
    for (Index j = 0; j < p; ++j) b(i, j) = coords(k++);
  return x.matrix * a + x_perp * b;
}

Matrix elementary_direction(const StiefelPoint& x, const Matrix& x_perp, Index idx) {
  const Index n = x.rows(), p = x.cols();
  const Index n_skew = p * (p - 1) / 2;
  if (idx < 0 || idx >= tangent_dof(n, p)) throw std::invalid_argument("elementary_direction: idx out of range");
  if (idx < n_skew) {
    // Unflatten the strict upper-triangle position (row-major).
    Index k = idx, i = 0;
    while (k >= p - 1 - i) {
      k -= p - 1 - i;
      ++i;
    }
    const Index j = i + 1 + k;
    Matrix z = Matrix::Zero(n, p);
    z.col(j) += x.matrix.col(i);
    z.col(i) -= x.matrix.col(j);
    return z;
  }
  const Index k = idx - n_skew;
  Matrix z = Matrix::Zero(n, p);
  z.col(k % p) = x_perp.col(k / p);
  return z;
}

Matrix suboptimal_direction(const StiefelPoint& x, Index i, Index j) {
  Matrix e = Matrix::Zero(x.rows(), x.cols());
  e(i, j) = 1.0;
  return project_tangent(e, x);
}

}  // namespace lindopt::stiefel
