#include "lindopt/chanrep.hpp"

#include <cmath>
#include <stdexcept>

#include "lindopt/errors.hpp"

namespace lindopt {

namespace {

Index int_pow(Index base, int exp) {
  Index r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

Index isqrt_exact(Index n, const char* what) {
  const Index r = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(n))));
  if (r * r != n) throw std::invalid_argument(what);
  return r;
}

}  // namespace

Superoperator::Superoperator(Matrix m, int n_sites, int d) : matrix(std::move(m)), sites(n_sites), local_dim(d) {
  if (sites < 1 || local_dim < 2) throw std::invalid_argument("Superoperator: sites and local_dim must be positive");
  if (matrix.rows() != matrix.cols()) throw std::invalid_argument("Superoperator: matrix must be square");
  if (matrix.rows() != int_pow(local_dim, 2 * sites))
    throw std::invalid_argument("Superoperator: side must equal d^(2N)");
}

Index LegPermutation::dim() const { return int_pow(local_dim, 2 * sites); }

const std::vector<Index>& LegPermutation::index_map() const {
  if (!cached_map_.empty()) return cached_map_;
  const int n_legs = 2 * sites;
  const Index d = local_dim;
  // Weight of global leg l in the flat global index (most significant first).
  std::vector<Index> weight(n_legs);
  for (int l = 0; l < n_legs; ++l) weight[l] = int_pow(d, n_legs - 1 - l);
  cached_map_.assign(static_cast<size_t>(dim()), 0);
  for (Index a = 0; a < dim(); ++a) {
    Index rem = a, g = 0;
    for (int q = 0; q < n_legs; ++q) {
      const Index digit = rem / int_pow(d, n_legs - 1 - q);
      rem -= digit * int_pow(d, n_legs - 1 - q);
      g += digit * weight[legs[q]];
    }
    cached_map_[static_cast<size_t>(a)] = g;
  }
  return cached_map_;
}

Matrix LegPermutation::as_matrix() const {
  const auto& g = index_map();
  Matrix p = Matrix::Zero(dim(), dim());
  for (Index a = 0; a < dim(); ++a) p(a, g[static_cast<size_t>(a)]) = 1.0;
  return p;
}

Matrix LegPermutation::to_local(const Matrix& global_mat) const {
  const auto& g = index_map();
  const Index n = dim();
  if (global_mat.rows() != n || global_mat.cols() != n)
    throw std::invalid_argument("LegPermutation::to_local: size mismatch");
  Matrix out(n, n);
  for (Index b = 0; b < n; ++b)
    for (Index a = 0; a < n; ++a) out(a, b) = global_mat(g[static_cast<size_t>(a)], g[static_cast<size_t>(b)]);
  return out;
}

Matrix LegPermutation::to_global(const Matrix& local_mat) const {
  const auto& g = index_map();
  const Index n = dim();
  if (local_mat.rows() != n || local_mat.cols() != n)
    throw std::invalid_argument("LegPermutation::to_global: size mismatch");
  Matrix out(n, n);
  for (Index b = 0; b < n; ++b)
    for (Index a = 0; a < n; ++a) out(g[static_cast<size_t>(a)], g[static_cast<size_t>(b)]) = local_mat(a, b);
  return out;
}

namespace chanrep {

Vector vec_row(const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("vec_row: input must be square");
  Vector v(m.size());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
  return v;
}

Matrix unvec_row(const Vector& v, Index rows, Index cols) {
  if (v.size() != rows * cols) throw std::invalid_argument("unvec_row: length mismatch");
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = v(i * cols + j);
  return m;
}

Matrix unvec_row(const Vector& v) {
  const Index d = isqrt_exact(v.size(), "unvec_row: length must be a perfect square");
  return unvec_row(v, d, d);
}

Matrix reshuffle(const Matrix& s, Index dim) {
  if (s.rows() != s.cols() || s.rows() != dim * dim)
    throw std::invalid_argument("reshuffle: side must equal dim^2");
  Matrix c(dim * dim, dim * dim);
  for (Index i = 0; i < dim; ++i)
    for (Index k = 0; k < dim; ++k)
      for (Index j = 0; j < dim; ++j)
        for (Index l = 0; l < dim; ++l) c(i * dim + k, j * dim + l) = s(i * dim + j, k * dim + l);
  return c;
}

ChoiMatrix superop_to_choi(const Superoperator& s) {
  if (s.sites != 2) throw std::invalid_argument("superop_to_choi: expects a two-site superoperator");
  const Index d2 = int_pow(s.local_dim, 2);
  Matrix c = reshuffle(s.matrix, d2);
  // The reshuffle of a real CPTP superoperator is symmetric up to roundoff.
  return ChoiMatrix{0.5 * (c + c.transpose())};
}

KrausSet choi_to_kraus(const ChoiMatrix& c, int rank) {
  const Index side = c.matrix.rows();
  const Index d2 = isqrt_exact(side, "choi_to_kraus: Choi side must be a perfect square");
  if (rank < 1 || rank > side) throw std::invalid_argument("choi_to_kraus: rank out of [1, d^4]");

  Eigen::SelfAdjointEigenSolver<Matrix> es(c.matrix);
  if (es.info() != Eigen::Success) throw NumericError("choi_to_kraus: eigendecomposition failed");

  // Eigenvalues come out ascending; we take them from the top.
  const Vector& evals = es.eigenvalues();
  if (evals(0) < -1e-6) throw NumericError("choi_to_kraus: Choi matrix has eigenvalue below -1e-6 (non-CP input)");

  KrausSet k;
  k.ops.reserve(static_cast<size_t>(rank));
  for (int q = 0; q < rank; ++q) {
    const Index idx = side - 1 - q;
    const double lambda = std::max(evals(idx), 0.0);  // clamp tiny negative tails
    Vector col = std::sqrt(lambda) * es.eigenvectors().col(idx);
    k.ops.push_back(unvec_row(col, d2, d2));
  }
  return k;
}

StiefelPoint kraus_to_stiefel(const KrausSet& k) {
  if (k.ops.empty()) throw std::invalid_argument("kraus_to_stiefel: empty Kraus set");
  const Index p = k.ops.front().cols();
  Matrix x(static_cast<Index>(k.ops.size()) * p, p);
  for (size_t q = 0; q < k.ops.size(); ++q) {
    if (k.ops[q].rows() != p || k.ops[q].cols() != p)
      throw std::invalid_argument("kraus_to_stiefel: inconsistent Kraus shapes");
    x.block(static_cast<Index>(q) * p, 0, p, p) = k.ops[q];
  }
  return StiefelPoint{std::move(x)};
}

Superoperator stiefel_to_superop(const StiefelPoint& x) {
  const Index p = x.cols();
  if (p == 0 || x.rows() % p != 0) throw std::invalid_argument("stiefel_to_superop: rows must be a multiple of cols");
  const Index d = isqrt_exact(p, "stiefel_to_superop: cols must be d^2");
  const Index r = x.rows() / p;
  Matrix s = Matrix::Zero(p * p, p * p);
  for (Index q = 0; q < r; ++q) {
    const auto e = x.matrix.block(q * p, 0, p, p);
    for (Index i = 0; i < p; ++i)
      for (Index k = 0; k < p; ++k) s.block(i * p, k * p, p, p) += e(i, k) * e;
  }
  return Superoperator{std::move(s), 2, static_cast<int>(d)};
}

StiefelPoint superop_to_stiefel(const Superoperator& s, int rank) {
  return kraus_to_stiefel(choi_to_kraus(superop_to_choi(s), rank));
}

LegPermutation global_local_perm(int sites, int offset, int local_dim) {
  if (sites < 2 || sites % 2 != 0) throw std::invalid_argument("global_local_perm: N must be even and >= 2");
  if (offset != 0 && offset != 1) throw std::invalid_argument("global_local_perm: offset must be 0 or 1");
  LegPermutation p;
  p.sites = sites;
  p.local_dim = local_dim;
  p.legs.reserve(static_cast<size_t>(2 * sites));
  for (int b = 0; b < sites / 2; ++b) {
    const int s1 = (2 * b + offset) % sites;
    const int s2 = (2 * b + 1 + offset) % sites;
    p.legs.push_back(s1);
    p.legs.push_back(s2);
    p.legs.push_back(sites + s1);
    p.legs.push_back(sites + s2);
  }
  return p;
}

int choi_natural_rank(const ChoiMatrix& c, double tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(c.matrix, Eigen::EigenvaluesOnly);
  const Vector mags = es.eigenvalues().cwiseAbs();
  const double top = mags.maxCoeff();
  if (top == 0.0) return 0;
  return static_cast<int>((mags.array() > tol * top).count());
}

int choi_rank(const Superoperator& s, double tol) {
  if (tol <= 0.0 || tol >= 1.0) throw std::invalid_argument("choi_rank: tol must lie in (0,1)");
  const Index d_half = isqrt_exact(s.side(), "choi_rank: side must be a perfect square");
  const Matrix c = reshuffle(s.matrix, d_half);
  Eigen::BDCSVD<Matrix> svd(c);
  const Vector& sv = svd.singularValues();
  const double top = sv(0);
  if (top == 0.0) return 0;
  return static_cast<int>((sv.array() > tol * top).count());
}

}  // namespace chanrep
}  // namespace lindopt
