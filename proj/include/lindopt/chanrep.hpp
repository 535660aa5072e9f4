#pragma once

#include <Eigen/Dense>
#include <vector>

namespace lindopt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Dense superoperator acting on row-major vectorized density matrices of an
/// N-site chain with local dimension d. Side is d^(2N).
struct Superoperator {
  Matrix matrix;
  int sites = 2;
  int local_dim = 2;

  Superoperator() = default;
  Superoperator(Matrix m, int n_sites, int d);
  Index side() const { return matrix.rows(); }
};

/// Symmetric d^4 x d^4 Choi matrix of a two-site channel.
struct ChoiMatrix {
  Matrix matrix;
};

/// Ordered Kraus operators of a two-site channel; each op is d^2 x d^2.
struct KrausSet {
  std::vector<Matrix> ops;
  int rank() const { return static_cast<int>(ops.size()); }
};

/// Real n x p matrix with orthonormal columns (n = R d^2, p = d^2).
struct StiefelPoint {
  Matrix matrix;
  Index rows() const { return matrix.rows(); }
  Index cols() const { return matrix.cols(); }
};

/// Permutation of the 2N tensor legs of an N-site superoperator, together
/// with its action on d^(2N)-dimensional indices.
///
/// Global leg order is (1..N, 1*..N*); local order groups each site pair with
/// its conjugates: (1,2,1*,2*,3,4,3*,4*,...). `legs[q]` is the 0-based global
/// leg occupying local position q. Conjugation by the induced permutation
/// matrix P maps global-ordered superoperators to local order: L_loc = P L_glob P^T.
struct LegPermutation {
  std::vector<int> legs;
  int sites = 0;
  int local_dim = 2;

  Index dim() const;
  /// g with (P v)[a] = v[g(a)]: global index carried at local position a.
  const std::vector<Index>& index_map() const;
  /// Dense 0/1 permutation matrix P (exact integer entries).
  Matrix as_matrix() const;
  /// P M P^T (global-order superoperator to local order).
  Matrix to_local(const Matrix& global_mat) const;
  /// P^T M P (local-order superoperator to global order).
  Matrix to_global(const Matrix& local_mat) const;

 private:
  mutable std::vector<Index> cached_map_;
};

namespace chanrep {

/// Row-major flattening, so that vec(A rho B) = (A (x) B^T) vec(rho).
Vector vec_row(const Matrix& m);
Matrix unvec_row(const Vector& v, Index rows, Index cols);
/// unvec_row for square targets; length must be a perfect square.
Matrix unvec_row(const Vector& v);

/// Index reshuffle C[(i,k),(j,l)] = S[(i,j),(k,l)] with i,j,k,l in [dim].
/// Involutive; maps a superoperator of side dim^2 to its Choi matrix.
Matrix reshuffle(const Matrix& s, Index dim);

/// Choi matrix of a two-site superoperator (side d^4), symmetrized.
ChoiMatrix superop_to_choi(const Superoperator& s);

/// Truncated factorization of the Choi matrix: keep the R largest eigenpairs,
/// scale eigenvectors by sqrt(eigenvalue) and reshape row-major into d^2 x d^2
/// Kraus operators. Eigenvalues in (-1e-6, 0) are clamped to zero; anything
/// below -1e-6 signals a non-CP input.
KrausSet choi_to_kraus(const ChoiMatrix& c, int rank);

/// Vertical stacking X = [E_1; ...; E_R].
StiefelPoint kraus_to_stiefel(const KrausSet& k);

/// Inverse map: slice X into R blocks E_q and return sum_q E_q (x) E_q
/// (real Kraus operators, so the conjugate factor equals E_q).
Superoperator stiefel_to_superop(const StiefelPoint& x);

/// Composite map superoperator -> isometry at the given channel rank.
StiefelPoint superop_to_stiefel(const Superoperator& s, int rank);

/// Leg permutation taking global to local ordering. `offset` 1 first shifts
/// sites cyclically by one so the local pairs become (2,3),(4,5),...,(N,1);
/// used for even layers under periodic boundary conditions. N must be even.
LegPermutation global_local_perm(int sites, int offset, int local_dim = 2);

/// Number of eigenvalues of the two-site Choi matrix above tol * largest.
int choi_natural_rank(const ChoiMatrix& c, double tol = 1e-10);

/// Numerical Choi rank of a full-system superoperator: singular values of the
/// reshuffled matrix above tol * largest.
int choi_rank(const Superoperator& s, double tol = 1e-10);

}  // namespace chanrep
}  // namespace lindopt
