#pragma once

#include <vector>

#include "lindopt/chanrep.hpp"

namespace lindopt {

enum class Model { kitaev, pspl };

/// Nearest-neighbor noise model: real two-site jump operators with strength gamma.
struct LindbladModel {
  Model name = Model::kitaev;
  double gamma = 1.0;
  std::vector<Matrix> jump_ops;
};

/// Two-site vectorized Lindbladian generator, a real d^4 x d^4 matrix.
struct Dissipator {
  Matrix matrix;
};

/// Full N-site Lindbladian superoperator (sum of all nearest-neighbor terms
/// including the periodic [N,1] term).
struct FullLiouvillian {
  Matrix matrix;
  LindbladModel model;
  int sites = 0;
};

enum class Parity { odd, even };

namespace lindblad {

/// Jump operators for the given model, scaled by sqrt(gamma) conventions:
/// Kitaev wire: (sqrt(gamma)/4)(a^dag (x) I + I (x) a);
/// PSPL: sqrt(gamma)(X (x) I - I (x) X) and sqrt(gamma)(Z (x) I - I (x) Z).
std::vector<Matrix> jump_operators(Model model, double gamma);

LindbladModel make_model(Model model, double gamma = 1.0);

/// D = sum_k [L_k (x) L_k - 1/2 (L_k^T L_k (x) I + I (x) L_k^T L_k)]
/// for real jump operators under the row-major vec convention.
Dissipator local_dissipator(const std::vector<Matrix>& jump_ops);

/// Relocate the tensor factors of `op` so that slot i acts on site
/// site_of_slot[i] (0-based); all slots must be d-dimensional.
Matrix permute_sites(const Matrix& op, const std::vector<int>& site_of_slot, int d);

/// Embed a two-site operator at the (1-based) pair (ell, ell+1), with
/// ell = N wrapping periodically to (N, 1).
Matrix embed_two_site(const Matrix& two_site_op, int sites, int ell, int d = 2);

/// Vectorized Lindbladian of one embedded jump operator A:
/// A (x) A - 1/2 (A^T A (x) I + I (x) A^T A).
Matrix liouvillian_term(const Matrix& embedded_jump);

/// Sum over ell = 1..N of the embedded two-site generators (PBC included).
FullLiouvillian full_liouvillian(const LindbladModel& model, int sites, int max_sites = 6);

/// Sum of the odd terms (1,2),(3,4),... or the even terms (2,3),...,(N,1).
Matrix parity_liouvillian(const LindbladModel& model, int sites, Parity parity);

/// Dense matrix exponential (scaling-and-squaring with Pade approximants).
Matrix expm(const Matrix& m);

}  // namespace lindblad
}  // namespace lindopt
