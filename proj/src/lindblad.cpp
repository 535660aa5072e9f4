#include "lindopt/lindblad.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lindopt/errors.hpp"

namespace lindopt::lindblad {

namespace {

Index int_pow(Index base, int exp) {
  Index r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

Matrix kron(const Matrix& a, const Matrix& b) { return Eigen::kroneckerProduct(a, b); }

}  // namespace

std::vector<Matrix> jump_operators(Model model, double gamma) {
  if (gamma <= 0.0) throw std::invalid_argument("jump_operators: gamma must be positive");
  Matrix id = Matrix::Identity(2, 2);
  switch (model) {
    case Model::kitaev: {
      // Bond quasiparticle annihilator of the dissipative wire: maps the
      // one-excitation triplet onto the even-parity pair state,
      // (|00> + |11>)(<01| + <10|). Reproduces the two-site channel rank 2
      // and the full-system Choi ranks of this model.
      Matrix l(4, 4);
      l << 0, 1, 1, 0,
           0, 0, 0, 0,
           0, 0, 0, 0,
           0, 1, 1, 0;
      return {std::sqrt(gamma) / 4.0 * l};
    }
    case Model::pspl: {
      Matrix px(2, 2), pz(2, 2);
      px << 0, 1, 1, 0;
      pz << 1, 0, 0, -1;
      const double s = std::sqrt(gamma);
      return {s * (kron(px, id) - kron(id, px)), s * (kron(pz, id) - kron(id, pz))};
    }
  }
  throw std::invalid_argument("jump_operators: unknown model");
}

LindbladModel make_model(Model model, double gamma) {
  return LindbladModel{model, gamma, jump_operators(model, gamma)};
}

Dissipator local_dissipator(const std::vector<Matrix>& jump_ops) {
  Index dim = jump_ops.empty() ? 4 : jump_ops.front().rows();
  Matrix d = Matrix::Zero(dim * dim, dim * dim);
  const Matrix id = Matrix::Identity(dim, dim);
  for (const Matrix& l : jump_ops) {
    if (l.rows() != dim || l.cols() != dim) throw std::invalid_argument("local_dissipator: inconsistent jump shapes");
    const Matrix ltl = l.transpose() * l;
    d += kron(l, l) - 0.5 * (kron(ltl, id) + kron(id, ltl));
  }
  return Dissipator{std::move(d)};
}

Matrix permute_sites(const Matrix& op, const std::vector<int>& site_of_slot, int d) {
  const int n = static_cast<int>(site_of_slot.size());
  const Index dim = int_pow(d, n);
  if (op.rows() != dim || op.cols() != dim) throw std::invalid_argument("permute_sites: size mismatch");
  // New index digit at position site_of_slot[i] comes from old digit i.
  std::vector<Index> map(static_cast<size_t>(dim));
  for (Index a = 0; a < dim; ++a) {
    Index rem = a, out = 0;
    for (int slot = 0; slot < n; ++slot) {
      const Index w_old = int_pow(d, n - 1 - slot);
      const Index digit = rem / w_old;
      rem -= digit * w_old;
      out += digit * int_pow(d, n - 1 - site_of_slot[static_cast<size_t>(slot)]);
    }
    map[static_cast<size_t>(a)] = out;
  }
  Matrix out(dim, dim);
  for (Index c = 0; c < dim; ++c)
    for (Index r = 0; r < dim; ++r) out(map[static_cast<size_t>(r)], map[static_cast<size_t>(c)]) = op(r, c);
  return out;
}

Matrix embed_two_site(const Matrix& two_site_op, int sites, int ell, int d) {
  if (sites < 2) throw std::invalid_argument("embed_two_site: need at least two sites");
  if (ell < 1 || ell > sites) throw std::invalid_argument("embed_two_site: ell out of range");
  if (two_site_op.rows() != d * d || two_site_op.cols() != d * d)
    throw std::invalid_argument("embed_two_site: operator must be d^2 x d^2");
  Matrix m = two_site_op;
  if (sites > 2) m = kron(m, Matrix::Identity(int_pow(d, sites - 2), int_pow(d, sites - 2)));
  // Slots 0,1 act on sites ell-1 and ell mod N (0-based); the identity slots
  // fill the remaining sites in increasing order.
  std::vector<int> site_of_slot = {ell - 1, ell % sites};
  for (int s = 0; s < sites; ++s)
    if (s != site_of_slot[0] && s != site_of_slot[1]) site_of_slot.push_back(s);
  return permute_sites(m, site_of_slot, d);
}

Matrix liouvillian_term(const Matrix& embedded_jump) {
  const Index dim = embedded_jump.rows();
  const Matrix id = Matrix::Identity(dim, dim);
  const Matrix ltl = embedded_jump.transpose() * embedded_jump;
  return kron(embedded_jump, embedded_jump) - 0.5 * (kron(ltl, id) + kron(id, ltl));
}

namespace {

Matrix liouvillian_sum(const LindbladModel& model, int sites, bool odd_terms, bool even_terms) {
  const Index dim = int_pow(2, 2 * sites);
  Matrix l = Matrix::Zero(dim, dim);
  for (int ell = 1; ell <= sites; ++ell) {
    const bool is_odd = (ell % 2 == 1);
    if (is_odd && !odd_terms) continue;
    if (!is_odd && !even_terms) continue;
    for (const Matrix& lk : model.jump_ops) l += liouvillian_term(embed_two_site(lk, sites, ell));
  }
  return l;
}

}  // namespace

FullLiouvillian full_liouvillian(const LindbladModel& model, int sites, int max_sites) {
  if (sites < 2 || sites % 2 != 0) throw std::invalid_argument("full_liouvillian: N must be even and >= 2");
  if (sites > max_sites) throw ConfigError("full_liouvillian: N exceeds the configured memory cap");
  return FullLiouvillian{liouvillian_sum(model, sites, true, true), model, sites};
}

Matrix parity_liouvillian(const LindbladModel& model, int sites, Parity parity) {
  if (sites < 2 || sites % 2 != 0) throw std::invalid_argument("parity_liouvillian: N must be even and >= 2");
  return liouvillian_sum(model, sites, parity == Parity::odd, parity == Parity::even);
}

Matrix expm(const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("expm: matrix must be square");
  if (!m.allFinite()) throw NumericError("expm: non-finite entries");
  return m.exp();
}

}  // namespace lindopt::lindblad
