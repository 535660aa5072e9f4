#include "lindopt/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

#include "lindopt/errors.hpp"

namespace lindopt::optim {

namespace {

Index int_pow(Index base, int exp) {
  Index r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

std::vector<Matrix> layer_matrices(const IsometryVector& xvec) {
  std::vector<Matrix> mats;
  mats.reserve(xvec.layers.size());
  for (const auto& l : xvec.layers) mats.push_back(l.matrix);
  return mats;
}

double stack_norm(const std::vector<Matrix>& mats) {
  double s = 0.0;
  for (const auto& m : mats) s += m.squaredNorm();
  return std::sqrt(s);
}

double stack_dot(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i].array() * b[i].array()).sum();
  return s;
}

// Contract the digit pair `slot` of a (q^k x q^k) matrix against phi (q x q),
// leaving a (q^{k-1} x q^{k-1}) matrix over the remaining slots.
Matrix contract_slot(const Matrix& m, int k, int slot, const Matrix& phi) {
  const Index q = phi.rows();
  const Index low = int_pow(q, k - 1 - slot);
  const Index hi = int_pow(q, slot);
  const Index out_dim = int_pow(q, k - 1);
  Matrix out = Matrix::Zero(out_dim, out_dim);
  for (Index rh = 0; rh < hi; ++rh)
    for (Index rl = 0; rl < low; ++rl) {
      const Index ro = rh * low + rl;
      for (Index ch = 0; ch < hi; ++ch)
        for (Index cl = 0; cl < low; ++cl) {
          const Index co = ch * low + cl;
          double acc = 0.0;
          for (Index a = 0; a < q; ++a) {
            const Index r = rh * q * low + a * low + rl;
            for (Index b = 0; b < q; ++b) acc += m(r, ch * q * low + b * low + cl) * phi(a, b);
          }
          out(ro, co) = acc;
        }
    }
  return out;
}

// N_b: contraction of M against per-slot matrices on every pair slot except b.
Matrix partial_contract(Matrix m, int pairs, int b, const std::vector<const Matrix*>& slot_mats) {
  std::vector<int> alive(static_cast<size_t>(pairs));
  for (int i = 0; i < pairs; ++i) alive[static_cast<size_t>(i)] = i;
  int b_pos = b;
  while (alive.size() > 1) {
    const int k = static_cast<int>(alive.size());
    int pos = (b_pos == k - 1) ? 0 : k - 1;
    m = contract_slot(m, k, pos, *slot_mats[static_cast<size_t>(alive[static_cast<size_t>(pos)])]);
    alive.erase(alive.begin() + pos);
    if (pos < b_pos) --b_pos;
  }
  return m;
}

// Channel superoperator sum_q E_q (x) F_q from the stacked blocks of x and y
// (y = x gives the channel; mixed arguments give its directional derivative).
Matrix channel_bilinear(const Matrix& x, const Matrix& y) {
  const Index p = x.cols();
  const Index r = x.rows() / p;
  Matrix s = Matrix::Zero(p * p, p * p);
  for (Index q = 0; q < r; ++q) {
    const auto e = x.block(q * p, 0, p, p);
    const auto f = y.block(q * p, 0, p, p);
    for (Index i = 0; i < p; ++i)
      for (Index k = 0; k < p; ++k) s.block(i * p, k * p, p, p) += e(i, k) * f;
  }
  return s;
}

Matrix channel_superop(const Matrix& x) { return channel_bilinear(x, x); }

Matrix kron_power(const Matrix& phi, int count) {
  Matrix acc = phi;
  for (int b = 1; b < count; ++b) {
    Matrix next(acc.rows() * phi.rows(), acc.cols() * phi.cols());
    for (Index i = 0; i < acc.rows(); ++i)
      for (Index j = 0; j < acc.cols(); ++j)
        next.block(i * phi.rows(), j * phi.cols(), phi.rows(), phi.cols()) = acc(i, j) * phi;
    acc = std::move(next);
  }
  return acc;
}

// d(phi^{(x) K})[dphi]: sum over slots of phi (x) ... dphi ... (x) phi.
Matrix kron_power_jvp(const Matrix& phi, const Matrix& dphi, int count) {
  Matrix out = Matrix::Zero(int_pow(phi.rows(), count), int_pow(phi.cols(), count));
  for (int slot = 0; slot < count; ++slot) {
    Matrix acc = slot == 0 ? dphi : phi;
    for (int b = 1; b < count; ++b) {
      const Matrix& factor = (b == slot) ? dphi : phi;
      Matrix next(acc.rows() * factor.rows(), acc.cols() * factor.cols());
      for (Index i = 0; i < acc.rows(); ++i)
        for (Index j = 0; j < acc.cols(); ++j)
          next.block(i * factor.rows(), j * factor.cols(), factor.rows(), factor.cols()) = acc(i, j) * factor;
      acc = std::move(next);
    }
    out += acc;
  }
  return out;
}

// Evaluates the cost, its ambient gradient, and exact gradient directional
// derivatives for a fixed objective. All methods are const and safe to call
// concurrently.
class CostEngine {
 public:
  explicit CostEngine(const Objective& obj)
      : ref_(obj.reference.matrix),
        schedule_(obj.schedule),
        pairs_(obj.sites / 2),
        perm_odd_(chanrep::global_local_perm(obj.sites, 0)),
        perm_even_(chanrep::global_local_perm(obj.sites, 1)) {
    if (obj.sites < 2 || obj.sites % 2 != 0) throw std::invalid_argument("Objective: sites must be even");
    if (obj.reference.side() != int_pow(4, obj.sites))
      throw std::invalid_argument("Objective: reference side must equal d^(2N)");
    perm_odd_.index_map();
    perm_even_.index_map();
  }

  // Shared factorization of one evaluation point; reused by every
  // Hessian column at that point.
  struct BasePoint {
    std::vector<Matrix> xs;    // layer matrices
    std::vector<Matrix> phi;   // two-site channels
    std::vector<Matrix> g;     // global layer superoperators
    std::vector<Matrix> pre;   // pre[a] = G_{a-1} ... G_0 (pre[0] = I)
    std::vector<Matrix> rs;    // rs[a] = suf_a^T Delta
    std::vector<Matrix> mloc;  // local-frame M_a
    std::vector<Matrix> t;     // unscaled ambient gradient assembly
    Matrix delta;
    double f = 0.0;
  };

  const LegPermutation& perm(Parity p) const { return p == Parity::odd ? perm_odd_ : perm_even_; }

  Matrix layer_global(const Matrix& x, Parity parity) const {
    return perm(parity).to_global(kron_power(channel_superop(x), pairs_));
  }

  double cost(const std::vector<Matrix>& xs) const {
    Matrix product = layer_global(xs[0], schedule_.entries[0].parity);
    for (size_t a = 1; a < xs.size(); ++a)
      product = (layer_global(xs[a], schedule_.entries[a].parity) * product).eval();
    return (product - ref_).norm();
  }

  BasePoint prepare(const std::vector<Matrix>& xs, bool with_gradient = true) const {
    const int m = static_cast<int>(xs.size());
    BasePoint bp;
    bp.xs = xs;
    bp.phi.resize(m);
    bp.g.resize(m);
    bp.pre.resize(m);
    for (int a = 0; a < m; ++a) {
      bp.phi[a] = channel_superop(xs[a]);
      bp.g[a] = perm(schedule_.entries[a].parity).to_global(kron_power(bp.phi[a], pairs_));
    }
    Matrix running = Matrix::Identity(ref_.rows(), ref_.cols());
    for (int a = 0; a < m; ++a) {
      bp.pre[a] = running;
      running = (bp.g[a] * running).eval();
    }
    bp.delta = running - ref_;
    bp.f = bp.delta.norm();
    if (!with_gradient) return bp;
    if (bp.f < 1e-14) throw NumericError("ambient_gradient: cost is numerically zero; gradient undefined");

    bp.rs.resize(m);
    bp.mloc.resize(m);
    bp.t.resize(m);
    Matrix r = bp.delta;
    for (int a = m - 1; a >= 0; --a) {
      bp.rs[a] = r;
      bp.mloc[a] = perm(schedule_.entries[a].parity).to_local(r * bp.pre[a].transpose());
      bp.t[a] = assemble(bp.mloc[a], bp.phi[a], xs[a]);
      if (a > 0) r = (bp.g[a].transpose() * r).eval();
    }
    return bp;
  }

  std::vector<Matrix> ambient_gradient(const BasePoint& bp) const {
    std::vector<Matrix> g(bp.t.size());
    for (size_t a = 0; a < bp.t.size(); ++a) g[a] = bp.t[a] / bp.f;
    return g;
  }

  std::vector<Matrix> ambient_gradient(const std::vector<Matrix>& xs, double* f_out = nullptr) const {
    BasePoint bp = prepare(xs);
    if (f_out) *f_out = bp.f;
    return ambient_gradient(bp);
  }

  // Exact directional derivative of the ambient gradient along zs.
  std::vector<Matrix> ambient_gradient_jvp(const BasePoint& bp, const std::vector<Matrix>& zs) const {
    const int m = static_cast<int>(bp.xs.size());
    std::vector<Matrix> dphi(m), dg(m);
    for (int a = 0; a < m; ++a) {
      dphi[a] = channel_bilinear(bp.xs[a], zs[a]) + channel_bilinear(zs[a], bp.xs[a]);
      dg[a] = perm(schedule_.entries[a].parity).to_global(kron_power_jvp(bp.phi[a], dphi[a], pairs_));
    }

    // forward sweep: dpre[a] = d(G_{a-1} ... G_0)
    std::vector<Matrix> dpre(m);
    Matrix dacc = Matrix::Zero(ref_.rows(), ref_.cols());
    for (int a = 0; a < m; ++a) {
      dpre[a] = dacc;
      dacc = (dg[a] * bp.pre[a] + bp.g[a] * dacc).eval();
    }
    const Matrix& ds = dacc;  // = d(S)
    const double df = (bp.delta.array() * ds.array()).sum() / bp.f;

    // backward sweep: drs[a] = d(suf_a^T Delta)
    std::vector<Matrix> out(m);
    Matrix dr = ds;
    for (int a = m - 1; a >= 0; --a) {
      const LegPermutation& p = perm(schedule_.entries[a].parity);
      const Matrix dm = p.to_local(dr * bp.pre[a].transpose() + bp.rs[a] * dpre[a].transpose());
      Matrix dt = assemble(dm, bp.phi[a], bp.xs[a]);
      dt += assemble(bp.mloc[a], bp.phi[a], zs[a]);
      dt += assemble_phi_jvp(bp.mloc[a], bp.phi[a], dphi[a], bp.xs[a]);
      out[a] = dt / bp.f - bp.t[a] * (df / (bp.f * bp.f));
      if (a > 0) dr = (dg[a].transpose() * bp.rs[a] + bp.g[a].transpose() * dr).eval();
    }
    return out;
  }

  std::vector<Matrix> riemannian_field(const std::vector<Matrix>& xs, const MetricParams& metric) const {
    std::vector<Matrix> g = ambient_gradient(xs);
    for (size_t a = 0; a < xs.size(); ++a) g[a] = stiefel::riemannian_gradient(g[a], xs[a], metric);
    return g;
  }

 private:
  // The bilinear contraction behind the chain rule: for the b-th block slot,
  // N_b picks up the Kraus blocks of `target` twice (left and right factor).
  // Linear in `target`, so passing a direction delivers that derivative.
  Matrix assemble(const Matrix& mloc, const Matrix& phi, const Matrix& target) const {
    std::vector<const Matrix*> slots(static_cast<size_t>(pairs_), &phi);
    Matrix out = Matrix::Zero(target.rows(), target.cols());
    for (int b = 0; b < pairs_; ++b) accumulate_blocks(partial_contract(mloc, pairs_, b, slots), target, out);
    return out;
  }

  // Variation of `assemble` through the channel factors on the other slots.
  Matrix assemble_phi_jvp(const Matrix& mloc, const Matrix& phi, const Matrix& dphi, const Matrix& target) const {
    Matrix out = Matrix::Zero(target.rows(), target.cols());
    for (int b = 0; b < pairs_; ++b)
      for (int bd = 0; bd < pairs_; ++bd) {
        if (bd == b) continue;
        std::vector<const Matrix*> slots(static_cast<size_t>(pairs_), &phi);
        slots[static_cast<size_t>(bd)] = &dphi;
        accumulate_blocks(partial_contract(mloc, pairs_, b, slots), target, out);
      }
    return out;
  }

  void accumulate_blocks(const Matrix& nb, const Matrix& target, Matrix& out) const {
    const Index p = target.cols();
    const Index r = target.rows() / p;
    for (Index q = 0; q < r; ++q) {
      const auto e = target.block(q * p, 0, p, p);
      auto gq = out.block(q * p, 0, p, p);
      for (Index i = 0; i < p; ++i)
        for (Index k = 0; k < p; ++k) {
          double acc1 = 0.0;
          for (Index j = 0; j < p; ++j)
            for (Index l = 0; l < p; ++l) acc1 += nb(i * p + j, k * p + l) * e(j, l);
          gq(i, k) += acc1;
        }
      for (Index j = 0; j < p; ++j)
        for (Index l = 0; l < p; ++l) {
          double acc2 = 0.0;
          for (Index i = 0; i < p; ++i)
            for (Index k = 0; k < p; ++k) acc2 += nb(i * p + j, k * p + l) * e(i, k);
          gq(j, l) += acc2;
        }
    }
  }

  Matrix ref_;
  LayerSchedule schedule_;
  int pairs_;
  LegPermutation perm_odd_;
  LegPermutation perm_even_;
};

// Mapping between tangent vectors and step coordinates for one layer.
struct ParamMap {
  DirectionKind kind;
  Index n, p;

  Index per_layer() const { return kind == DirectionKind::canonical ? stiefel::tangent_dof(n, p) : n * p; }

  Matrix direction(const StiefelPoint& x, const Matrix& x_perp, Index idx) const {
    if (kind == DirectionKind::canonical) return stiefel::elementary_direction(x, x_perp, idx);
    return stiefel::suboptimal_direction(x, idx / p, idx % p);
  }

  Vector param(const Matrix& tangent, const StiefelPoint& x, const Matrix& x_perp) const {
    if (kind == DirectionKind::canonical) return stiefel::tangent_to_param(tangent, x, x_perp);
    Vector c(n * p);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < p; ++j) c(i * p + j) = tangent(i, j);
    return c;
  }

  Matrix step(const Vector& coords, const StiefelPoint& x, const Matrix& x_perp) const {
    if (kind == DirectionKind::canonical) return stiefel::param_to_tangent(coords, x, x_perp);
    Matrix raw(n, p);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < p; ++j) raw(i, j) = coords(i * p + j);
    return stiefel::project_tangent(raw, x);
  }

  // Diagonal Gram weights of the directions under the metric: the A block of
  // the canonical basis carries 2*alpha1 and the B block alpha0. The
  // projected-unit variant is defined with the Euclidean pairing only.
  Vector weights(const MetricParams& metric) const {
    Vector w = Vector::Ones(per_layer());
    if (kind == DirectionKind::canonical) {
      w.head(p * (p - 1) / 2).setConstant(2.0 * metric.alpha1);
      w.tail(p * (n - p)).setConstant(metric.alpha0);
    }
    return w;
  }
};

ParamMap make_param_map(const Objective& obj) {
  if (obj.directions == DirectionKind::projected_unit &&
      (obj.metric.alpha0 != 1.0 || obj.metric.alpha1 != 1.0))
    throw ConfigError("projected-unit directions require the Euclidean metric");
  const Index p = 4;  // d^2
  const Index n = static_cast<Index>(obj.rank) * p;
  return ParamMap{obj.directions, n, p};
}

void check_shapes(const IsometryVector& xvec, const Objective& obj) {
  if (xvec.layers.size() != obj.schedule.entries.size() || xvec.layers.size() != xvec.schedule.entries.size())
    throw std::invalid_argument("isometry vector does not match the objective schedule");
  const ParamMap pm = make_param_map(obj);
  for (const auto& l : xvec.layers)
    if (l.rows() != pm.n || l.cols() != pm.p) throw std::invalid_argument("layer shape does not match objective rank");
}

// Connection terms plus tangent projection on top of the gradient-field
// directional derivative `dgrad`.
std::vector<Matrix> apply_connection(const IsometryVector& xvec, const std::vector<Matrix>& base_grad,
                                     const std::vector<Matrix>& zvec, std::vector<Matrix> dgrad,
                                     const MetricParams& metric) {
  const double conn = (metric.alpha0 - metric.alpha1) / metric.alpha0;
  for (size_t a = 0; a < dgrad.size(); ++a) {
    const Matrix& x = xvec.layers[a].matrix;
    const Matrix& z = zvec[a];
    const Matrix& g = base_grad[a];
    dgrad[a] += 0.5 * x * (g.transpose() * z + z.transpose() * g);
    const Matrix sym_gz = g * z.transpose() + z * g.transpose();
    dgrad[a] += conn * (sym_gz * x - x * (x.transpose() * (sym_gz * x)));
    dgrad[a] = stiefel::project_tangent(dgrad[a], xvec.layers[a]);
  }
  return dgrad;
}

// Directional derivative of the Riemannian-gradient field (exact): chain rule
// through both the ambient gradient and the base-point dependence of the
// metric conversion formula.
std::vector<Matrix> riemannian_field_jvp(const CostEngine& engine, const CostEngine::BasePoint& bp,
                                         const std::vector<Matrix>& amb_grad, const std::vector<Matrix>& zvec,
                                         const MetricParams& metric) {
  const std::vector<Matrix> damb = engine.ambient_gradient_jvp(bp, zvec);
  const double a0 = metric.alpha0, a1 = metric.alpha1;
  const double c1 = 0.5 * (1.0 / a1 - 2.0 / a0);
  std::vector<Matrix> out(amb_grad.size());
  for (size_t a = 0; a < amb_grad.size(); ++a) {
    const Matrix& x = bp.xs[a];
    const Matrix& z = zvec[a];
    const Matrix& g = amb_grad[a];
    const Matrix& dg = damb[a];
    out[a] = dg / a0 + c1 * (z * (x.transpose() * g) + x * (z.transpose() * g) + x * (x.transpose() * dg)) -
             (z * (g.transpose() * x) + x * (dg.transpose() * x) + x * (g.transpose() * z)) / (2.0 * a1);
  }
  return out;
}

std::vector<Matrix> hess_vec_analytic(const CostEngine& engine, const CostEngine::BasePoint& bp,
                                      const IsometryVector& xvec, const std::vector<Matrix>& riem_grad,
                                      const std::vector<Matrix>& zvec, const MetricParams& metric) {
  const std::vector<Matrix> amb = engine.ambient_gradient(bp);
  std::vector<Matrix> dgrad = riemannian_field_jvp(engine, bp, amb, zvec, metric);
  return apply_connection(xvec, riem_grad, zvec, std::move(dgrad), metric);
}

std::vector<Matrix> hess_vec_fd(const CostEngine& engine, const IsometryVector& xvec,
                                const std::vector<Matrix>& riem_grad, const std::vector<Matrix>& zvec,
                                const MetricParams& metric, double fd_step) {
  const size_t m = xvec.layers.size();
  std::vector<Matrix> xs = layer_matrices(xvec);
  const double znorm = stack_norm(zvec);
  if (znorm == 0.0) {
    std::vector<Matrix> out(m);
    for (size_t a = 0; a < m; ++a) out[a] = Matrix::Zero(xs[a].rows(), xs[a].cols());
    return out;
  }
  // Differentiate along the unit direction and rescale; keeps the step size
  // honest for arbitrarily scaled Z.
  const double t = fd_step * (1.0 + stack_norm(xs));
  std::vector<Matrix> plus(m), minus(m);
  for (size_t a = 0; a < m; ++a) {
    plus[a] = xs[a] + (t / znorm) * zvec[a];
    minus[a] = xs[a] - (t / znorm) * zvec[a];
  }
  const std::vector<Matrix> gp = engine.riemannian_field(plus, metric);
  const std::vector<Matrix> gm = engine.riemannian_field(minus, metric);
  std::vector<Matrix> dgrad(m);
  for (size_t a = 0; a < m; ++a) dgrad[a] = (gp[a] - gm[a]) * (znorm / (2.0 * t));
  return apply_connection(xvec, riem_grad, zvec, std::move(dgrad), metric);
}

Matrix build_hessian_core(const CostEngine& engine, const CostEngine::BasePoint& bp, const IsometryVector& xvec,
                          const Objective& obj, const std::vector<Matrix>& riem_grad,
                          const std::vector<Matrix>& x_perp, const TrustRegionConfig& cfg) {
  const ParamMap pm = make_param_map(obj);
  const int m = xvec.layer_count();
  const Index per_layer = pm.per_layer();
  const Index dof = m * per_layer;
  if (obj.directions == DirectionKind::canonical && dof > cfg.hessian_dof_cap)
    throw ConfigError("build_hessian: DOF exceeds the configured cap");

  Matrix hess(dof, dof);
  std::atomic<Index> next{0};
  auto worker = [&]() {
    std::vector<Matrix> zvec(m);
    for (Index col = next.fetch_add(1); col < dof; col = next.fetch_add(1)) {
      const int alpha = static_cast<int>(col / per_layer);
      const Index idx = col % per_layer;
      for (int a = 0; a < m; ++a) zvec[a] = Matrix::Zero(pm.n, pm.p);
      zvec[alpha] = pm.direction(xvec.layers[alpha], x_perp[alpha], idx);
      const std::vector<Matrix> hv =
          cfg.fd_hessian ? hess_vec_fd(engine, xvec, riem_grad, zvec, obj.metric, cfg.hess_fd_step)
                         : hess_vec_analytic(engine, bp, xvec, riem_grad, zvec, obj.metric);
      for (int b = 0; b < m; ++b) hess.block(b * per_layer, col, per_layer, 1) = pm.param(hv[b], xvec.layers[b], x_perp[b]);
    }
  };
  const int n_threads = resolve_threads(cfg.threads);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return hess;
}

}  // namespace

int resolve_threads(int requested) {
  int count = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (count < 1) count = 1;
  if (const char* env = std::getenv("LINDBLAD_RIEMANN_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) count = std::min(count, cap);
  }
  return count;
}

Index coordinate_count(const Objective& obj) {
  const ParamMap pm = make_param_map(obj);
  return static_cast<Index>(obj.schedule.entries.size()) * pm.per_layer();
}

double cost(const IsometryVector& xvec, const Objective& obj) {
  check_shapes(xvec, obj);
  return CostEngine(obj).cost(layer_matrices(xvec));
}

std::vector<Matrix> ambient_gradient(const IsometryVector& xvec, const Objective& obj) {
  check_shapes(xvec, obj);
  return CostEngine(obj).ambient_gradient(layer_matrices(xvec));
}

std::vector<Matrix> riemannian_gradient(const IsometryVector& xvec, const Objective& obj) {
  check_shapes(xvec, obj);
  return CostEngine(obj).riemannian_field(layer_matrices(xvec), obj.metric);
}

std::vector<Matrix> hess_vec(const IsometryVector& xvec, const std::vector<Matrix>& zvec, const Objective& obj,
                             double fd_step) {
  check_shapes(xvec, obj);
  const CostEngine engine(obj);
  const CostEngine::BasePoint bp = engine.prepare(layer_matrices(xvec));
  std::vector<Matrix> riem = engine.ambient_gradient(bp);
  for (size_t a = 0; a < riem.size(); ++a) riem[a] = stiefel::riemannian_gradient(riem[a], bp.xs[a], obj.metric);
  if (fd_step > 0.0) return hess_vec_fd(engine, xvec, riem, zvec, obj.metric, fd_step);
  return hess_vec_analytic(engine, bp, xvec, riem, zvec, obj.metric);
}

Matrix build_hessian(const IsometryVector& xvec, const Objective& obj, const TrustRegionConfig& cfg) {
  check_shapes(xvec, obj);
  const CostEngine engine(obj);
  const CostEngine::BasePoint bp = engine.prepare(layer_matrices(xvec));
  std::vector<Matrix> riem = engine.ambient_gradient(bp);
  for (size_t a = 0; a < riem.size(); ++a) riem[a] = stiefel::riemannian_gradient(riem[a], bp.xs[a], obj.metric);
  std::vector<Matrix> x_perp;
  x_perp.reserve(xvec.layers.size());
  for (const auto& l : xvec.layers) x_perp.push_back(stiefel::orthogonal_complement(l));
  return build_hessian_core(engine, bp, xvec, obj, riem, x_perp, cfg);
}

Vector tcg_solve(const Vector& grad, const Matrix& hess, double delta, double cg_kappa, double cg_theta,
                 Index max_iter) {
  if (delta <= 0.0) throw std::invalid_argument("tcg_solve: delta must be positive");
  if (!grad.allFinite() || !hess.allFinite()) throw NumericError("tcg_solve: non-finite entries");
  const Index n = grad.size();
  if (max_iter < 0) max_iter = n;
  Vector z = Vector::Zero(n);
  Vector r = grad;
  const double r0 = r.norm();
  if (r0 == 0.0) return z;
  const double stop = r0 * std::min(cg_kappa, std::pow(r0, cg_theta));
  Vector d = -r;

  auto to_boundary = [&](const Vector& base, const Vector& dir) {
    const double dd = dir.squaredNorm();
    const double bd = base.dot(dir);
    const double bb = base.squaredNorm();
    const double tau = (-bd + std::sqrt(bd * bd + dd * (delta * delta - bb))) / dd;
    return (base + tau * dir).eval();
  };

  for (Index k = 0; k < max_iter; ++k) {
    const Vector hd = hess * d;
    const double dhd = d.dot(hd);
    if (dhd <= 0.0) return to_boundary(z, d);
    const double rr = r.squaredNorm();
    const double alpha = rr / dhd;
    if ((z + alpha * d).norm() >= delta) return to_boundary(z, d);
    z += alpha * d;
    r += alpha * hd;
    if (r.norm() <= stop) return z;
    d = -r + (r.squaredNorm() / rr) * d;
  }
  return z;
}

double tr_quotient(const Vector& grad, const Matrix& hess, const Vector& step, double f_now, double f_candidate) {
  const double predicted = -(grad.dot(step) + 0.5 * step.dot(hess * step));
  return (f_now - f_candidate) / predicted;
}

OptimRecord trust_region_run(const Objective& obj, const IsometryVector& x0, const TrustRegionConfig& cfg) {
  check_shapes(x0, obj);
  for (const auto& l : x0.layers)
    if ((l.matrix.transpose() * l.matrix - Matrix::Identity(l.cols(), l.cols())).norm() > 1e-8)
      throw std::invalid_argument("trust_region_run: starting layers must be isometric");
  const CostEngine engine(obj);
  const ParamMap pm = make_param_map(obj);
  const int m = x0.layer_count();
  const Index per_layer = pm.per_layer();
  const Index dof = m * per_layer;
  if (obj.directions == DirectionKind::canonical && dof > cfg.hessian_dof_cap)
    throw ConfigError("trust_region_run: DOF exceeds the configured Hessian cap");

  Vector weights(dof);
  for (int a = 0; a < m; ++a) weights.segment(a * per_layer, per_layer) = pm.weights(obj.metric);
  const Vector w_sqrt = weights.cwiseSqrt();

  double delta = cfg.delta0 > 0.0 ? cfg.delta0 : 0.1 * std::sqrt(static_cast<double>(dof));
  const double delta_max = cfg.delta_max > 0.0 ? cfg.delta_max : std::sqrt(static_cast<double>(dof));

  IsometryVector x = x0;
  OptimRecord rec;
  rec.dof = dof;
  double f = engine.cost(layer_matrices(x));
  rec.initial_cost = f;
  rec.cost_history.push_back(f);
  rec.stop_reason = "iteration budget";

  bool model_fresh = false;
  Vector g_u;
  Matrix h_u;
  std::vector<Matrix> x_perp(m);

  for (int iter = 1; iter <= cfg.max_outer; ++iter) {
    if (f < cfg.cost_tol) {
      rec.stop_reason = "cost below tolerance";
      break;
    }
    if (!model_fresh) {
      const CostEngine::BasePoint bp = engine.prepare(layer_matrices(x));
      std::vector<Matrix> riem = engine.ambient_gradient(bp);
      for (int a = 0; a < m; ++a) {
        riem[a] = stiefel::riemannian_gradient(riem[a], bp.xs[a], obj.metric);
        x_perp[a] = stiefel::orthogonal_complement(x.layers[a]);
      }
      Vector g_p(dof);
      for (int a = 0; a < m; ++a)
        g_p.segment(a * per_layer, per_layer) = pm.param(riem[a], x.layers[a], x_perp[a]);
      g_u = w_sqrt.cwiseProduct(g_p);
      if (g_u.norm() < cfg.grad_tol) {
        rec.stop_reason = "gradient below tolerance";
        break;
      }
      Matrix h = build_hessian_core(engine, bp, x, obj, riem, x_perp, cfg);
      // Metric-orthonormal coordinates: H_u = W^{1/2} H W^{-1/2}, symmetrized.
      h_u = w_sqrt.asDiagonal() * h * w_sqrt.cwiseInverse().asDiagonal();
      h_u = 0.5 * (h_u + h_u.transpose()).eval();
      model_fresh = true;
    }

    const Vector u = tcg_solve(g_u, h_u, delta, cfg.cg_kappa, cfg.cg_theta);
    const Vector z_coords = u.cwiseQuotient(w_sqrt);
    IsometryVector candidate = x;
    for (int a = 0; a < m; ++a) {
      const Matrix z = pm.step(z_coords.segment(a * per_layer, per_layer), x.layers[a], x_perp[a]);
      candidate.layers[a] = stiefel::retract_polar(x.layers[a], z);
    }
    const double f_cand = engine.cost(layer_matrices(candidate));
    const double rho = tr_quotient(g_u, h_u, u, f, f_cand);

    rec.radius_history.push_back(delta);
    rec.rho_history.push_back(rho);
    const bool accept = std::isfinite(rho) && rho >= cfg.rho_accept;
    rec.accepted.push_back(accept ? 1 : 0);
    if (accept) {
      x = std::move(candidate);
      f = f_cand;
      model_fresh = false;
    }
    if (!std::isfinite(rho) || rho < cfg.rho_accept)
      delta *= cfg.shrink;
    else if (rho >= cfg.rho_good)
      delta = std::min(cfg.grow * delta, delta_max);
    else
      delta *= cfg.shrink;
    rec.cost_history.push_back(f);
  }

  rec.final_isometries = std::move(x);
  rec.final_cost = f;
  return rec;
}

}  // namespace lindopt::optim
