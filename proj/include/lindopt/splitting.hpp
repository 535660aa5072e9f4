#pragma once

#include <vector>

#include "lindopt/chanrep.hpp"
#include "lindopt/lindblad.hpp"

namespace lindopt {

/// Layer pattern of the second-order splitting with n_tau time steps:
/// m = 2 n_tau + 1 layers, [(1/2,odd), (1,even), (1,odd), ..., (1,even), (1/2,odd)],
/// where interior odd half steps are already merged into full steps.
struct LayerSchedule {
  struct Entry {
    double coeff;
    Parity parity;
  };
  std::vector<Entry> entries;
  int n_tau = 0;
  int layer_count() const { return static_cast<int>(entries.size()); }
};

/// One isometry per schedule layer, all on the same Stiefel manifold.
struct IsometryVector {
  std::vector<StiefelPoint> layers;
  LayerSchedule schedule;
  int layer_count() const { return static_cast<int>(layers.size()); }
};

namespace splitting {

LayerSchedule layer_schedule(int n_tau);

/// Two-site layer superoperators exp(c_alpha * (tau/n_tau) * D).
std::vector<Matrix> build_trotter_layers(const Dissipator& d, double tau, int n_tau);

/// Isometry ansatz from layer superoperators at channel rank R.
IsometryVector build_ansatz(const std::vector<Matrix>& layers, const LayerSchedule& schedule, int rank);

/// Full-system superoperator S(X): layer alpha contributes the N/2-fold
/// tensor power of its channel, conjugated into global leg order with the
/// parity-dependent pair offset; layer 1 acts first on the state.
Superoperator compose_global(const IsometryVector& xvec, int sites);

/// Exact even/odd splitting composite (no channel-rank truncation): the
/// ordered product of exp(c_alpha * (tau/n_tau) * L_parity).
Matrix exact_trotter_superop(const LindbladModel& model, double tau, int n_tau, int sites);

/// Frobenius distance between exp(tau L) and the exact-layer splitting.
double trotter_error(const LindbladModel& model, double tau, int n_tau, int sites);

}  // namespace splitting
}  // namespace lindopt
