#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "qproj/learn.hpp"
#include "qproj/qp_core.hpp"

namespace qproj {

/// ReLU MLP mapping a flattened instance (Q, c, A, b row-major) to the
/// entries of an n-by-k projection matrix (row-major output layer).
struct InputAwareNet {
  std::vector<Eigen::Index> layer_widths;  // [W0, hidden..., n*k]
  std::vector<Matrix> weights;             // weights[i]: widths[i+1] x widths[i]
  std::vector<Vector> biases;

  Eigen::Index theta_count() const;
  bool consistent() const;
};

/// Concatenation [vec(Q); c; vec(A); b], length n^2 + n + n*m + m.
Vector flatten(const QpInstance& inst);

/// Seeded Gaussian initialization (He scaling on hidden layers).
InputAwareNet make_net(const std::vector<Eigen::Index>& layer_widths, std::uint64_t seed);

/// Forward pass; the raw n*k output is reshaped row-major and rank
/// repaired when needed so the ProjectionMatrix invariant holds.
/// *repaired reports whether the repair fired.
ProjectionMatrix forward(const InputAwareNet& net, const QpInstance& inst, Eigen::Index k,
                         bool* repaired = nullptr);

/// Backpropagated gradient of ell(f_theta(pi_flat), pi_gamma) w.r.t. all
/// network parameters, laid out like the net itself.
struct NetGrad {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};
NetGrad loss_grad_theta(const InputAwareNet& net, const QpInstance& inst, Eigen::Index k,
                        double gamma);

struct InputAwareReport {
  std::vector<std::pair<int, double>> loss_trace;
  std::vector<double> per_instance_final;
  int rank_repairs = 0;
};

/// Gradient descent on the mean perturbed objective loss through the
/// network. `hidden_widths` lists the hidden layer sizes only.
std::pair<InputAwareNet, InputAwareReport> train_input_aware(
    const std::vector<QpInstance>& sample, const std::vector<Eigen::Index>& hidden_widths,
    const TrainConfig& cfg);

/// Checkpoint JSON: {"widths": [...], "layers": [{"W": row-major, "b": [...]}, ...]}.
void save_net(const std::filesystem::path& path, const InputAwareNet& net);
InputAwareNet load_net(const std::filesystem::path& path);

}  // namespace qproj
