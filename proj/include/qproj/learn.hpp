#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qproj/oracle.hpp"
#include "qproj/qp_core.hpp"

namespace qproj {

enum class LossKind { objective, matching };

struct TrainConfig {
  int k = 2;
  double step_size = 1e-3;
  int iters = 100;
  double gamma = 1e-6;
  LossKind loss_kind = LossKind::objective;
  std::uint64_t seed = 0;
  double rank_floor = 1e-6;
};

struct TrainReport {
  std::vector<std::pair<int, double>> loss_trace;
  ProjectionMatrix final_P;
  std::vector<double> per_instance_final;
  int rank_repairs = 0;

  std::string to_json() const;
};

/// Optimal value of the gamma-perturbed projected problem.
double objective_loss(const QpInstance& inst, const ProjectionMatrix& P, double gamma);

/// Envelope-theorem gradient of the perturbed optimal value with
/// respect to P:  (Q_gamma P y* + c + A' lambda*) y*'.
Matrix envelope_grad(const QpInstance& inst, const ProjectionMatrix& P, double gamma);

/// || x* - P y*(P) ||^2 with x* the optimum of the original problem
/// (computed with P = I). Requires Q positive definite.
double matching_loss(const QpInstance& inst, const ProjectionMatrix& P);

/// Gradient of matching_loss by implicit differentiation through the
/// fixed-active-set KKT system. When the active set is not strict
/// (an active multiplier or inactive slack below 1e-6) the gradient
/// falls back to central finite differences and *used_fd is set.
Matrix matching_grad(const QpInstance& inst, const ProjectionMatrix& P,
                     bool* used_fd = nullptr);

/// Gaussian entries scaled by 1/sqrt(n), columns orthonormalized.
ProjectionMatrix random_projection(Eigen::Index n, Eigen::Index k, std::uint64_t seed);

/// Thin-QR column orthonormalization (loss-invariant reparametrization).
ProjectionMatrix orthonormalize(const ProjectionMatrix& P);

/// Fixed-step gradient descent on the mean empirical loss.
TrainReport train(const std::vector<QpInstance>& sample, const TrainConfig& cfg);

}  // namespace qproj
