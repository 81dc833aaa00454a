#pragma once

// Shared helpers for the test suites: small instance builders and
// independent value oracles that do not go through the KKT/enumeration
// code paths they are used to check.

#include <cstdint>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "qproj/instance_gen.hpp"
#include "qproj/learn.hpp"
#include "qproj/qp_core.hpp"

namespace qproj::testing {

// 1-D box QP: min x^2 - 2x on [-1, 1], optimum x* = 1, value -1.
inline QpInstance one_dim_box() {
  QpInstance inst;
  inst.Q = Matrix::Constant(1, 1, 2.0);
  inst.c = Vector::Constant(1, -2.0);
  inst.A = Matrix(2, 1);
  inst.A << 1.0, -1.0;
  inst.b = Vector::Constant(2, 1.0);
  inst.R = 1.0;
  inst.H = 1.0;
  return inst;
}

// 2-D box QP: min 1/2 ||x||^2 - x_1 on [-1, 1]^2, optimum (1, 0).
inline QpInstance two_dim_box() {
  QpInstance inst;
  inst.Q = Matrix::Identity(2, 2);
  inst.c = Vector(2);
  inst.c << -1.0, 0.0;
  inst.A = Matrix(4, 2);
  inst.A << 1, 0, -1, 0, 0, 1, 0, -1;
  inst.b = Vector::Constant(4, 1.0);
  inst.R = std::sqrt(2.0);
  inst.H = 2.0;
  return inst;
}

inline QpInstance random_pd_instance(int n, int m, std::uint64_t seed) {
  GenSpec spec;
  spec.family = Family::random_pd;
  spec.n = n;
  spec.m = m;
  spec.seed = seed;
  spec.count = 1;
  return generate(spec).front();
}

inline ProjectionMatrix single_column(std::initializer_list<double> entries) {
  Matrix p(static_cast<Eigen::Index>(entries.size()), 1);
  Eigen::Index i = 0;
  for (double v : entries) p(i++, 0) = v;
  return ProjectionMatrix{p};
}

// Independent value oracle: projected gradient ascent on the dual
//   g(lambda) = -1/2 (ct + At'lambda)' Qt^{-1} (ct + At'lambda) - b'lambda
// over lambda >= 0, with a diminishing step. The projection (clamping)
// is exact, and by strong duality the optimal dual value equals the
// primal optimum. Shares no code with the enumeration/KKT path.
inline double dual_pgd_value(const ProjectedQp& pqp, int steps) {
  Eigen::LLT<Matrix> chol(pqp.Qt);
  const Matrix qinv_at = chol.solve(pqp.At.transpose());  // Qt^{-1} At'
  const Vector qinv_ct = chol.solve(pqp.ct);

  const Matrix hess = pqp.At * qinv_at;  // dual curvature
  Eigen::SelfAdjointEigenSolver<Matrix> es(hess, Eigen::EigenvaluesOnly);
  const double lips = std::max(es.eigenvalues().maxCoeff(), 1e-12);

  Vector lambda = Vector::Zero(pqp.m());
  const double t_half = steps / 2.0;
  for (int t = 0; t < steps; ++t) {
    const Vector grad = -pqp.At * (qinv_ct + qinv_at * lambda) - pqp.b;
    const double step = (1.0 / lips) * (t_half / (t_half + t));
    lambda = (lambda + step * grad).cwiseMax(0.0);
  }
  const Vector u = pqp.ct + pqp.At.transpose() * lambda;
  return -0.5 * u.dot(chol.solve(u)) - pqp.b.dot(lambda);
}

// Central finite differences of the perturbed optimal value w.r.t. P.
inline Matrix fd_envelope_grad(const QpInstance& inst, const ProjectionMatrix& P, double gamma,
                               double h = 1e-5) {
  Matrix grad(P.n(), P.k());
  for (Eigen::Index i = 0; i < P.n(); ++i) {
    for (Eigen::Index j = 0; j < P.k(); ++j) {
      ProjectionMatrix plus = P, minus = P;
      plus.P(i, j) += h;
      minus.P(i, j) -= h;
      grad(i, j) =
          (objective_loss(inst, plus, gamma) - objective_loss(inst, minus, gamma)) / (2.0 * h);
    }
  }
  return grad;
}

inline Matrix fd_matching_grad(const QpInstance& inst, const ProjectionMatrix& P,
                               double h = 1e-5) {
  Matrix grad(P.n(), P.k());
  for (Eigen::Index i = 0; i < P.n(); ++i) {
    for (Eigen::Index j = 0; j < P.k(); ++j) {
      ProjectionMatrix plus = P, minus = P;
      plus.P(i, j) += h;
      minus.P(i, j) -= h;
      grad(i, j) = (matching_loss(inst, plus) - matching_loss(inst, minus)) / (2.0 * h);
    }
  }
  return grad;
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix mat(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) mat(i, j) = gauss(rng);
  return mat;
}

// Well-conditioned random invertible k x k matrix.
inline Matrix random_invertible(Eigen::Index k, std::uint64_t seed) {
  Matrix mat = random_matrix(k, k, seed) + 3.0 * Matrix::Identity(k, k);
  return mat;
}

}  // namespace qproj::testing
