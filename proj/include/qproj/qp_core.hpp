#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qproj {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Validation tolerances, relative to the scale of the data.
inline constexpr double kSymTol = 1e-10;
inline constexpr double kPsdTol = 1e-8;
inline constexpr double kOriginFeasTol = 1e-12;
inline constexpr double kRankTol = 1e-8;

/// An inequality-constrained convex QP
///   min 1/2 x'Qx + c'x  s.t.  Ax <= b
/// together with regularity metadata: R bounds the feasible region,
/// H bounds |optimal value|.
struct QpInstance {
  Matrix Q;
  Vector c;
  Matrix A;
  Vector b;
  double R = 0.0;
  double H = 0.0;
  std::string meta;

  Eigen::Index n() const { return Q.rows(); }
  Eigen::Index m() const { return A.rows(); }
};

/// Full-column-rank n-by-k map from the projected space back to the
/// original variable space.
struct ProjectionMatrix {
  Matrix P;

  Eigen::Index n() const { return P.rows(); }
  Eigen::Index k() const { return P.cols(); }

  bool full_column_rank() const;
};

/// The projected problem  min 1/2 y'Qt y + ct'y  s.t.  At y <= b.
struct ProjectedQp {
  Matrix Qt;  // P'QP
  Matrix At;  // AP
  Vector ct;  // P'c
  Vector b;   // shared with the parent instance

  Eigen::Index k() const { return Qt.rows(); }
  Eigen::Index m() const { return At.rows(); }
};

/// Tikhonov weight for Q -> Q + gamma*I.
struct PerturbSpec {
  double gamma = 0.0;
};

/// Checks symmetry, positive semidefiniteness, origin feasibility and
/// dimension consistency. Violations are returned as human-readable
/// strings; an empty list means the instance is valid.
std::vector<std::string> validate_instance(const QpInstance& inst);

/// Q -> Q + gamma*I, everything else unchanged.
QpInstance perturb(const QpInstance& inst, const PerturbSpec& spec);

/// Forms (P'QP, AP, P'c, b). Throws std::invalid_argument on dimension
/// mismatch or rank-deficient P.
ProjectedQp project(const QpInstance& inst, const ProjectionMatrix& P);

/// Identity projection of dimension n.
ProjectionMatrix identity_projection(Eigen::Index n);

}  // namespace qproj
