#pragma once

#include <vector>

#include "qproj/qp_core.hpp"

namespace qproj {

/// Saddle-point system [[Qt, At_A'], [At_A, 0]] [y; lambda] = [-ct; b_A]
/// for a candidate active set A (0-based, strictly increasing indices).
struct KktSystem {
  Matrix K;
  Vector rhs;
  std::vector<int> active;

  Eigen::Index k() const { return K.rows() - static_cast<Eigen::Index>(active.size()); }
};

struct KktSolution {
  Vector y;
  Vector lambda;
  bool det_ok = false;
};

/// Builds the KKT block system for the given active rows of At.
/// Throws std::out_of_range if an index falls outside [0, m).
KktSystem assemble(const ProjectedQp& pqp, const std::vector<int>& active);

/// Factors K with full-pivot LU. Near-singularity (smallest pivot below
/// 1e-10 times the largest) yields det_ok = false; otherwise the solve is
/// polished with one step of iterative refinement when needed.
KktSolution solve(const KktSystem& sys);

}  // namespace qproj
