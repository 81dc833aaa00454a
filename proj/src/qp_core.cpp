#include "qproj/qp_core.hpp"

#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace qproj {

bool ProjectionMatrix::full_column_rank() const {
  if (P.size() == 0 || P.cols() > P.rows()) return false;
  Eigen::JacobiSVD<Matrix> svd(P);
  const auto& sv = svd.singularValues();
  return sv(sv.size() - 1) >= kRankTol * sv(0);
}

std::vector<std::string> validate_instance(const QpInstance& inst) {
  std::vector<std::string> violations;
  const Eigen::Index n = inst.Q.rows();
  const Eigen::Index m = inst.A.rows();

  if (inst.Q.cols() != n) {
    violations.push_back("Q not square");
    return violations;  // remaining checks assume square Q
  }
  if (inst.c.size() != n) violations.push_back("c length != n");
  if (inst.A.cols() != n) violations.push_back("A has wrong column count");
  if (inst.b.size() != m) violations.push_back("b length != m");
  if (!violations.empty()) return violations;

  const double qscale = inst.Q.cwiseAbs().maxCoeff();
  const double asym = (inst.Q - inst.Q.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymTol * std::max(qscale, 1e-300)) {
    violations.push_back("Q not symmetric");
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(inst.Q, Eigen::EigenvaluesOnly);
    const Vector& ev = es.eigenvalues();
    const double lmax = std::max(ev(ev.size() - 1), 0.0);
    if (ev(0) < -kPsdTol * std::max(lmax, 1e-300)) {
      violations.push_back("Q not PSD");
    }
  }

  if ((inst.b.array() < -kOriginFeasTol).any()) {
    violations.push_back("origin infeasible (Assumption 1.2)");
  }
  if (inst.R < 0.0) violations.push_back("R negative (Assumption 1.3)");
  if (inst.H < 0.0) violations.push_back("H negative (Assumption 1.4)");
  return violations;
}

QpInstance perturb(const QpInstance& inst, const PerturbSpec& spec) {
  QpInstance out = inst;
  out.Q += spec.gamma * Matrix::Identity(inst.n(), inst.n());
  return out;
}

ProjectedQp project(const QpInstance& inst, const ProjectionMatrix& P) {
  if (P.n() != inst.n()) {
    throw std::invalid_argument("project: P row count does not match instance dimension");
  }
  if (!P.full_column_rank()) {
    throw std::invalid_argument("project: P is rank deficient");
  }
  ProjectedQp pqp;
  pqp.Qt = P.P.transpose() * inst.Q * P.P;
  // Symmetrize: P'QP is symmetric in exact arithmetic.
  pqp.Qt = 0.5 * (pqp.Qt + pqp.Qt.transpose()).eval();
  pqp.At = inst.A * P.P;
  pqp.ct = P.P.transpose() * inst.c;
  pqp.b = inst.b;
  return pqp;
}

ProjectionMatrix identity_projection(Eigen::Index n) {
  return ProjectionMatrix{Matrix::Identity(n, n)};
}

}  // namespace qproj
