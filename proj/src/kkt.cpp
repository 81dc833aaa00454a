#include "qproj/kkt.hpp"

#include <stdexcept>

#include <Eigen/LU>

namespace qproj {

namespace {
constexpr double kPivotTol = 1e-10;
constexpr double kResidualTol = 1e-10;
}  // namespace

KktSystem assemble(const ProjectedQp& pqp, const std::vector<int>& active) {
  const Eigen::Index k = pqp.k();
  const Eigen::Index m = pqp.m();
  const Eigen::Index a = static_cast<Eigen::Index>(active.size());

  KktSystem sys;
  sys.active = active;
  sys.K = Matrix::Zero(k + a, k + a);
  sys.rhs = Vector::Zero(k + a);
  sys.K.topLeftCorner(k, k) = pqp.Qt;
  sys.rhs.head(k) = -pqp.ct;

  for (Eigen::Index i = 0; i < a; ++i) {
    const int row = active[static_cast<std::size_t>(i)];
    if (row < 0 || row >= m) throw std::out_of_range("assemble: active index out of range");
    sys.K.row(k + i).head(k) = pqp.At.row(row);
    sys.K.col(k + i).head(k) = pqp.At.row(row).transpose();
    sys.rhs(k + i) = pqp.b(row);
  }
  return sys;
}

KktSolution solve(const KktSystem& sys) {
  KktSolution sol;
  const Eigen::Index k = sys.k();
  const Eigen::Index a = static_cast<Eigen::Index>(sys.active.size());

  Eigen::FullPivLU<Matrix> lu(sys.K);
  const Matrix& u = lu.matrixLU();
  double pmax = 0.0, pmin = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const double p = std::abs(u(i, i));
    pmax = std::max(pmax, p);
    pmin = std::min(pmin, p);
  }
  if (pmax == 0.0 || pmin <= kPivotTol * pmax) {
    sol.det_ok = false;
    return sol;
  }

  Vector z = lu.solve(sys.rhs);
  const double rhs_norm = sys.rhs.norm();
  Vector res = sys.rhs - sys.K * z;
  if (res.norm() > kResidualTol * (1.0 + rhs_norm)) {
    z += lu.solve(res);
  }

  sol.y = z.head(k);
  sol.lambda = z.tail(a);
  sol.det_ok = true;
  return sol;
}

}  // namespace qproj
