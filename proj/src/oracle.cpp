#include "qproj/oracle.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace qproj {

namespace {

void require_pd(const ProjectedQp& pqp) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(pqp.Qt, Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();
  const double lmax = ev(ev.size() - 1);
  if (lmax <= 0.0 || ev(0) < kPdTol * lmax) {
    throw std::invalid_argument(
        "oracle: Qt is not positive definite; perturb the instance (gamma > 0) first");
  }
}

double objective(const ProjectedQp& pqp, const Vector& y) {
  return 0.5 * y.dot(pqp.Qt * y) + pqp.ct.dot(y);
}

Vector scatter_lambda(const std::vector<int>& active, const Vector& lambda,
                      Eigen::Index m) {
  Vector full = Vector::Zero(m);
  for (std::size_t i = 0; i < active.size(); ++i) {
    full(active[i]) = lambda(static_cast<Eigen::Index>(i));
  }
  return full;
}

// Candidate acceptance: primal feasibility off the active set and
// nonnegative multipliers on it. Stationarity and complementary
// slackness hold by construction of the KKT solve.
bool candidate_passes(const ProjectedQp& pqp, const std::vector<int>& active,
                      const Vector& y, const Vector& lambda) {
  for (int j = 0; j < pqp.m(); ++j) {
    if (std::find(active.begin(), active.end(), j) != active.end()) continue;
    if (pqp.At.row(j).dot(y) > pqp.b(j) + kKktTol) return false;
  }
  return (lambda.array() >= -kKktTol).all();
}

bool rows_independent(const Matrix& rows) {
  if (rows.rows() == 0) return true;
  Eigen::ColPivHouseholderQR<Matrix> qr(rows.transpose());
  qr.setThreshold(1e-10);
  return qr.rank() == rows.rows();
}

}  // namespace

bool kkt_certificate_holds(const ProjectedQp& pqp, const SolveResult& result) {
  if (result.status != SolveStatus::optimal) return false;
  const Vector& y = result.y;
  const Vector& lam = result.lambda_full;
  if (((pqp.At * y - pqp.b).array() > kKktTol).any()) return false;
  if ((lam.array() < -kKktTol).any()) return false;
  const Vector slack = pqp.At * y - pqp.b;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (std::abs(lam(i) * slack(i)) > kKktTol) return false;
  }
  const double stat = (pqp.Qt * y + pqp.ct + pqp.At.transpose() * lam).norm();
  return stat <= kKktTol * (1.0 + pqp.ct.norm());
}

SolveResult solve_enumerate(const ProjectedQp& pqp, std::uint64_t budget) {
  require_pd(pqp);
  const int m = static_cast<int>(pqp.m());
  const int k = static_cast<int>(pqp.k());
  const int max_card = std::min(m, k);

  SolveResult res;
  std::uint64_t visited = 0;
  bool any_solved = false;

  std::vector<int> combo;
  for (int card = 0; card <= max_card; ++card) {
    combo.resize(static_cast<std::size_t>(card));
    for (int i = 0; i < card; ++i) combo[static_cast<std::size_t>(i)] = i;
    while (true) {
      if (++visited > budget) {
        res.status = SolveStatus::budget_exceeded;
        return res;
      }
      KktSystem sys = assemble(pqp, combo);
      KktSolution sol = solve(sys);
      if (sol.det_ok) {
        any_solved = true;
        if (candidate_passes(pqp, combo, sol.y, sol.lambda)) {
          res.y = sol.y;
          res.active = combo;
          res.lambda_full = scatter_lambda(combo, sol.lambda, pqp.m());
          res.value = objective(pqp, sol.y);
          res.status = SolveStatus::optimal;
          return res;
        }
      }
      // next lexicographic combination of `card` elements of {0..m-1}
      if (card == 0) break;
      int i = card - 1;
      while (i >= 0 && combo[static_cast<std::size_t>(i)] == m - card + i) --i;
      if (i < 0) break;
      ++combo[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < card; ++j) {
        combo[static_cast<std::size_t>(j)] = combo[static_cast<std::size_t>(j - 1)] + 1;
      }
    }
  }
  res.status = SolveStatus::infeasible_numerics;
  (void)any_solved;
  return res;
}

RecoveredSolve solve_for_solution(const ProjectedQp& pqp, const ProjectionMatrix& P,
                                  std::uint64_t budget) {
  RecoveredSolve rec;
  rec.result = solve_enumerate(pqp, budget);
  if (rec.result.status == SolveStatus::optimal) {
    rec.x_rec = P.P * rec.result.y;
  }
  return rec;
}

SolveResult solve_iterative(const ProjectedQp& pqp, int max_iters) {
  require_pd(pqp);
  const Eigen::Index m = pqp.m();
  const Eigen::Index k = pqp.k();

  SolveResult res;
  if (max_iters <= 0) {
    res.status = SolveStatus::budget_exceeded;
    return res;
  }

  Vector y = Vector::Zero(k);  // feasible since b >= 0
  std::vector<int> working;
  constexpr double kStepTol = 1e-12;

  for (int iter = 0; iter < max_iters; ++iter) {
    KktSystem sys = assemble(pqp, working);
    KktSolution sol = solve(sys);
    if (!sol.det_ok) {
      // Dependent working set; drop the most recently added row.
      if (working.empty()) {
        res.status = SolveStatus::infeasible_numerics;
        return res;
      }
      working.pop_back();
      continue;
    }
    const Vector d = sol.y - y;
    if (d.norm() <= kStepTol * (1.0 + y.norm())) {
      // Stationary on the working set; check multipliers.
      int drop = -1;
      double most_negative = -kKktTol;
      for (Eigen::Index i = 0; i < sol.lambda.size(); ++i) {
        if (sol.lambda(i) < most_negative) {
          most_negative = sol.lambda(i);
          drop = static_cast<int>(i);
        }
      }
      if (drop < 0) {
        res.y = y;
        res.lambda_full = scatter_lambda(working, sol.lambda, m);
        std::sort(working.begin(), working.end());
        res.active = working;
        res.value = objective(pqp, y);
        res.status = SolveStatus::optimal;
        return res;
      }
      working.erase(working.begin() + drop);
      continue;
    }
    // Ratio test against constraints outside the working set.
    double alpha = 1.0;
    int blocking = -1;
    for (int j = 0; j < m; ++j) {
      if (std::find(working.begin(), working.end(), j) != working.end()) continue;
      const double ad = pqp.At.row(j).dot(d);
      if (ad <= kStepTol) continue;
      const double slack = pqp.b(j) - pqp.At.row(j).dot(y);
      const double ratio = slack / ad;
      if (ratio < alpha) {
        alpha = ratio;
        blocking = j;
      }
    }
    y += std::max(alpha, 0.0) * d;
    if (blocking >= 0) {
      working.push_back(blocking);
    } else {
      // Full step reached the working-set minimizer; optimal if the
      // multipliers are already dual feasible.
      if ((sol.lambda.array() >= -kKktTol).all()) {
        res.y = y;
        res.lambda_full = scatter_lambda(working, sol.lambda, m);
        std::sort(working.begin(), working.end());
        res.active = working;
        res.value = objective(pqp, y);
        res.status = SolveStatus::optimal;
        return res;
      }
    }
  }
  res.status = SolveStatus::budget_exceeded;
  return res;
}

bool verify_localization(const ProjectedQp& pqp, const SolveResult& result) {
  if (result.status != SolveStatus::optimal) return false;
  const int k = static_cast<int>(pqp.k());
  const int a = static_cast<int>(result.active.size());
  const int max_card = std::min(a, k);

  std::vector<int> combo;
  for (int card = 0; card <= max_card; ++card) {
    combo.resize(static_cast<std::size_t>(card));
    for (int i = 0; i < card; ++i) combo[static_cast<std::size_t>(i)] = i;
    while (true) {
      std::vector<int> subset;
      subset.reserve(combo.size());
      for (int idx : combo) subset.push_back(result.active[static_cast<std::size_t>(idx)]);

      Matrix rows(static_cast<Eigen::Index>(subset.size()), pqp.k());
      for (std::size_t i = 0; i < subset.size(); ++i) {
        rows.row(static_cast<Eigen::Index>(i)) = pqp.At.row(subset[i]);
      }
      if (rows_independent(rows)) {
        KktSolution sol = solve(assemble(pqp, subset));
        if (sol.det_ok && (sol.y - result.y).norm() <= 1e-8 * (1.0 + result.y.norm())) {
          return true;
        }
      }
      if (card == 0) break;
      int i = card - 1;
      while (i >= 0 && combo[static_cast<std::size_t>(i)] == a - card + i) --i;
      if (i < 0) break;
      ++combo[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < card; ++j) {
        combo[static_cast<std::size_t>(j)] = combo[static_cast<std::size_t>(j - 1)] + 1;
      }
    }
  }
  return false;
}

}  // namespace qproj
