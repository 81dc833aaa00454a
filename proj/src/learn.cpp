#include "qproj/learn.hpp"

#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <json.hpp>

namespace qproj {

namespace {

SolveResult solve_or_throw(const QpInstance& inst, const ProjectionMatrix& P, double gamma,
                           const char* what) {
  const ProjectedQp pqp = project(gamma > 0.0 ? perturb(inst, {gamma}) : inst, P);
  SolveResult res = solve_enumerate(pqp);
  if (res.status != SolveStatus::optimal) {
    throw std::runtime_error(std::string(what) + ": oracle failed (" +
                             (res.status == SolveStatus::budget_exceeded ? "budget exceeded"
                                                                         : "no certified candidate") +
                             ")");
  }
  return res;
}

void require_q_pd(const QpInstance& inst, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(inst.Q, Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();
  if (ev(0) <= kPdTol * std::max(ev(ev.size() - 1), 0.0)) {
    throw std::invalid_argument(std::string(what) + ": Q must be positive definite");
  }
}

}  // namespace

double objective_loss(const QpInstance& inst, const ProjectionMatrix& P, double gamma) {
  return solve_or_throw(inst, P, gamma, "objective_loss").value;
}

Matrix envelope_grad(const QpInstance& inst, const ProjectionMatrix& P, double gamma) {
  const SolveResult res = solve_or_throw(inst, P, gamma, "envelope_grad");
  const Matrix q_gamma = inst.Q + gamma * Matrix::Identity(inst.n(), inst.n());
  const Vector stationarity_x =
      q_gamma * (P.P * res.y) + inst.c + inst.A.transpose() * res.lambda_full;
  return stationarity_x * res.y.transpose();
}

double matching_loss(const QpInstance& inst, const ProjectionMatrix& P) {
  require_q_pd(inst, "matching_loss");
  const SolveResult orig = solve_or_throw(inst, identity_projection(inst.n()), 0.0, "matching_loss");
  const SolveResult proj = solve_or_throw(inst, P, 0.0, "matching_loss");
  const Vector x_star = orig.y;  // P = I, so y is the original optimum
  return (x_star - P.P * proj.y).squaredNorm();
}

namespace {

Matrix matching_grad_fd(const QpInstance& inst, const ProjectionMatrix& P) {
  constexpr double h = 1e-5;
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

bool active_set_strict(const ProjectedQp& pqp, const SolveResult& res) {
  constexpr double kStrict = 1e-6;
  const Vector slack = pqp.b - pqp.At * res.y;
  for (int j = 0; j < pqp.m(); ++j) {
    const bool in_active =
        std::find(res.active.begin(), res.active.end(), j) != res.active.end();
    if (in_active) {
      if (res.lambda_full(j) <= kStrict) return false;
    } else {
      if (slack(j) <= kStrict) return false;
    }
  }
  return true;
}

}  // namespace

Matrix matching_grad(const QpInstance& inst, const ProjectionMatrix& P, bool* used_fd) {
  require_q_pd(inst, "matching_grad");
  if (used_fd != nullptr) *used_fd = false;

  const SolveResult orig =
      solve_or_throw(inst, identity_projection(inst.n()), 0.0, "matching_grad");
  const ProjectedQp pqp = project(inst, P);
  const SolveResult proj = solve_enumerate(pqp);
  if (proj.status != SolveStatus::optimal) {
    throw std::runtime_error("matching_grad: oracle failed on the projected problem");
  }
  if (!active_set_strict(pqp, proj)) {
    if (used_fd != nullptr) *used_fd = true;
    return matching_grad_fd(inst, P);
  }

  const Vector& y = proj.y;
  const Vector x_star = orig.y;
  const Vector r = x_star - P.P * y;

  // Differentiate the fixed-active-set KKT system K [y; lambda] = [-P'c; b_B]
  // by the adjoint method: solve K w = [dL/dy; 0], then contract with the
  // P-derivatives of the system.
  const std::vector<int>& B = proj.active;
  const auto a = static_cast<Eigen::Index>(B.size());
  KktSystem sys = assemble(pqp, B);
  Vector rhs = Vector::Zero(sys.K.rows());
  rhs.head(pqp.k()) = -2.0 * P.P.transpose() * r;
  Eigen::FullPivLU<Matrix> lu(sys.K);
  const Vector w = lu.solve(rhs);
  const Vector w_y = w.head(pqp.k());
  const Vector w_l = w.tail(a);

  Matrix a_b(a, inst.n());
  Vector lambda_b(a);
  for (Eigen::Index i = 0; i < a; ++i) {
    a_b.row(i) = inst.A.row(B[static_cast<std::size_t>(i)]);
    lambda_b(i) = proj.lambda_full(B[static_cast<std::size_t>(i)]);
  }

  const Vector v = inst.Q * (P.P * y) + inst.c + a_b.transpose() * lambda_b;
  Matrix grad = -2.0 * r * y.transpose();  // explicit dependence through P y
  grad -= v * w_y.transpose();
  grad -= (inst.Q * (P.P * w_y) + a_b.transpose() * w_l) * y.transpose();
  return grad;
}

ProjectionMatrix random_projection(Eigen::Index n, Eigen::Index k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix P(n, k);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j) P(i, j) = scale * gauss(rng);
  return orthonormalize(ProjectionMatrix{P});
}

ProjectionMatrix orthonormalize(const ProjectionMatrix& P) {
  Eigen::HouseholderQR<Matrix> qr(P.P);
  Matrix q = qr.householderQ() * Matrix::Identity(P.n(), P.k());
  return ProjectionMatrix{q};
}

TrainReport train(const std::vector<QpInstance>& sample, const TrainConfig& cfg) {
  if (sample.empty()) throw std::invalid_argument("train: empty sample");
  if (cfg.step_size <= 0.0 || cfg.gamma < 0.0 || cfg.rank_floor <= 0.0 || cfg.rank_floor >= 1.0) {
    throw std::invalid_argument("train: invalid config");
  }
  const Eigen::Index n = sample.front().n();
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (sample[i].n() != n) throw std::invalid_argument("train: instances disagree on n");
    const auto violations = validate_instance(sample[i]);
    if (!violations.empty()) {
      throw std::invalid_argument("train: instance " + std::to_string(i) + " invalid: " +
                                  violations.front());
    }
  }

  ProjectionMatrix P = random_projection(n, cfg.k, cfg.seed);
  TrainReport report;

  auto loss_of = [&](const QpInstance& inst, const ProjectionMatrix& proj) {
    return cfg.loss_kind == LossKind::objective ? objective_loss(inst, proj, cfg.gamma)
                                                : matching_loss(inst, proj);
  };
  auto grad_of = [&](const QpInstance& inst, const ProjectionMatrix& proj) {
    return cfg.loss_kind == LossKind::objective ? envelope_grad(inst, proj, cfg.gamma)
                                                : matching_grad(inst, proj);
  };
  auto mean_loss = [&](const ProjectionMatrix& proj) {
    double total = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
      try {
        total += loss_of(sample[i], proj);
      } catch (const std::exception& e) {
        throw std::runtime_error("train: instance " + std::to_string(i) + ": " + e.what());
      }
    }
    return total / static_cast<double>(sample.size());
  };

  report.loss_trace.emplace_back(0, mean_loss(P));

  for (int it = 1; it <= cfg.iters; ++it) {
    Matrix grad = Matrix::Zero(n, cfg.k);
    for (std::size_t i = 0; i < sample.size(); ++i) {
      try {
        grad += grad_of(sample[i], P);
      } catch (const std::exception& e) {
        throw std::runtime_error("train: instance " + std::to_string(i) + ": " + e.what());
      }
    }
    grad /= static_cast<double>(sample.size());
    P.P -= cfg.step_size * grad;

    Eigen::JacobiSVD<Matrix> svd(P.P);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) < cfg.rank_floor * sv(0)) {
      P = orthonormalize(P);
      ++report.rank_repairs;
    }
    report.loss_trace.emplace_back(it, mean_loss(P));
  }

  report.final_P = P;
  report.per_instance_final.reserve(sample.size());
  for (const auto& inst : sample) report.per_instance_final.push_back(loss_of(inst, P));
  return report;
}

std::string TrainReport::to_json() const {
  nlohmann::json j;
  j["trace"] = nlohmann::json::array();
  for (const auto& [it, loss] : loss_trace) j["trace"].push_back({it, loss});
  std::vector<double> p_flat;
  for (Eigen::Index i = 0; i < final_P.n(); ++i)
    for (Eigen::Index c = 0; c < final_P.k(); ++c) p_flat.push_back(final_P.P(i, c));
  j["P"] = p_flat;
  j["P_rows"] = final_P.n();
  j["P_cols"] = final_P.k();
  j["per_instance"] = per_instance_final;
  j["rank_repairs"] = rank_repairs;
  return j.dump(2);
}

}  // namespace qproj
