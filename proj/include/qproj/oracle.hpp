#pragma once

#include <cstdint>
#include <vector>

#include "qproj/kkt.hpp"
#include "qproj/qp_core.hpp"

namespace qproj {

enum class SolveStatus { optimal, infeasible_numerics, budget_exceeded };

/// Feasibility / dual / stationarity tolerance for the KKT certificate.
/// Absolute, on the assumption that instances are normalized to O(1).
inline constexpr double kKktTol = 1e-8;

/// Relative positive-definiteness floor for Qt demanded by the oracle.
inline constexpr double kPdTol = 1e-10;

struct SolveResult {
  double value = 0.0;
  Vector y;
  std::vector<int> active;  // certifying active set, 0-based
  Vector lambda_full;       // length m, zero off the active set
  SolveStatus status = SolveStatus::infeasible_numerics;
};

/// Cap on the number of candidate active sets solve_enumerate may visit.
inline constexpr std::uint64_t kDefaultEnumBudget = 2'000'000;

/// Exact solve of the projected QP by enumerating candidate active sets
/// in order of increasing cardinality (lexicographic within a
/// cardinality) and returning the first candidate whose KKT certificate
/// holds. Requires Qt positive definite; throws std::invalid_argument
/// otherwise.
SolveResult solve_enumerate(const ProjectedQp& pqp,
                            std::uint64_t budget = kDefaultEnumBudget);

/// solve_enumerate plus the recovered point P*y in the original space.
struct RecoveredSolve {
  SolveResult result;
  Vector x_rec;
};
RecoveredSolve solve_for_solution(const ProjectedQp& pqp, const ProjectionMatrix& P,
                                  std::uint64_t budget = kDefaultEnumBudget);

/// Primal active-set iteration starting from y = 0 with an empty working
/// set. Returns the same certificate as solve_enumerate, or
/// budget_exceeded after max_iters working-set changes.
SolveResult solve_iterative(const ProjectedQp& pqp, int max_iters);

/// True iff some subset B of result.active with |B| <= k has linearly
/// independent rows of At and reproduces result.y through the B-KKT
/// system.
bool verify_localization(const ProjectedQp& pqp, const SolveResult& result);

/// Checks the four KKT conditions of `result` against `pqp` at kKktTol.
bool kkt_certificate_holds(const ProjectedQp& pqp, const SolveResult& result);

}  // namespace qproj
