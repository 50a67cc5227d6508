#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cfqp/core.hpp"
#include "cfqp/io.hpp"

namespace cfqp {

/// Elementwise KKT violations.
///   kkt1      = (∂L/∂x)²
///   kkt2_eq   = (∂L/∂λ)²
///   kkt2_ineq = max(0, ∂L/∂μ)²
///   kkt3      = max(0, −μ)          (not squared)
///   kkt4      = (μ ⊙ ∂L/∂μ)²
/// `scalar` is the mean over all entries of the five vectors stacked.
struct KktReport {
  Vector kkt1;
  Vector kkt2_eq;
  Vector kkt2_ineq;
  Vector kkt3;
  Vector kkt4;
  double scalar = 0.0;
};

[[nodiscard]] KktReport kkt_report(const MpQpProblem& problem, const PrimalDualSolution& sol,
                                   const ParameterPoint& theta);

/// Column of the report tables: a condition name and the entries it covers.
struct KktColumn {
  std::string name;
  double mean = 0.0;
  double max = 0.0;
};

/// Per-condition mean/max. KKT1 is split by the problem's variable groups
/// when it declares any ("KKT1-<group>"), otherwise reported as "KKT1".
[[nodiscard]] std::vector<KktColumn> kkt_columns(const MpQpProblem& problem, const KktReport& r);
[[nodiscard]] json to_json(const MpQpProblem& problem, const KktReport& r);

struct OracleOptions {
  /// Relative tolerance on dual negativity and primal violation.
  double tol = 1e-8;
  /// Relative threshold under which a binding μ or a slack residual counts as
  /// weakly active.
  double weak_tol = 1e-9;
  static constexpr std::size_t kMaxInequalities = 24;
};

struct OracleResult {
  PrimalDualSolution solution;
  ActiveSet active_set;
  /// Constraints that are tight with μ = 0 (or binding with μ ≈ 0).
  std::vector<std::size_t> weakly_active;
  [[nodiscard]] bool degenerate() const noexcept { return !weakly_active.empty(); }
};

/// Exhaustive active-set enumeration in order of cardinality, then
/// lexicographically; the first candidate that is dual and primal feasible
/// is returned (the smallest-cardinality, lexicographically smallest set
/// among all KKT points). Sets larger than n − m1 are skipped since their
/// J_ℬ is singular, and supersets of rank-deficient row selections are pruned.
/// Throws Infeasible, or InvalidProblem when m2 exceeds the guard.
[[nodiscard]] OracleResult brute_force_solve(const MpQpProblem& problem, const ParameterPoint& theta,
                                             const OracleOptions& opts = {});

[[nodiscard]] bool is_feasible(const MpQpProblem& problem, const ParameterPoint& theta,
                               const OracleOptions& opts = {});

}  // namespace cfqp
