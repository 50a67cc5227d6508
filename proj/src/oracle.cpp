#include "cfqp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>

namespace cfqp {

KktReport kkt_report(const MpQpProblem& problem, const PrimalDualSolution& sol, const ParameterPoint& theta) {
  const auto g = lagrangian_gradients(problem, sol, theta);
  KktReport r;
  r.kkt1.resize(g.dL_dx.size());
  r.kkt2_eq.resize(g.dL_dlambda.size());
  r.kkt2_ineq.resize(g.dL_dmu.size());
  r.kkt3.resize(g.dL_dmu.size());
  r.kkt4.resize(g.dL_dmu.size());
  for (std::size_t i = 0; i < g.dL_dx.size(); ++i) r.kkt1[i] = g.dL_dx[i] * g.dL_dx[i];
  for (std::size_t e = 0; e < g.dL_dlambda.size(); ++e) r.kkt2_eq[e] = g.dL_dlambda[e] * g.dL_dlambda[e];
  for (std::size_t k = 0; k < g.dL_dmu.size(); ++k) {
    const double p = std::max(0.0, g.dL_dmu[k]);
    r.kkt2_ineq[k] = p * p;
    r.kkt3[k] = std::max(0.0, -sol.mu[k]);
    const double c = sol.mu[k] * g.dL_dmu[k];
    r.kkt4[k] = c * c;
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (const Vector* v : {&r.kkt1, &r.kkt2_eq, &r.kkt2_ineq, &r.kkt3, &r.kkt4}) {
    sum += std::accumulate(v->begin(), v->end(), 0.0);
    count += v->size();
  }
  r.scalar = count ? sum / static_cast<double>(count) : 0.0;
  return r;
}

namespace {

KktColumn column(std::string name, const Vector& v) {
  KktColumn c{std::move(name)};
  if (v.empty()) return c;
  c.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  c.max = *std::max_element(v.begin(), v.end());
  return c;
}

}  // namespace

std::vector<KktColumn> kkt_columns(const MpQpProblem& problem, const KktReport& r) {
  std::vector<KktColumn> cols;
  if (problem.groups().empty()) {
    cols.push_back(column("KKT1", r.kkt1));
  } else {
    for (const auto& g : problem.groups()) {
      Vector sub;
      for (std::size_t i : g.indices) sub.push_back(r.kkt1[i]);
      cols.push_back(column("KKT1-" + g.name, sub));
    }
  }
  cols.push_back(column("KKT2(=)", r.kkt2_eq));
  cols.push_back(column("KKT2(≤)", r.kkt2_ineq));
  cols.push_back(column("KKT3", r.kkt3));
  cols.push_back(column("KKT4", r.kkt4));
  return cols;
}

json to_json(const MpQpProblem& problem, const KktReport& r) {
  json j;
  j["scalar"] = r.scalar;
  json cols = json::object();
  for (const auto& c : kkt_columns(problem, r)) cols[c.name] = {{"mean", c.mean}, {"max", c.max}};
  j["columns"] = cols;
  j["kkt1"] = r.kkt1;
  j["kkt2_eq"] = r.kkt2_eq;
  j["kkt2_ineq"] = r.kkt2_ineq;
  j["kkt3"] = r.kkt3;
  j["kkt4"] = r.kkt4;
  return j;
}

namespace {

bool rows_dependent(const MpQpProblem& problem, const ActiveSet& active) {
  const std::size_t n = problem.n(), m1 = problem.m1(), r = active.size();
  Matrix a(m1 + r, n);
  for (std::size_t e = 0; e < m1; ++e)
    for (std::size_t c = 0; c < n; ++c) a(e, c) = problem.A_e()(e, c);
  for (std::size_t k = 0; k < r; ++k)
    for (std::size_t c = 0; c < n; ++c) a(m1 + k, c) = problem.A_C()(active.indices()[k], c);
  // Rank of the stacked rows through their Gram matrix.
  Matrix gram(m1 + r, m1 + r);
  for (std::size_t i = 0; i < m1 + r; ++i)
    for (std::size_t j = 0; j < m1 + r; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < n; ++c) s += a(i, c) * a(j, c);
      gram(i, j) = s;
    }
  return LuFactorization<double>(gram).singular();
}

// Visits subsets of {0..m-1} of size r in lexicographic order.
template <typename F>
bool for_each_combination(std::size_t m, std::size_t r, F&& visit) {
  std::vector<std::size_t> idx(r);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  while (true) {
    if (visit(idx)) return true;
    std::size_t i = r;
    while (i > 0 && idx[i - 1] == m - r + i - 1) --i;
    if (i == 0) return false;
    ++idx[i - 1];
    for (std::size_t j = i; j < r; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

OracleResult brute_force_solve(const MpQpProblem& problem, const ParameterPoint& theta,
                               const OracleOptions& opts) {
  const std::size_t n = problem.n(), m1 = problem.m1(), m2 = problem.m2();
  if (m2 > OracleOptions::kMaxInequalities)
    throw InvalidProblem("oracle enumeration needs m2 <= 24, problem has " + std::to_string(m2));
  if (!theta.matches(problem)) throw InvalidProblem("brute_force_solve: dimension mismatch");

  const std::size_t cap = std::min(m2, n > m1 ? n - m1 : std::size_t{0});
  std::vector<std::uint32_t> dependent;
  std::optional<OracleResult> found;

  for (std::size_t r = 0; r <= cap && !found; ++r) {
    for_each_combination(m2, r, [&](const std::vector<std::size_t>& idx) {
      std::uint32_t mask = 0;
      for (std::size_t i : idx) mask |= std::uint32_t{1} << i;
      for (std::uint32_t d : dependent)
        if ((mask & d) == d) return false;
      const ActiveSet active(idx, m2);
      PrimalDualSolution sol;
      try {
        sol = solve_active_set(problem, active, theta);
      } catch (const SingularActiveJacobian&) {
        if (rows_dependent(problem, active)) dependent.push_back(mask);
        return false;
      }
      const double dual_scale = std::max(1.0, norm_inf<double>(sol.mu));
      for (std::size_t i : idx)
        if (sol.mu[i] < -opts.tol * dual_scale) return false;
      const auto g = lagrangian_gradients(problem, sol, theta);
      const double primal_scale = std::max({1.0, problem.A_C().max_abs() * norm_inf<double>(sol.x),
                                            norm_inf<double>(problem.b_C()),
                                            norm_inf<double>(theta.theta_C)});
      for (std::size_t k = 0; k < m2; ++k)
        if (!active.contains(k) && g.dL_dmu[k] > opts.tol * primal_scale) return false;

      OracleResult res{std::move(sol), active, {}};
      for (std::size_t k = 0; k < m2; ++k) {
        const bool weak = active.contains(k) ? res.solution.mu[k] <= opts.weak_tol * dual_scale
                                             : std::abs(g.dL_dmu[k]) <= opts.weak_tol * primal_scale;
        if (weak) res.weakly_active.push_back(k);
      }
      found = std::move(res);
      return true;
    });
  }
  if (!found) throw Infeasible("no active set satisfies the KKT conditions at this parameter");
  return *std::move(found);
}

bool is_feasible(const MpQpProblem& problem, const ParameterPoint& theta, const OracleOptions& opts) {
  try {
    (void)brute_force_solve(problem, theta, opts);
    return true;
  } catch (const Infeasible&) {
    return false;
  }
}

}  // namespace cfqp
