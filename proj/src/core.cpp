#include "cfqp/core.hpp"

#include <string>

namespace cfqp {

Matrix assemble_base_jacobian(const MpQpProblem& problem) {
  return assemble_active_jacobian(problem, ActiveSet{});
}

Matrix assemble_active_jacobian(const MpQpProblem& problem, const ActiveSet& active) {
  const std::size_t n = problem.n(), m1 = problem.m1(), r = active.size();
  Matrix j(n + m1 + r, n + m1 + r);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) j(a, b) = 2.0 * problem.Q()(a, b);
  for (std::size_t e = 0; e < m1; ++e)
    for (std::size_t c = 0; c < n; ++c) {
      j(n + e, c) = -problem.A_e()(e, c);
      j(c, n + e) = -problem.A_e()(e, c);
    }
  for (std::size_t k = 0; k < r; ++k) {
    const std::size_t row = active.indices()[k];
    for (std::size_t c = 0; c < n; ++c) {
      j(n + m1 + k, c) = -problem.A_C()(row, c);
      j(c, n + m1 + k) = -problem.A_C()(row, c);
    }
  }
  return j;
}

template <std::floating_point T>
JacobianFactorsT<T>::JacobianFactorsT(const Matrix& j) : lu_(j.template cast<T>()) {
  if (lu_.singular())
    throw SingularJacobian("Jacobian of size " + std::to_string(j.rows()) +
                           " is singular to working precision");
}

template class JacobianFactorsT<float>;
template class JacobianFactorsT<double>;

template <std::floating_point T>
std::pair<Vector, Vector> solve_with_mu(const MpQpProblem& problem, const JacobianFactorsT<T>& factors,
                                        std::span<const double> mu, const ParameterPoint& theta) {
  const std::size_t n = problem.n(), m1 = problem.m1(), m2 = problem.m2();
  if (!theta.matches(problem) || mu.size() != m2 || factors.size() != n + m1)
    throw InvalidProblem("solve_with_mu: dimension mismatch");
  std::vector<T> rhs(n + m1);
  for (std::size_t i = 0; i < n; ++i) rhs[i] = static_cast<T>(-problem.C()[i] - theta.theta_c[i]);
  for (std::size_t k = 0; k < m2; ++k) {
    if (mu[k] == 0.0) continue;
    const auto row = problem.A_C().row(k);
    for (std::size_t i = 0; i < n; ++i) rhs[i] += static_cast<T>(row[i]) * static_cast<T>(mu[k]);
  }
  for (std::size_t e = 0; e < m1; ++e)
    rhs[n + e] = static_cast<T>(-problem.b_e()[e] - theta.theta_e[e]);
  const auto z = factors.solve(rhs);
  return {Vector(z.begin(), z.begin() + n), Vector(z.begin() + n, z.end())};
}

template std::pair<Vector, Vector> solve_with_mu<float>(const MpQpProblem&, const JacobianFactorsT<float>&,
                                                        std::span<const double>, const ParameterPoint&);
template std::pair<Vector, Vector> solve_with_mu<double>(const MpQpProblem&, const JacobianFactorsT<double>&,
                                                         std::span<const double>, const ParameterPoint&);

namespace {

LuFactorization<double> active_factors(const MpQpProblem& problem, const ActiveSet& active) {
  if (!active.empty() && active.indices().back() >= problem.m2())
    throw InvalidProblem("active set " + active.to_string() + " out of range");
  LuFactorization<double> lu(assemble_active_jacobian(problem, active));
  if (lu.singular())
    throw SingularActiveJacobian("J_B is singular for active set " + active.to_string());
  return lu;
}

}  // namespace

PrimalDualSolution solve_active_set(const MpQpProblem& problem, const ActiveSet& active,
                                    const ParameterPoint& theta) {
  if (!theta.matches(problem)) throw InvalidProblem("solve_active_set: dimension mismatch");
  const std::size_t n = problem.n(), m1 = problem.m1(), r = active.size();
  const auto lu = active_factors(problem, active);
  Vector rhs(n + m1 + r);
  for (std::size_t i = 0; i < n; ++i) rhs[i] = -problem.C()[i] - theta.theta_c[i];
  for (std::size_t e = 0; e < m1; ++e) rhs[n + e] = -problem.b_e()[e] - theta.theta_e[e];
  for (std::size_t k = 0; k < r; ++k) {
    const std::size_t i = active.indices()[k];
    rhs[n + m1 + k] = -problem.b_C()[i] - theta.theta_C[i];
  }
  Vector z = lu.solve(rhs);
  // One step of iterative refinement.
  const Matrix j = assemble_active_jacobian(problem, active);
  Vector res = matvec<double>(j, z);
  for (std::size_t i = 0; i < res.size(); ++i) res[i] = rhs[i] - res[i];
  const Vector dz = lu.solve(res);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += dz[i];

  PrimalDualSolution sol;
  sol.x.assign(z.begin(), z.begin() + n);
  sol.lambda.assign(z.begin() + n, z.begin() + n + m1);
  sol.mu.assign(problem.m2(), 0.0);
  for (std::size_t k = 0; k < r; ++k) sol.mu[active.indices()[k]] = z[n + m1 + k];
  sol.objective = objective_value(problem, sol.x, theta);
  return sol;
}

RegionSlopes region_slopes(const MpQpProblem& problem, const ActiveSet& active) {
  const std::size_t n = problem.n(), m1 = problem.m1(), m2 = problem.m2(), d = problem.d();
  const std::size_t r = active.size();
  const Matrix inv = active_factors(problem, active).inverse();

  // Column c of J_B⁻¹ multiplies right-hand-side entry c; map it into the d-layout.
  std::vector<std::size_t> col_map(n + m1 + r);
  for (std::size_t c = 0; c < n + m1; ++c) col_map[c] = c;
  for (std::size_t k = 0; k < r; ++k) col_map[n + m1 + k] = n + m1 + active.indices()[k];

  RegionSlopes s{Matrix(n, d), Matrix(m1, d), Matrix(m2, d), active};
  for (std::size_t c = 0; c < n + m1 + r; ++c) {
    const std::size_t dc = col_map[c];
    for (std::size_t i = 0; i < n; ++i) s.grad_x(i, dc) = inv(i, c);
    for (std::size_t e = 0; e < m1; ++e) s.grad_lambda(e, dc) = inv(n + e, c);
    for (std::size_t k = 0; k < r; ++k) s.grad_mu(active.indices()[k], dc) = inv(n + m1 + k, c);
  }
  return s;
}

PrimalDualSolution evaluate_region(const MpQpProblem& problem, const RegionSlopes& slopes,
                                   const ParameterPoint& theta) {
  const Vector u = model_input(problem, theta);
  PrimalDualSolution sol;
  sol.x = matvec<double>(slopes.grad_x, u);
  sol.lambda = matvec<double>(slopes.grad_lambda, u);
  sol.mu = matvec<double>(slopes.grad_mu, u);
  sol.objective = objective_value(problem, sol.x, theta);
  return sol;
}

LagrangianGradients lagrangian_gradients(const MpQpProblem& problem, const PrimalDualSolution& sol,
                                         const ParameterPoint& theta) {
  const std::size_t n = problem.n(), m1 = problem.m1(), m2 = problem.m2();
  if (!theta.matches(problem) || sol.x.size() != n || sol.lambda.size() != m1 || sol.mu.size() != m2)
    throw InvalidProblem("lagrangian_gradients: dimension mismatch");
  LagrangianGradients g;
  g.dL_dx = matvec<double>(problem.Q(), sol.x);
  const Vector ae_l = matvec_transposed<double>(problem.A_e(), sol.lambda);
  const Vector ac_m = matvec_transposed<double>(problem.A_C(), sol.mu);
  for (std::size_t i = 0; i < n; ++i)
    g.dL_dx[i] = 2.0 * g.dL_dx[i] + problem.C()[i] + theta.theta_c[i] - ae_l[i] - ac_m[i];
  g.dL_dlambda = matvec<double>(problem.A_e(), sol.x);
  for (std::size_t e = 0; e < m1; ++e)
    g.dL_dlambda[e] = problem.b_e()[e] + theta.theta_e[e] - g.dL_dlambda[e];
  g.dL_dmu = matvec<double>(problem.A_C(), sol.x);
  for (std::size_t k = 0; k < m2; ++k) g.dL_dmu[k] = problem.b_C()[k] + theta.theta_C[k] - g.dL_dmu[k];
  return g;
}

double objective_value(const MpQpProblem& problem, std::span<const double> x, const ParameterPoint& theta) {
  const std::size_t n = problem.n();
  if (x.size() != n || theta.theta_c.size() != n) throw InvalidProblem("objective_value: dimension mismatch");
  double z = problem.C0();
  for (std::size_t i = 0; i < n; ++i) {
    double qx = 0.0;
    const auto row = problem.Q().row(i);
    for (std::size_t j = 0; j < n; ++j) qx += row[j] * x[j];
    z += x[i] * qx + (problem.C()[i] + theta.theta_c[i]) * x[i];
  }
  return z;
}

}  // namespace cfqp
