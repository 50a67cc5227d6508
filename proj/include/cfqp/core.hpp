#pragma once

#include <concepts>
#include <memory>
#include <utility>

#include "cfqp/errors.hpp"
#include "cfqp/linalg.hpp"
#include "cfqp/problem.hpp"

namespace cfqp {

/// J = [[2Q, −A_eᵀ], [−A_e, 0]], of size n + m1.
[[nodiscard]] Matrix assemble_base_jacobian(const MpQpProblem& problem);

/// J_ℬ = [[2Q, −A_eᵀ, −A_ℬᵀ], [−A_e, 0, 0], [−A_ℬ, 0, 0]].
[[nodiscard]] Matrix assemble_active_jacobian(const MpQpProblem& problem, const ActiveSet& active);

/// LU factors of a KKT matrix at precision T.
template <std::floating_point T>
class JacobianFactorsT {
 public:
  /// Throws SingularJacobian when a pivot falls below the relative threshold.
  explicit JacobianFactorsT(const Matrix& j);

  [[nodiscard]] std::size_t size() const noexcept { return lu_.size(); }
  [[nodiscard]] std::vector<T> solve(std::span<const T> rhs) const { return lu_.solve(rhs); }
  [[nodiscard]] MatrixT<T> inverse() const { return lu_.inverse(); }

 private:
  LuFactorization<T> lu_;
};

using JacobianFactors = JacobianFactorsT<double>;

template <std::floating_point T = double>
[[nodiscard]] JacobianFactorsT<T> factorize(const Matrix& j) {
  return JacobianFactorsT<T>(j);
}

/// (x, λ) from known inequality duals: J⁻¹ [−C − θ_c + A_Cᵀμ; −b_e − θ_e].
template <std::floating_point T = double>
[[nodiscard]] std::pair<Vector, Vector> solve_with_mu(const MpQpProblem& problem,
                                                      const JacobianFactorsT<T>& factors,
                                                      std::span<const double> mu,
                                                      const ParameterPoint& theta);

/// Solves the KKT equality system with the rows of ℬ binding. μ_i = 0 off ℬ.
/// Throws SingularActiveJacobian.
[[nodiscard]] PrimalDualSolution solve_active_set(const MpQpProblem& problem,
                                                  const ActiveSet& active,
                                                  const ParameterPoint& theta);

/// Inverts J_ℬ and scatters its rows into zero-padded n×d, m1×d, m2×d blocks.
/// Throws SingularActiveJacobian.
[[nodiscard]] RegionSlopes region_slopes(const MpQpProblem& problem, const ActiveSet& active);

/// Evaluates the affine laws of a region at θ (no feasibility checks).
[[nodiscard]] PrimalDualSolution evaluate_region(const MpQpProblem& problem,
                                                 const RegionSlopes& slopes,
                                                 const ParameterPoint& theta);

struct LagrangianGradients {
  Vector dL_dx;
  Vector dL_dlambda;
  Vector dL_dmu;
};

/// dL/dx = 2Qx + C + θ_c − A_eᵀλ − A_Cᵀμ
/// dL/dλ = b_e + θ_e − A_e x
/// dL/dμ = b_C + θ_C − A_C x
[[nodiscard]] LagrangianGradients lagrangian_gradients(const MpQpProblem& problem,
                                                       const PrimalDualSolution& sol,
                                                       const ParameterPoint& theta);

/// xᵀQx + (C + θ_c)ᵀx + C0
[[nodiscard]] double objective_value(const MpQpProblem& problem, std::span<const double> x,
                                     const ParameterPoint& theta);

}  // namespace cfqp
