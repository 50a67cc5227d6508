#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfqp/linalg.hpp"

namespace cfqp {

enum class Precision { f32 = 32, f64 = 64 };

[[nodiscard]] Precision precision_from_bits(int bits);
[[nodiscard]] int bits(Precision p) noexcept;

/// Named subset of primal variables, used to split stationarity reporting
/// (for power-flow problems: generator outputs vs. bus angles).
struct VariableGroup {
  std::string name;
  std::vector<std::size_t> indices;
  bool operator==(const VariableGroup&) const = default;
};

/// Coefficients of a multiparametric QP
///
///   min  xᵀQx + (C + θ_c)ᵀx + C0
///   s.t. A_e x  = b_e + θ_e        [λ]
///        A_C x ≥ b_C + θ_C         [μ ≥ 0]
///
/// The inequality orientation is the one under which the Lagrangian
/// L = f + λᵀ(b_e + θ_e − A_e x) + μᵀ(b_C + θ_C − A_C x) with μ ≥ 0 is a
/// valid optimality certificate; a row `a x ≤ b` is stored as `−a x ≥ −b`.
/// Note the quadratic term carries no ½ factor.
class MpQpProblem {
 public:
  struct Data {
    Matrix Q;
    Vector C;
    double C0 = 0.0;
    Matrix A_e;
    Vector b_e;
    Matrix A_C;
    Vector b_C;
    std::vector<VariableGroup> groups;
  };

  /// Validates shapes, symmetry and semidefiniteness of Q, and the row rank
  /// of A_e. Throws InvalidProblem.
  explicit MpQpProblem(Data data);

  [[nodiscard]] std::size_t n() const noexcept { return d_.C.size(); }
  [[nodiscard]] std::size_t m1() const noexcept { return d_.b_e.size(); }
  [[nodiscard]] std::size_t m2() const noexcept { return d_.b_C.size(); }
  /// Stacked coefficient dimension n + m1 + m2.
  [[nodiscard]] std::size_t d() const noexcept { return n() + m1() + m2(); }

  [[nodiscard]] const Matrix& Q() const noexcept { return d_.Q; }
  [[nodiscard]] const Vector& C() const noexcept { return d_.C; }
  [[nodiscard]] double C0() const noexcept { return d_.C0; }
  [[nodiscard]] const Matrix& A_e() const noexcept { return d_.A_e; }
  [[nodiscard]] const Vector& b_e() const noexcept { return d_.b_e; }
  [[nodiscard]] const Matrix& A_C() const noexcept { return d_.A_C; }
  [[nodiscard]] const Vector& b_C() const noexcept { return d_.b_C; }
  [[nodiscard]] const std::vector<VariableGroup>& groups() const noexcept { return d_.groups; }

  /// B = [C, b_e, b_C] in the fixed column layout [cost | equality | inequality].
  [[nodiscard]] Vector stacked_coefficients() const;

  /// Magnitude used to scale absolute tolerances (max |entry| over all data, at least 1).
  [[nodiscard]] double scale() const noexcept { return scale_; }

  /// Hex SHA-256 of the canonical JSON encoding.
  [[nodiscard]] const std::string& digest() const noexcept { return digest_; }

  [[nodiscard]] const Data& data() const noexcept { return d_; }

 private:
  Data d_;
  double scale_ = 1.0;
  std::string digest_;
};

/// θ = (θ_c, θ_e, θ_C).
struct ParameterPoint {
  Vector theta_c;
  Vector theta_e;
  Vector theta_C;

  [[nodiscard]] static ParameterPoint zeros(const MpQpProblem& p);
  /// Splits a stacked vector of length d.
  [[nodiscard]] static ParameterPoint from_stacked(const MpQpProblem& p, std::span<const double> v);

  [[nodiscard]] Vector stacked() const;
  [[nodiscard]] std::size_t size() const noexcept {
    return theta_c.size() + theta_e.size() + theta_C.size();
  }
  [[nodiscard]] bool matches(const MpQpProblem& p) const noexcept;

  bool operator==(const ParameterPoint&) const = default;
};

/// Model input −B − θ.
[[nodiscard]] Vector model_input(const MpQpProblem& p, const ParameterPoint& theta);

/// Sorted, duplicate-free set of inequality indices. Stored zero-based;
/// printed one-based ("{3,4}") to match the usual constraint numbering.
class ActiveSet {
 public:
  ActiveSet() = default;
  /// Throws InvalidProblem on out-of-range indices.
  ActiveSet(std::vector<std::size_t> zero_based, std::size_t m2);
  [[nodiscard]] static ActiveSet from_one_based(std::initializer_list<std::size_t> idx,
                                                std::size_t m2);
  [[nodiscard]] static ActiveSet from_mask(std::uint64_t mask, std::size_t m2);

  [[nodiscard]] const std::vector<std::size_t>& indices() const noexcept { return idx_; }
  [[nodiscard]] std::size_t size() const noexcept { return idx_.size(); }
  [[nodiscard]] bool empty() const noexcept { return idx_.empty(); }
  [[nodiscard]] bool contains(std::size_t i) const noexcept;
  [[nodiscard]] ActiveSet with(std::size_t i, std::size_t m2) const;
  [[nodiscard]] ActiveSet without(std::size_t i, std::size_t m2) const;
  [[nodiscard]] std::vector<std::size_t> one_based() const;
  [[nodiscard]] std::string to_string() const;

  /// Size of the symmetric difference.
  [[nodiscard]] std::size_t distance(const ActiveSet& other) const;

  auto operator<=>(const ActiveSet&) const = default;

 private:
  std::vector<std::size_t> idx_;
};

struct PrimalDualSolution {
  Vector x;
  Vector lambda;
  Vector mu;
  double objective = 0.0;
};

/// Affine laws of one critical region: each block maps −B − θ to the
/// corresponding variables. Rows and θ_C-columns of non-active constraints
/// are zero.
struct RegionSlopes {
  Matrix grad_x;
  Matrix grad_lambda;
  Matrix grad_mu;
  ActiveSet active_set;
};

}  // namespace cfqp
