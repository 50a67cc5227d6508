#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfqp/core.hpp"
#include "cfqp/problem.hpp"

namespace cfqp {

struct ExpandResult;

struct RegionEntry {
  std::size_t id = 0;
  ActiveSet active_set;
  RegionSlopes slopes;
  std::optional<std::size_t> parent_id;
  ParameterPoint witness_theta;
};

/// One nonzero of the signed region incidence matrix.
struct IncidenceEntry {
  std::size_t row;
  std::size_t col;
  int value;
  bool operator==(const IncidenceEntry&) const = default;
};

/// Closed-form solver network.
///
/// Shadow-price model, per region column j with parent p:
///   h¹_i = W0_i (−B − θ)                  candidate μ of region i
///   a_j  = Σ_i 𝓘_ij h¹_i                 = v_j (h¹_j − h¹_p), root: h¹_0
///   μ   += v_j ρ_j ⊙ ReLU(ρ_j ⊙ a_j)
/// ρ_j ∈ {±1}^m2 marks, per constraint, whether the slope increment of
/// region j agrees with the column direction v_j; for the root ρ = 1.
/// Solution model: [x; λ] = J⁻¹ [−C − θ_c + A_Cᵀμ; −b_e − θ_e].
class ClosedFormModel {
 public:
  [[nodiscard]] const MpQpProblem& problem() const noexcept { return *problem_; }
  [[nodiscard]] const std::shared_ptr<const MpQpProblem>& shared_problem() const noexcept { return problem_; }
  [[nodiscard]] const std::string& problem_digest() const noexcept { return digest_; }
  [[nodiscard]] Precision precision() const noexcept { return precision_; }

  [[nodiscard]] std::size_t size() const noexcept { return regions_.size(); }
  [[nodiscard]] const std::vector<RegionEntry>& regions() const noexcept { return regions_; }
  [[nodiscard]] const RegionEntry& region(std::size_t id) const { return regions_.at(id); }
  [[nodiscard]] std::optional<std::size_t> find_region(const ActiveSet& b) const;

  /// Stacked first-layer slopes, (k·m2)×d; block i is regions()[i].slopes.grad_mu.
  [[nodiscard]] const Matrix& W0() const noexcept { return w0_; }
  [[nodiscard]] const std::vector<IncidenceEntry>& incidence() const noexcept { return incidence_; }
  [[nodiscard]] Matrix incidence_dense() const;
  [[nodiscard]] const std::vector<int>& direction() const noexcept { return direction_; }
  /// k×m2 matrix of ±1.
  [[nodiscard]] const Matrix& agreement() const noexcept { return agreement_; }
  [[nodiscard]] const Matrix& base_inverse() const noexcept { return base_inverse_; }

  /// Replaces a region's witness point.
  [[nodiscard]] ClosedFormModel with_witness(std::size_t id, const ParameterPoint& theta) const;

  /// Same weights evaluated at another precision.
  [[nodiscard]] ClosedFormModel with_precision(Precision p) const;

  [[nodiscard]] Vector forward_mu(const ParameterPoint& theta) const;
  [[nodiscard]] PrimalDualSolution forward(const ParameterPoint& theta) const;
  [[nodiscard]] std::vector<PrimalDualSolution> batch_forward(std::span<const ParameterPoint> thetas) const;

  /// Throws DigestMismatch unless `p` is the problem this model was built for.
  void check_bound(const MpQpProblem& p) const;

 private:
  template <typename T>
  struct Cache {
    std::vector<T> w0;
    std::vector<T> agreement;
    std::vector<T> base_inverse;
    std::vector<T> a_c_transposed;
  };

  template <typename T>
  struct Workspace;

  template <typename T>
  void run(std::span<const ParameterPoint> thetas, const Cache<T>& c, Workspace<T>& ws, bool mu_only,
           PrimalDualSolution* out) const;
  template <typename T>
  [[nodiscard]] std::vector<PrimalDualSolution> run_batch(std::span<const ParameterPoint> thetas, const Cache<T>& c,
                                                          bool mu_only) const;
  void rebuild();

  std::shared_ptr<const MpQpProblem> problem_;
  std::string digest_;
  Precision precision_ = Precision::f64;
  std::vector<RegionEntry> regions_;
  Matrix w0_;
  std::vector<IncidenceEntry> incidence_;
  std::vector<int> direction_;
  Matrix agreement_;
  Matrix base_inverse_;
  std::shared_ptr<const Cache<float>> cache32_;
  std::shared_ptr<const Cache<double>> cache64_;

  friend ClosedFormModel init_model(std::shared_ptr<const MpQpProblem>, const ActiveSet&,
                                    const ParameterPoint&, Precision);
  friend ExpandResult expand(const ClosedFormModel&, std::size_t, const ActiveSet&, const ParameterPoint&);
  friend ClosedFormModel deserialize_model(std::string_view, std::shared_ptr<const MpQpProblem>);
};

/// One-region model from an active set known to be optimal at theta0.
[[nodiscard]] ClosedFormModel init_model(std::shared_ptr<const MpQpProblem> problem, const ActiveSet& b0,
                                         const ParameterPoint& theta0, Precision precision = Precision::f64);

struct ExpandResult {
  ClosedFormModel model;
  std::size_t region_id;
  /// True when the active set was already registered; the model is unchanged
  /// and region_id names the existing entry.
  bool duplicate;
};

/// Appends a child region of `parent_id`. The column direction is the sign of
/// the largest-magnitude entry of δ = (W0_new − W0_parent)(−B − θ_probe);
/// per-constraint agreement is the sign of δ_k relative to it.
[[nodiscard]] ExpandResult expand(const ClosedFormModel& model, std::size_t parent_id, const ActiveSet& new_set,
                                  const ParameterPoint& probe_theta);

/// Versioned JSON container. Numbers are written in shortest round-trip form,
/// so weights reload bit-exactly.
inline constexpr int kModelFormatVersion = 1;
[[nodiscard]] std::string serialize_model(const ClosedFormModel& model);
/// Throws DigestMismatch or MalformedModel.
[[nodiscard]] ClosedFormModel deserialize_model(std::string_view bytes, std::shared_ptr<const MpQpProblem> problem);

}  // namespace cfqp
