#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfqp/io.hpp"
#include "cfqp/problem.hpp"

namespace cfqp {

struct Bus {
  int id;
  double demand;  ///< MW
};

/// Cost q·P² + c·P in $/h with P in MW.
struct Generator {
  int bus;
  double q;
  double c;
  double p_min;
  double p_max;
};

struct Line {
  int from;
  int to;
  double susceptance;            ///< per unit, 1/x
  std::optional<double> limit;   ///< MW
};

/// DC network. Flows and injections are in MW; angles in radians;
/// a line carries base_mva · b · (δ_from − δ_to).
struct PowerCase {
  std::string name;
  double base_mva = 100.0;
  int slack_bus = 0;
  std::vector<Bus> buses;
  std::vector<Generator> generators;
  std::vector<Line> lines;

  [[nodiscard]] std::size_t bus_index(int id) const;  ///< throws InvalidCase
  /// Bus susceptance matrix in MW/rad: base_mva times the weighted Laplacian,
  /// so net injection = B δ and every row sums to zero.
  [[nodiscard]] Matrix susceptance_matrix() const;
  [[nodiscard]] Vector base_demand() const;
  [[nodiscard]] double total_capacity() const;
  /// Throws InvalidCase, MissingSlack, DisconnectedNetwork.
  void validate() const;
};

struct FlowLimits {
  Vector f_plus;  ///< one per line, MW
};

/// Limits stored on the lines; throws InvalidCase if any line has none.
[[nodiscard]] FlowLimits case_limits(const PowerCase& c);
[[nodiscard]] FlowLimits uniform_limits(const PowerCase& c, double mw);

/// Where each physical quantity lives in the reduced problem.
struct DcopfIndex {
  std::vector<std::size_t> gen_var;                 ///< generator → variable
  std::vector<std::optional<std::size_t>> angle_var;  ///< bus → variable (none for the slack)
  std::vector<std::size_t> balance_row;             ///< bus → equality row
  std::vector<std::size_t> gen_upper_row, gen_lower_row;
  std::vector<std::size_t> line_upper_row, line_lower_row;  ///< empty without limits

  /// Full angle vector with 0 at the slack bus.
  [[nodiscard]] Vector angles(std::span<const double> x) const;
};

struct Dcopf {
  PowerCase power_case;
  std::shared_ptr<const MpQpProblem> problem;
  DcopfIndex index;
  bool with_lines = false;
};

/// Variables [P_g per generator; δ per non-slack bus]. Per-bus balance
///   P_g(bus) − (B δ)_bus = P_d,bus + θ_e,bus
/// so θ_e is the demand change at each bus. Inequalities: for each generator
/// in order, −P ≥ −P⁺ then P ≥ P⁻.
[[nodiscard]] Dcopf build_dcopf(const PowerCase& c);
/// Adds, per line in order, −flow ≥ −F⁺ then flow ≥ −F⁺.
[[nodiscard]] Dcopf build_dcopf_with_lines(const PowerCase& c, const FlowLimits& limits);

/// θ_e for net demand P_d + θ_e_base − P_ren.
[[nodiscard]] ParameterPoint inject_renewable(const Dcopf& m, std::span<const double> theta_e_base,
                                              std::span<const double> p_ren);

/// θ for a demand vector (MW per bus).
[[nodiscard]] ParameterPoint theta_for_demand(const Dcopf& m, std::span<const double> demand);

/// Meshed test network: a ring over `buses` buses plus buses/4 random chords,
/// `generators` units on distinct random buses (the first at the slack), and
/// loads of 20-80 MW on the rest. Capacity is about twice the total load.
[[nodiscard]] PowerCase synthetic_case(std::size_t buses, std::size_t generators, std::uint64_t seed);

[[nodiscard]] PowerCase case_from_json(const json& j);
[[nodiscard]] json to_json(const PowerCase& c);
[[nodiscard]] PowerCase load_case(const std::filesystem::path& path);

/// MATPOWER case text (mpc.baseMVA, mpc.bus, mpc.gen, mpc.branch,
/// mpc.gencost). Polynomial costs of degree ≤ 2 only; out-of-service rows
/// skipped; RATE_A = 0 means unlimited.
[[nodiscard]] PowerCase parse_matpower(std::string_view text, std::string name = "imported");

}  // namespace cfqp
