#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cfqp/oracle.hpp"

namespace cfqp {

/// Per-condition KKT statistics over a set of solutions, laid out like the
/// usual "mean squared KKT error" tables: one column per condition, with
/// stationarity split by variable group.
struct KktTable {
  std::vector<std::string> columns;
  Vector mean;   ///< mean over points of the per-point column mean
  Vector worst;  ///< largest single entry
  std::size_t count = 0;
  double scalar_mean = 0.0;
  double scalar_worst = 0.0;
};

[[nodiscard]] KktTable kkt_table(const MpQpProblem& p, std::span<const PrimalDualSolution> sols,
                                 std::span<const ParameterPoint> thetas);

[[nodiscard]] std::string format_table(const KktTable& t, const std::string& label);
[[nodiscard]] std::string table_csv_header(const KktTable& t);
[[nodiscard]] std::string table_csv_rows(const KktTable& t, const std::string& label);
[[nodiscard]] json to_json(const KktTable& t);

}  // namespace cfqp
