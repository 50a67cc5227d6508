#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "cfqp/datasets.hpp"
#include "cfqp/dcopf.hpp"
#include "cfqp/discovery.hpp"
#include "cfqp/model.hpp"
#include "cfqp/oracle.hpp"
#include "commands.hpp"

namespace testing {

std::filesystem::path data_path(const std::string& name);
std::filesystem::path cli_path();
/// Fresh directory under the system temp dir, removed at process exit is not
/// guaranteed; names are unique per call.
std::filesystem::path scratch_dir(const std::string& tag);

std::shared_ptr<const cfqp::MpQpProblem> two_d_problem();
/// Point with θ_C3 = a, θ_C4 = b and everything else zero.
cfqp::ParameterPoint two_d_theta(double a, double b);
/// Model discovered from data/2d_example.config.json, computed once.
const cfqp::ClosedFormModel& two_d_model();

cfqp::PowerCase six_bus_case();
const cfqp::Dcopf& six_bus();        ///< no line limits
const cfqp::Dcopf& six_bus_lines();  ///< 200 MW on every line
/// Model discovered from data/six_bus_no_limits.config.json, computed once.
const cfqp::ClosedFormModel& six_bus_model();
/// Model discovered from data/six_bus.config.json, computed once.
const cfqp::ClosedFormModel& six_bus_lines_model();

/// Uniform in the triangle θ_C3, θ_C4 ≥ 0, θ_C3 + θ_C4 ≤ 1000, kept when the
/// oracle finds the point feasible.
std::vector<cfqp::ParameterPoint> two_d_feasible_sample(std::size_t count, std::uint64_t seed);

/// Strictly convex problem with θ = 0 feasible: n in [2,5], m2 in [3,8].
std::shared_ptr<const cfqp::MpQpProblem> random_problem(std::mt19937_64& rng);
/// Model grown with expand() from oracle active sets at random θ.
cfqp::ClosedFormModel random_model(std::mt19937_64& rng, std::size_t max_regions = 6);

/// max_i |a_i − b_i| / max(1, |b_i|)
double rel_diff(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace testing
