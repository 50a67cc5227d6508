#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "cfqp/problem.hpp"

namespace cfqp {

using json = nlohmann::json;

[[nodiscard]] json matrix_to_json(const Matrix& m);
/// Strict: every row must have exactly `cols` entries; `rows` is checked too.
[[nodiscard]] Matrix matrix_from_json(const json& j, std::size_t rows, std::size_t cols,
                                      std::string_view field);
[[nodiscard]] Vector vector_from_json(const json& j, std::size_t size, std::string_view field);

/// Problem file: {"n","m1","m2","Q","C","C0","A_e","b_e","A_C","b_C"} with
/// row-major nested arrays, plus an optional "groups" object mapping a group
/// name to zero-based variable indices.
[[nodiscard]] json to_json(const MpQpProblem& p);
[[nodiscard]] MpQpProblem problem_from_json(const json& j);
[[nodiscard]] MpQpProblem load_problem(const std::filesystem::path& path);
void save_problem(const MpQpProblem& p, const std::filesystem::path& path);

/// Canonical serialization used for digests: sorted keys, shortest
/// round-trip number formatting, no whitespace.
[[nodiscard]] std::string canonical_json(const MpQpProblem::Data& d);

[[nodiscard]] std::string sha256_hex(std::string_view bytes);

[[nodiscard]] json to_json(const ParameterPoint& t);
[[nodiscard]] ParameterPoint parameter_from_json(const MpQpProblem& p, const json& j);

[[nodiscard]] json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace cfqp
