#include "cfqp/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <sstream>

#include "cfqp/errors.hpp"

namespace cfqp {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(json(std::vector<double>(row.begin(), row.end())));
  }
  return rows;
}

namespace {

double number_at(const json& v, std::string_view field) {
  if (!v.is_number()) throw ParseError(std::string(field) + ": expected a number");
  return v.get<double>();
}

json data_to_json(const MpQpProblem::Data& d) {
  json j;
  j["n"] = d.C.size();
  j["m1"] = d.b_e.size();
  j["m2"] = d.b_C.size();
  j["Q"] = matrix_to_json(d.Q);
  j["C"] = d.C;
  j["C0"] = d.C0;
  j["A_e"] = matrix_to_json(d.A_e);
  j["b_e"] = d.b_e;
  j["A_C"] = matrix_to_json(d.A_C);
  j["b_C"] = d.b_C;
  if (!d.groups.empty()) {
    json g = json::object();
    for (const auto& grp : d.groups) g[grp.name] = grp.indices;
    j["groups"] = g;
  }
  return j;
}

}  // namespace

Matrix matrix_from_json(const json& j, std::size_t rows, std::size_t cols, std::string_view field) {
  if (!j.is_array()) throw ParseError(std::string(field) + ": expected an array of rows");
  if (j.size() != rows)
    throw ParseError(std::string(field) + ": expected " + std::to_string(rows) + " rows, got " +
                     std::to_string(j.size()));
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || row.size() != cols)
      throw ParseError(std::string(field) + ": row " + std::to_string(r) + " must have " +
                       std::to_string(cols) + " entries");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = number_at(row[c], field);
  }
  return m;
}

Vector vector_from_json(const json& j, std::size_t size, std::string_view field) {
  if (!j.is_array() || j.size() != size)
    throw ParseError(std::string(field) + ": expected an array of " + std::to_string(size) +
                     " numbers");
  Vector v(size);
  for (std::size_t i = 0; i < size; ++i) v[i] = number_at(j[i], field);
  return v;
}

json to_json(const MpQpProblem& p) { return data_to_json(p.data()); }

MpQpProblem problem_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("problem: expected a JSON object");
  for (const char* key : {"n", "m1", "m2", "Q", "C", "C0", "A_e", "b_e", "A_C", "b_C"})
    if (!j.contains(key)) throw ParseError(std::string("problem: missing field '") + key + "'");
  auto dim = [&](const char* key) {
    const auto& v = j.at(key);
    if (!v.is_number_unsigned()) throw ParseError(std::string(key) + ": expected a non-negative integer");
    return v.get<std::size_t>();
  };
  const std::size_t n = dim("n"), m1 = dim("m1"), m2 = dim("m2");
  MpQpProblem::Data d;
  d.Q = matrix_from_json(j.at("Q"), n, n, "Q");
  d.C = vector_from_json(j.at("C"), n, "C");
  d.C0 = number_at(j.at("C0"), "C0");
  d.A_e = matrix_from_json(j.at("A_e"), m1, n, "A_e");
  d.b_e = vector_from_json(j.at("b_e"), m1, "b_e");
  d.A_C = matrix_from_json(j.at("A_C"), m2, n, "A_C");
  d.b_C = vector_from_json(j.at("b_C"), m2, "b_C");
  if (j.contains("groups")) {
    const auto& g = j.at("groups");
    if (!g.is_object()) throw ParseError("groups: expected an object");
    for (const auto& [name, idx] : g.items()) {
      if (!idx.is_array()) throw ParseError("groups." + name + ": expected an index array");
      d.groups.push_back({name, idx.get<std::vector<std::size_t>>()});
    }
  }
  return MpQpProblem(std::move(d));
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out << text;
}

MpQpProblem load_problem(const std::filesystem::path& path) {
  return problem_from_json(read_json_file(path));
}

void save_problem(const MpQpProblem& p, const std::filesystem::path& path) {
  write_text_file(path, to_json(p).dump(2) + "\n");
}

std::string canonical_json(const MpQpProblem::Data& d) { return data_to_json(d).dump(); }

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xf]);
  }
  return out;
}

json to_json(const ParameterPoint& t) {
  return json{{"theta_c", t.theta_c}, {"theta_e", t.theta_e}, {"theta_C", t.theta_C}};
}

ParameterPoint parameter_from_json(const MpQpProblem& p, const json& j) {
  ParameterPoint t = ParameterPoint::zeros(p);
  if (!j.is_object()) throw ParseError("parameter point: expected an object");
  if (j.contains("theta_c")) t.theta_c = vector_from_json(j.at("theta_c"), p.n(), "theta_c");
  if (j.contains("theta_e")) t.theta_e = vector_from_json(j.at("theta_e"), p.m1(), "theta_e");
  if (j.contains("theta_C")) t.theta_C = vector_from_json(j.at("theta_C"), p.m2(), "theta_C");
  return t;
}

}  // namespace cfqp
