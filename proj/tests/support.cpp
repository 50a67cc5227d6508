#include "support.hpp"

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>

#include "cfqp/io.hpp"

namespace testing {

using namespace cfqp;

std::filesystem::path data_path(const std::string& name) { return std::filesystem::path(CFQP_DATA_DIR) / name; }

std::filesystem::path cli_path() { return CFQP_CLI_PATH; }

std::filesystem::path scratch_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("cfqp-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir;
}

std::shared_ptr<const MpQpProblem> two_d_problem() {
  static const auto p = std::make_shared<const MpQpProblem>(load_problem(data_path("2d_example.json")));
  return p;
}

ParameterPoint two_d_theta(double a, double b) {
  ParameterPoint t = ParameterPoint::zeros(*two_d_problem());
  t.theta_C[2] = a;
  t.theta_C[3] = b;
  return t;
}

namespace {

ClosedFormModel discover_from(const std::string& config) {
  auto cfg = cli::load_config(data_path(config));
  std::ostringstream sink;
  return cli::cmd_discover(cfg, {}, {}, sink).result.model;
}

}  // namespace

const ClosedFormModel& two_d_model() {
  // Rebound to the shared problem instance used by the tests.
  static const ClosedFormModel m =
      deserialize_model(serialize_model(discover_from("2d_example.config.json")), two_d_problem());
  return m;
}

PowerCase six_bus_case() { return load_case(data_path("six_bus.json")); }

const Dcopf& six_bus() {
  static const Dcopf m = build_dcopf(six_bus_case());
  return m;
}

const Dcopf& six_bus_lines() {
  static const Dcopf m = build_dcopf_with_lines(six_bus_case(), case_limits(six_bus_case()));
  return m;
}

const ClosedFormModel& six_bus_model() {
  static const ClosedFormModel m =
      deserialize_model(serialize_model(discover_from("six_bus_no_limits.config.json")), six_bus().problem);
  return m;
}

const ClosedFormModel& six_bus_lines_model() {
  static const ClosedFormModel m =
      deserialize_model(serialize_model(discover_from("six_bus.config.json")), six_bus_lines().problem);
  return m;
}

std::vector<ParameterPoint> two_d_feasible_sample(std::size_t count, std::uint64_t seed) {
  const auto p = two_d_problem();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  std::vector<ParameterPoint> out;
  while (out.size() < count) {
    double a = u(rng), b = u(rng);
    if (a + b > 1000.0) {
      a = 1000.0 - a;
      b = 1000.0 - b;
    }
    ParameterPoint t = two_d_theta(a, b);
    if (is_feasible(*p, t)) out.push_back(std::move(t));
  }
  return out;
}

std::shared_ptr<const MpQpProblem> random_problem(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> nd(2, 5), md(3, 8);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.5, 5.0), slack(0.0, 2.0);
  const std::size_t n = nd(rng), m2 = md(rng);
  MpQpProblem::Data d;
  Matrix r(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) r(i, j) = u(rng);
  d.Q = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += r(k, i) * r(k, j);
      d.Q(i, j) = s + (i == j ? pos(rng) : 0.0);
    }
  d.C.resize(n);
  for (double& c : d.C) c = 10.0 * u(rng);
  d.A_C = Matrix(m2, n);
  for (std::size_t q = 0; q < m2; ++q)
    for (std::size_t i = 0; i < n; ++i) d.A_C(q, i) = u(rng);
  Vector x0(n);
  for (double& v : x0) v = u(rng);
  d.b_C.resize(m2);
  for (std::size_t q = 0; q < m2; ++q) {
    double ax = 0.0;
    for (std::size_t i = 0; i < n; ++i) ax += d.A_C(q, i) * x0[i];
    d.b_C[q] = ax - slack(rng);
  }
  d.A_e = Matrix(0, n);
  return std::make_shared<const MpQpProblem>(std::move(d));
}

ClosedFormModel random_model(std::mt19937_64& rng, std::size_t max_regions) {
  const auto p = random_problem(rng);
  const ParameterPoint zero = ParameterPoint::zeros(*p);
  const Precision prec = std::bernoulli_distribution(0.5)(rng) ? Precision::f64 : Precision::f32;
  ClosedFormModel m = init_model(p, brute_force_solve(*p, zero).active_set, zero, prec);
  std::normal_distribution<double> g(0.0, 3.0);
  for (int attempt = 0; attempt < 60 && m.size() < max_regions; ++attempt) {
    Vector v(p->d(), 0.0);
    for (double& x : v) x = g(rng);
    const ParameterPoint t = ParameterPoint::from_stacked(*p, v);
    try {
      const auto r = brute_force_solve(*p, t);
      const std::size_t parent = std::uniform_int_distribution<std::size_t>(0, m.size() - 1)(rng);
      m = expand(m, parent, r.active_set, t).model;
    } catch (const Infeasible&) {
    }
  }
  return m;
}

double rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(b[i])));
  return worst;
}

}  // namespace testing
