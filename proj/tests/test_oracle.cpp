#include <doctest.h>

#include "cfqp/oracle.hpp"
#include "support.hpp"

using namespace cfqp;
using testing::two_d_problem;
using testing::two_d_theta;

namespace {

// Reference optima computed with an interior-point solver.
struct Reference {
  double a, b;
  std::string active;
  Vector x;
  Vector mu;
  double objective;
};

const std::vector<Reference>& references() {
  static const std::vector<Reference> refs{
      {50, 50, "{3,4}", {25.471698113, 21.875, 24.528301887, 28.125}, {0, 0, 7972.169811, 7112.5, 0, 0, 0, 0},
       378366.7452830847},
      {300, 200, "{3,4}", {152.830188679, 87.5, 147.169811321, 112.5}, {0, 0, 47708.018868, 28375.0, 0, 0, 0, 0},
       9999952.830188723},
      {600, 300, "{1,3,4}", {264.356435644, 85.643564356, 335.643564356, 214.356435644},
       {26269.306931, 0, 108773.514852, 54042.821782, 0, 0, 0, 0}, 36152599.00990131},
      {100, 700, "{1,3,4}", {47.524752475, 302.475247525, 52.475247525, 397.524752475},
       {2174.257426, 0, 17026.980198, 100201.237624, 0, 0, 0, 0}, 35551287.12871323},
      {900, 40, "{1,3,4,6}", {350, 0, 550, 40}, {69000, 0, 178225, 10105, 0, 58920, 0, 0}, 68340100.0},
      {30, 900, "{1,3,4,5}", {0, 350, 30, 550}, {25200, 0, 9745, 138625, 15480, 0, 0, 0}, 58129050.0},
  };
  return refs;
}

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("brute force matches reference optima on the 2D example") {
  const auto p = two_d_problem();
  for (const auto& r : references()) {
    CAPTURE(r.a);
    CAPTURE(r.b);
    const auto res = brute_force_solve(*p, two_d_theta(r.a, r.b));
    CHECK(res.active_set.to_string() == r.active);
    CHECK(testing::rel_diff(res.solution.x, r.x) < 1e-8);
    CHECK(testing::rel_diff(res.solution.mu, r.mu) < 1e-8);
    CHECK(res.solution.objective == doctest::Approx(r.objective).epsilon(1e-10));
    CHECK_FALSE(res.degenerate());
  }
}

TEST_CASE("2D feasible set is theta1 + theta2 <= 950") {
  const auto p = two_d_problem();
  CHECK(is_feasible(*p, two_d_theta(475.0, 474.9)));
  CHECK_FALSE(is_feasible(*p, two_d_theta(475.0, 475.1)));
  CHECK(is_feasible(*p, two_d_theta(950.0, 0.0)));
  CHECK_FALSE(is_feasible(*p, two_d_theta(600.0, 400.0)));
  CHECK_THROWS_AS(brute_force_solve(*p, two_d_theta(600.0, 400.0)), Infeasible);
}

TEST_CASE("boundary points are flagged degenerate") {
  const auto p = two_d_problem();
  // x = 0: every lower bound is tight.
  const auto res = brute_force_solve(*p, two_d_theta(0.0, 0.0));
  CHECK(res.degenerate());
}

TEST_CASE("oracle refuses problems beyond the enumeration guard") {
  const Dcopf m = build_dcopf_with_lines(synthetic_case(12, 4, 3), uniform_limits(synthetic_case(12, 4, 3), 1e9));
  REQUIRE(m.problem->m2() > OracleOptions::kMaxInequalities);
  CHECK_THROWS_AS(brute_force_solve(*m.problem, ParameterPoint::zeros(*m.problem)), InvalidProblem);
  CHECK_FALSE(oracle_feasible(*m.problem, ParameterPoint::zeros(*m.problem)).has_value());
}

TEST_CASE("KKT report is zero at the optimum and measures each condition") {
  const auto p = two_d_problem();
  const auto t = two_d_theta(600.0, 300.0);
  const auto sol = brute_force_solve(*p, t).solution;
  const auto r = kkt_report(*p, sol, t);
  CHECK(r.scalar < 1e-18);

  PrimalDualSolution bad = sol;
  bad.mu[4] = -2.0;     // dual infeasible, and x1 > 0 so complementarity breaks too
  bad.x[1] -= 1000.0;  // violates x2 >= 0
  const auto rb = kkt_report(*p, bad, t);
  CHECK(rb.kkt3[4] == 2.0);
  CHECK(rb.kkt2_ineq[5] > 0.0);
  CHECK(rb.kkt4[4] == doctest::Approx(4.0 * sol.x[0] * sol.x[0]));
  const auto cols = kkt_columns(*p, rb);
  REQUIRE(cols.size() == 5);
  CHECK(cols[0].name == "KKT1");
  CHECK(cols[2].name == "KKT2(≤)");
  CHECK(cols[3].max == 2.0);
}

// Reference values carry the external solver's own accuracy (about 1e-8).
TEST_CASE("6-bus dispatch matches the reference economic dispatch") {
  const auto& m = testing::six_bus();
  const auto t = theta_for_demand(m, m.power_case.base_demand());
  const auto res = brute_force_solve(*m.problem, t);
  CHECK(res.active_set.empty());
  CHECK(res.solution.x[m.index.gen_var[0]] == doctest::Approx(124.393279).epsilon(1e-7));
  CHECK(res.solution.x[m.index.gen_var[1]] == doctest::Approx(149.720601).epsilon(1e-7));
  CHECK(res.solution.x[m.index.gen_var[2]] == doctest::Approx(145.886119).epsilon(1e-7));
  CHECK(res.solution.objective == doctest::Approx(5018.453026).epsilon(1e-9));
  for (double l : res.solution.lambda) CHECK(l == doctest::Approx(12.995032).epsilon(1e-7));
  const auto cols = kkt_columns(*m.problem, kkt_report(*m.problem, res.solution, t));
  CHECK(cols[0].name == "KKT1-P_g");
  CHECK(cols[1].name == "KKT1-δ");
  CHECK(kkt_report(*m.problem, res.solution, t).scalar < 1e-16);
}

}
