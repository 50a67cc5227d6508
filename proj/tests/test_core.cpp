#include <doctest.h>

#include "cfqp/core.hpp"
#include "cfqp/io.hpp"
#include "support.hpp"

using namespace cfqp;
using testing::two_d_problem;
using testing::two_d_theta;

TEST_SUITE("core") {

TEST_CASE("LU solves a pivoting system and flags singular input") {
  const Matrix a{{0.0, 2.0, 1.0}, {1.0, 1.0, 0.0}, {3.0, 0.0, 1.0}};
  const LuFactorization<double> lu(a);
  REQUIRE_FALSE(lu.singular());
  const Vector x = lu.solve(Vector{5.0, 3.0, 6.0});
  CHECK(x[0] == doctest::Approx(1.4));
  CHECK(x[1] == doctest::Approx(1.6));
  CHECK(x[2] == doctest::Approx(1.8));
  const Matrix inv = lu.inverse();
  const Matrix id = matmul(a, inv);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(id(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));

  const Matrix s{{1.0, 2.0}, {2.0, 4.0}};
  CHECK(LuFactorization<double>(s).singular());
  CHECK_THROWS_AS(factorize(s), SingularJacobian);
}

TEST_CASE("problem validation rejects bad shapes and non-convex costs") {
  MpQpProblem::Data d;
  d.Q = Matrix{{1.0, 0.0}, {0.0, 1.0}};
  d.C = {0.0, 0.0};
  d.A_e = Matrix(0, 2);
  d.A_C = Matrix{{1.0, 0.0}};
  d.b_C = {0.0};
  CHECK_NOTHROW(MpQpProblem{d});

  auto bad = d;
  bad.Q = Matrix{{1.0, 0.5}, {0.0, 1.0}};
  CHECK_THROWS_AS(MpQpProblem{bad}, InvalidProblem);
  bad = d;
  bad.Q = Matrix{{1.0, 0.0}, {0.0, -1.0}};
  CHECK_THROWS_AS(MpQpProblem{bad}, InvalidProblem);
  bad = d;
  bad.A_C = Matrix{{1.0, 0.0, 0.0}};
  CHECK_THROWS_AS(MpQpProblem{bad}, InvalidProblem);
  bad = d;
  bad.A_e = Matrix{{1.0, 1.0}, {2.0, 2.0}};
  bad.b_e = {0.0, 0.0};
  CHECK_THROWS_AS(MpQpProblem{bad}, InvalidProblem);
  bad = d;
  bad.groups = {{"g", {5}}};
  CHECK_THROWS_AS(MpQpProblem{bad}, InvalidProblem);
}

TEST_CASE("digest is stable under reload and sensitive to data") {
  const auto p = two_d_problem();
  const MpQpProblem again = problem_from_json(to_json(*p));
  CHECK(again.digest() == p->digest());
  CHECK(p->digest().size() == 64);
  auto d = p->data();
  d.C[0] += 1e-12;
  CHECK(MpQpProblem(d).digest() != p->digest());
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("active sets print one-based and measure symmetric difference") {
  const auto a = ActiveSet::from_one_based({3, 4}, 8);
  CHECK(a.to_string() == "{3,4}");
  CHECK(a.indices() == std::vector<std::size_t>{2, 3});
  const auto b = a.with(0, 8);
  CHECK(b.to_string() == "{1,3,4}");
  CHECK(a.distance(b) == 1);
  CHECK(b.without(2, 8).distance(a) == 2);
  CHECK(ActiveSet::from_mask(0b101, 8).to_string() == "{1,3}");
  CHECK_THROWS_AS(ActiveSet({8}, 8), InvalidProblem);
  CHECK(ActiveSet({3, 1, 3}, 8).to_string() == "{2,4}");
}

TEST_CASE("parameter points stack as [theta_c | theta_e | theta_C]") {
  const auto p = two_d_problem();
  const auto t = two_d_theta(10.0, 20.0);
  const Vector s = t.stacked();
  REQUIRE(s.size() == p->d());
  CHECK(s[p->n() + 2] == 10.0);
  CHECK(ParameterPoint::from_stacked(*p, s) == t);
  const Vector u = model_input(*p, t);
  CHECK(u[0] == -25.0);
  CHECK(u[p->n()] == 350.0);
  CHECK(u[p->n() + 2] == -10.0);
}

TEST_CASE("active-set solve reproduces the reference solution of region {3,4}") {
  const auto p = two_d_problem();
  const auto t = two_d_theta(50.0, 50.0);
  const auto sol = solve_active_set(*p, ActiveSet::from_one_based({3, 4}, 8), t);
  const Vector x_ref{25.471698113, 21.875, 24.528301887, 28.125};
  const Vector mu_ref{0, 0, 7972.169811, 7112.5, 0, 0, 0, 0};
  CHECK(testing::rel_diff(sol.x, x_ref) < 1e-8);
  CHECK(testing::rel_diff(sol.mu, mu_ref) < 1e-8);
  CHECK(sol.objective == doctest::Approx(378366.7452830847).epsilon(1e-12));

  const auto g = lagrangian_gradients(*p, sol, t);
  for (double v : g.dL_dx) CHECK(std::abs(v) < 1e-9);
  CHECK(std::abs(g.dL_dmu[2]) < 1e-10);
  CHECK(std::abs(g.dL_dmu[3]) < 1e-10);
}

TEST_CASE("region slopes agree with direct solves") {
  const auto p = two_d_problem();
  const auto b = ActiveSet::from_one_based({1, 3, 4}, 8);
  const auto slopes = region_slopes(*p, b);
  CHECK(slopes.grad_x.rows() == p->n());
  CHECK(slopes.grad_mu.cols() == p->d());
  for (std::size_t c = 0; c < p->d(); ++c) CHECK(slopes.grad_mu(1, c) == 0.0);
  for (auto [a, bb] : {std::pair{600.0, 300.0}, {100.0, 700.0}, {400.0, 540.0}}) {
    const auto t = two_d_theta(a, bb);
    const auto direct = solve_active_set(*p, b, t);
    const auto law = evaluate_region(*p, slopes, t);
    CHECK(testing::rel_diff(law.x, direct.x) < 1e-12);
    CHECK(testing::rel_diff(law.mu, direct.mu) < 1e-12);
  }
  // Rows 1-4 are linearly dependent.
  CHECK_THROWS_AS(region_slopes(*p, ActiveSet::from_one_based({1, 2, 3, 4}, 8)), SingularActiveJacobian);
}

TEST_CASE("base Jacobian has the saddle-point layout") {
  const auto& m = testing::six_bus();
  const auto& p = *m.problem;
  const Matrix j = assemble_base_jacobian(p);
  REQUIRE(j.rows() == p.n() + p.m1());
  CHECK(j(0, 0) == doctest::Approx(2.0 * p.Q()(0, 0)));
  CHECK(j(0, p.n()) == -p.A_e()(0, 0));
  CHECK(j(p.n(), p.n()) == 0.0);
  CHECK(assemble_active_jacobian(p, ActiveSet::from_one_based({1}, p.m2())).rows() == j.rows() + 1);
}

}
