#include <doctest.h>

#include "support.hpp"

using namespace cfqp;
using testing::two_d_model;
using testing::two_d_problem;
using testing::two_d_theta;

TEST_SUITE("model") {

TEST_CASE("a one-region model is the region's affine law") {
  const auto p = two_d_problem();
  const auto b = ActiveSet::from_one_based({3, 4}, 8);
  const auto m = init_model(p, b, two_d_theta(50, 50));
  CHECK(m.size() == 1);
  CHECK(m.incidence() == std::vector<IncidenceEntry>{{0, 0, 1}});
  CHECK(m.direction() == std::vector<int>{1});
  CHECK(m.W0() == region_slopes(*p, b).grad_mu);
  for (double a : m.agreement().storage()) CHECK(a == 1.0);
  const auto t = two_d_theta(300, 200);
  const auto law = evaluate_region(*p, region_slopes(*p, b), t);
  const auto net = m.forward(t);
  CHECK(testing::rel_diff(net.x, law.x) < 1e-12);
  CHECK(testing::rel_diff(net.mu, law.mu) < 1e-12);
  CHECK(net.objective == doctest::Approx(law.objective).epsilon(1e-12));
}

TEST_CASE("expand adds a signed incidence column and deduplicates") {
  const auto p = two_d_problem();
  const auto m0 = init_model(p, ActiveSet::from_one_based({3, 4}, 8), two_d_theta(50, 50));
  const auto probe = two_d_theta(600, 300);
  const auto r = expand(m0, 0, ActiveSet::from_one_based({1, 3, 4}, 8), probe);
  REQUIRE_FALSE(r.duplicate);
  CHECK(r.region_id == 1);
  CHECK(r.model.size() == 2);
  CHECK(r.model.incidence().size() == 3);
  const int v = r.model.direction()[1];
  CHECK(r.model.incidence_dense()(0, 1) == -v);
  CHECK(r.model.incidence_dense()(1, 1) == v);
  CHECK(r.model.region(1).parent_id == std::optional<std::size_t>{0});
  CHECK(r.model.W0().rows() == 2 * p->m2());
  // Exact on both sides of the facet.
  for (const auto& t : {two_d_theta(50, 50), probe}) {
    const auto o = brute_force_solve(*p, t).solution;
    CHECK(testing::rel_diff(r.model.forward(t).x, o.x) < 1e-9);
  }
  const auto dup = expand(r.model, 0, ActiveSet::from_one_based({1, 3, 4}, 8), probe);
  CHECK(dup.duplicate);
  CHECK(dup.region_id == 1);
  CHECK(dup.model.size() == 2);
  CHECK_THROWS_AS(expand(m0, 5, ActiveSet::from_one_based({1}, 8), probe), InvalidProblem);
}

TEST_CASE("discovered 2D model reproduces the oracle") {
  const auto& m = two_d_model();
  const auto p = two_d_problem();
  for (auto [a, b] : {std::pair{50.0, 50.0}, {300.0, 200.0}, {600.0, 300.0}, {100.0, 700.0}, {900.0, 40.0},
                      {30.0, 900.0}, {940.0, 5.0}}) {
    const auto t = two_d_theta(a, b);
    const auto o = brute_force_solve(*p, t).solution;
    const auto s = m.forward(t);
    CHECK(testing::rel_diff(s.x, o.x) < 1e-9);
    CHECK(testing::rel_diff(s.mu, o.mu) < 1e-9);
    CHECK(testing::rel_diff(m.forward_mu(t), s.mu) == 0.0);
  }
}

TEST_CASE("batch forward is bit-identical to single evaluations") {
  for (Precision prec : {Precision::f64, Precision::f32}) {
    const auto m = two_d_model().with_precision(prec);
    const auto thetas = testing::two_d_feasible_sample(203, 11);
    const auto batch = m.batch_forward(thetas);
    REQUIRE(batch.size() == thetas.size());
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      const auto one = m.forward(thetas[i]);
      CHECK(batch[i].x == one.x);
      CHECK(batch[i].mu == one.mu);
      CHECK(batch[i].objective == one.objective);
    }
  }
  CHECK(two_d_model().batch_forward({}).empty());
}

TEST_CASE("32-bit evaluation stays close to 64-bit") {
  const auto& m64 = two_d_model();
  const auto m32 = m64.with_precision(Precision::f32);
  CHECK(m32.precision() == Precision::f32);
  for (const auto& t : testing::two_d_feasible_sample(50, 5)) {
    const auto a = m64.forward(t), b = m32.forward(t);
    CHECK(testing::rel_diff(b.x, a.x) < 1e-3);
    CHECK(testing::rel_diff(b.mu, a.mu) < 1e-1);
  }
}

TEST_CASE("6-bus model matches the oracle on perturbed demand") {
  const auto& m = testing::six_bus_model();
  const auto& dc = testing::six_bus();
  std::size_t checked = 0;
  for (const auto& d : local_perturbation_dataset(dc, 100, 9)) {
    if (!d.feasible.value_or(false)) continue;
    const auto o = brute_force_solve(*dc.problem, d.theta);
    if (o.degenerate()) continue;
    const auto s = m.forward(d.theta);
    CHECK(testing::rel_diff(s.x, o.solution.x) < 1e-8);
    CHECK(testing::rel_diff(s.lambda, o.solution.lambda) < 1e-8);
    CHECK(testing::rel_diff(s.mu, o.solution.mu) < 1e-8);
    ++checked;
  }
  CHECK(checked > 50);
}

TEST_CASE("model rejects foreign inputs") {
  const auto& m = two_d_model();
  CHECK_THROWS_AS((void)m.forward(ParameterPoint::zeros(*testing::six_bus().problem)), InvalidProblem);
  CHECK_THROWS_AS(m.check_bound(*testing::six_bus().problem), DigestMismatch);
  CHECK_NOTHROW(m.check_bound(*two_d_problem()));
  const auto w = m.with_witness(0, two_d_theta(1, 2));
  CHECK(w.region(0).witness_theta == two_d_theta(1, 2));
  CHECK(m.region(0).witness_theta != two_d_theta(1, 2));
}

}
