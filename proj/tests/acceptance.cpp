#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "cfqp/errors.hpp"
#include "cfqp/report.hpp"
#include "support.hpp"

using namespace cfqp;
using Clock = std::chrono::steady_clock;

namespace {

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [x]");
  }
};

/// A problem bundle for the exactness suites: the model and 1000 feasible θ.
struct Bundle {
  std::string name;
  const ClosedFormModel* model;
  std::vector<ParameterPoint> thetas;
  double sample_seconds = 0.0;
};

constexpr std::size_t kSample = 1000;

const std::vector<Bundle>& bundles() {
  static const std::vector<Bundle> b = [] {
    std::vector<Bundle> out;
    auto t0 = Clock::now();
    out.push_back({"2d", &testing::two_d_model(), testing::two_d_feasible_sample(kSample, 11), 0.0});
    out.back().sample_seconds = since(t0);

    t0 = Clock::now();
    Bundle six{"6-bus", &testing::six_bus_model(), {}, 0.0};
    for (const auto& d : local_perturbation_dataset(testing::six_bus(), 2 * kSample, 12))
      if (d.feasible.value_or(false) && six.thetas.size() < kSample) six.thetas.push_back(d.theta);
    six.sample_seconds = since(t0);
    out.push_back(std::move(six));
    return out;
  }();
  return b;
}

KktTable table_at(const ClosedFormModel& model, Precision prec, std::span<const ParameterPoint> thetas) {
  const ClosedFormModel m = model.precision() == prec ? model : model.with_precision(prec);
  const auto sols = m.batch_forward(thetas);
  return kkt_table(model.problem(), sols, thetas);
}

std::string worst_column(const KktTable& t, const Vector& v) {
  std::size_t k = 0;
  for (std::size_t c = 1; c < v.size(); ++c)
    if (v[c] > v[k]) k = c;
  return t.columns[k] + "=" + sci(v[k]);
}

double max_of(const Vector& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }

struct DiscoveryRun {
  std::string name;
  cli::DiscoverOutcome outcome;
};

const std::vector<DiscoveryRun>& discovery_runs() {
  static const std::vector<DiscoveryRun> runs = [] {
    std::vector<DiscoveryRun> out;
    for (const char* cfg : {"2d_example.config.json", "six_bus_no_limits.config.json", "six_bus.config.json"}) {
      std::ostringstream sink;
      out.push_back({cfg, cli::cmd_discover(cli::load_config(testing::data_path(cfg)), {}, {}, sink)});
    }
    return out;
  }();
  return runs;
}

Verdict region_recovery() {
  Verdict v;
  const auto& run = discovery_runs()[0].outcome;
  std::set<ActiveSet> got, want;
  const std::size_t m2 = run.result.model.problem().m2();
  for (const auto& r : run.result.model.regions()) got.insert(r.active_set);
  for (const auto& s : {ActiveSet::from_one_based({3, 4}, m2), ActiveSet::from_one_based({1, 3, 4}, m2),
                        ActiveSet::from_one_based({1, 3, 4, 5}, m2), ActiveSet::from_one_based({1, 3, 4, 6}, m2)})
    want.insert(s);
  std::string sets;
  for (const auto& s : got) sets += s.to_string() + " ";
  v.require(run.result.model.size() == 4 && got == want, "regions " + sets);
  v.require(run.seconds < 5.0, "discover " + sci(run.seconds) + " s");
  return v;
}

Verdict exactness64() {
  Verdict v;
  for (const auto& b : bundles()) {
    const auto t0 = Clock::now();
    const auto t = table_at(*b.model, Precision::f64, b.thetas);
    const double secs = b.sample_seconds + since(t0);
    v.require(b.thetas.size() == kSample, b.name + " points " + std::to_string(b.thetas.size()));
    v.require(max_of(t.mean) <= 1e-18, b.name + " mean max " + worst_column(t, t.mean));
    v.require(max_of(t.worst) <= 1e-12, b.name + " worst max " + worst_column(t, t.worst));
    v.require(secs < 60.0, b.name + " " + sci(secs) + " s");
  }
  return v;
}

Verdict degradation32() {
  Verdict v;
  for (const auto& b : bundles()) {
    const auto t64 = table_at(*b.model, Precision::f64, b.thetas);
    const auto t32 = table_at(*b.model, Precision::f32, b.thetas);
    v.require(max_of(t32.mean) <= 1e-6, b.name + " f32 mean max " + worst_column(t32, t32.mean));
    v.require(max_of(t32.worst) <= 1e-2, b.name + " f32 worst max " + worst_column(t32, t32.worst));
    std::string order;
    bool ordered = true;
    for (std::size_t c = 0; c < t32.mean.size(); ++c) {
      // Columns that are identically zero at both widths count as ties.
      if (t32.mean[c] == 0.0 && t64.mean[c] == 0.0) continue;
      if (!(t32.mean[c] > t64.mean[c])) {
        ordered = false;
        order += " " + t32.columns[c] + " (" + sci(t32.mean[c]) + " vs " + sci(t64.mean[c]) + ")";
      }
    }
    v.require(ordered, b.name + " f32 > f64 per column" + order);
  }
  return v;
}

Verdict oracle_equivalence() {
  Verdict v;
  for (const auto& b : bundles()) {
    const auto t0 = Clock::now();
    const auto sols = b.model->batch_forward(b.thetas);
    std::size_t compared = 0, degenerate = 0, mismatched = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < b.thetas.size(); ++i) {
      const auto ref = brute_force_solve(b.model->problem(), b.thetas[i]);
      if (ref.degenerate()) {
        ++degenerate;
        continue;
      }
      ++compared;
      const double d = std::max({testing::rel_diff(sols[i].x, ref.solution.x),
                                 testing::rel_diff(sols[i].lambda, ref.solution.lambda),
                                 testing::rel_diff(sols[i].mu, ref.solution.mu)});
      worst = std::max(worst, d);
      if (d > 1e-8) ++mismatched;
    }
    const double secs = b.sample_seconds + since(t0);
    v.require(mismatched == 0, b.name + " compared " + std::to_string(compared) + " (degenerate " +
                                   std::to_string(degenerate) + "), mismatched " + std::to_string(mismatched) +
                                   ", worst rel " + sci(worst));
    v.require(secs < 120.0, b.name + " " + sci(secs) + " s");
  }
  return v;
}

Verdict continuity() {
  Verdict v;
  const std::vector<double> eps{1e-4, 1e-6};
  const auto rep = facet_continuity(testing::two_d_model(), eps);
  std::size_t failed = 0;
  double ratio = 0.0;
  for (const auto& c : rep.checks) {
    if (!c.pass()) ++failed;
    ratio = std::max(ratio, c.jump / c.bound);
  }
  v.require(!rep.checks.empty() && failed == 0,
            std::to_string(rep.checks.size()) + " facet probes, failed " + std::to_string(failed) +
                ", max jump/bound " + sci(ratio));
  v.require(rep.unlocated.empty(), "unlocated pairs " + std::to_string(rep.unlocated.size()));
  return v;
}

Verdict transition_structure() {
  Verdict v;
  for (const auto& run : discovery_runs()) {
    const auto& r = run.outcome.result;
    std::size_t bad = 0, multi = 0;
    for (const auto& c : r.changes)
      if (c.distance != 1) ++bad;
    for (const auto& w : r.warnings)
      if (w.kind == "multi_constraint_transition") ++multi;
    v.require(bad == 0, run.name + ": " + std::to_string(r.changes.size()) + " changes, " + std::to_string(bad) +
                            " not single-index, " + std::to_string(multi) + " resolved by halving");
  }
  return v;
}

Verdict line_limit_pattern() {
  Verdict v;
  const auto cfg = cli::load_config(testing::data_path("six_bus.config.json"));
  const Dcopf& dc = testing::six_bus_lines();
  const ClosedFormModel& model = testing::six_bus_lines_model();
  const MpQpProblem& p = model.problem();
  constexpr std::size_t kPerScale = 100;
  const auto pts = scaled_dataset(dc, cfg.scales, kPerScale, 21);

  std::vector<std::size_t> feasible(cfg.scales.size(), 0), undiscovered(cfg.scales.size(), 0);
  std::vector<ParameterPoint> inside;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!pts[i].feasible.value_or(false)) continue;
    const std::size_t s = i / kPerScale;
    ++feasible[s];
    if (model.find_region(brute_force_solve(p, pts[i].theta).active_set))
      inside.push_back(pts[i].theta);
    else
      ++undiscovered[s];
  }
  bool monotone = true;
  std::string counts, missing;
  for (std::size_t s = 0; s < feasible.size(); ++s) {
    if (s && feasible[s] > feasible[s - 1]) monotone = false;
    counts += (s ? "," : "") + std::to_string(feasible[s]);
    if (undiscovered[s]) missing += " k=" + sci(cfg.scales[s]) + ":" + std::to_string(undiscovered[s]);
  }
  v.require(monotone, "feasible counts " + counts);
  const auto t = table_at(model, Precision::f64, inside);
  v.require(!inside.empty() && max_of(t.mean) <= 1e-12,
            std::to_string(inside.size()) + " points in " + std::to_string(model.size()) + " regions, mean max " +
                worst_column(t, t.mean));
  v.detail << "; undiscovered" << (missing.empty() ? " none" : missing);
  return v;
}

Verdict throughput() {
  Verdict v;
  const Dcopf dc = build_dcopf(synthetic_case(50, 11, 8));
  const auto& p = dc.problem;
  // Sweeps along the demand ray from base load up to 1.8x and down to 0.5x;
  // generator limits bind one after another.
  const Vector base_load = dc.power_case.base_demand();
  auto at_scale = [&](double k) {
    Vector d(base_load);
    for (double& v : d) v *= k;
    return theta_for_demand(dc, d);
  };
  const auto base = at_scale(1.0);
  constexpr std::size_t kSteps = 80;
  SearchPattern pattern;
  for (double end : {1.8, 0.5}) {
    const Vector from = base.stacked(), to = at_scale(end).stacked();
    Direction dir{base, Vector(from.size()), kSteps};
    for (std::size_t i = 0; i < from.size(); ++i) dir.step[i] = (to[i] - from[i]) / static_cast<double>(kSteps - 1);
    pattern.directions.push_back(std::move(dir));
  }
  const auto found = discover(p, base, pattern);
  std::vector<ParameterPoint> thetas;
  for (const auto& d : local_perturbation_dataset(dc, kSample, 31, false)) thetas.push_back(d.theta);
  const auto t0 = Clock::now();
  const auto sols = found.model.batch_forward(thetas);
  const double secs = since(t0);
  v.require(sols.size() == kSample && secs < 1.0, "n=" + std::to_string(p->n()) + ", " +
                                                      std::to_string(found.model.size()) + " regions, 1000 θ in " +
                                                      sci(secs) + " s");

  const auto dir = testing::scratch_dir("acceptance-bench");
  write_text_file(dir / "model.json", serialize_model(testing::two_d_model()));
  std::ostringstream text;
  const auto rep = cli::cmd_bench(cli::load_config(testing::data_path("2d_example.config.json")),
                                  dir / "model.json", kSample, text);
  std::filesystem::remove_all(dir);
  v.require(rep.speedup && *rep.speedup > 100.0,
            "2d bench speedup " + (rep.speedup ? sci(*rep.speedup) : std::string("n/a")) + "x");
  return v;
}

Verdict renewable_planning() {
  Verdict v;
  const auto cfg = cli::load_config(testing::data_path("six_bus.config.json"));
  const ClosedFormModel& model = testing::six_bus_lines_model();
  PlanningOptions opts;
  opts.renewable_buses = cfg.renewable_buses;
  opts.unit_mw = cfg.unit_mw;
  opts.seed = 41;
  std::vector<ParameterPoint> thetas;
  for (const auto& d : renewable_planning_dataset(testing::six_bus_lines(), opts)) thetas.push_back(d.theta);

  const auto t0 = Clock::now();
  const auto sols = model.batch_forward(thetas);
  const double secs = since(t0);
  v.require(thetas.size() == 12000 && secs < 5.0, std::to_string(thetas.size()) + " θ in " + sci(secs) + " s");

  std::vector<ParameterPoint> in_t;
  std::vector<PrimalDualSolution> in_s;
  std::size_t infeasible = 0, undiscovered = 0;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    try {
      if (model.find_region(brute_force_solve(model.problem(), thetas[i]).active_set)) {
        in_t.push_back(thetas[i]);
        in_s.push_back(sols[i]);
      } else {
        ++undiscovered;
      }
    } catch (const Infeasible&) {
      ++infeasible;
    }
  }
  const auto t = kkt_table(model.problem(), in_s, in_t);
  v.require(!in_t.empty() && max_of(t.mean) <= 1e-18,
            std::to_string(in_t.size()) + " in discovered regions (undiscovered " + std::to_string(undiscovered) +
                ", infeasible " + std::to_string(infeasible) + "), mean max " + worst_column(t, t.mean));
  return v;
}

Verdict serialization() {
  Verdict v;
  std::mt19937_64 rng(51);
  std::size_t exact = 0, digest = 0, truncated = 0;
  constexpr std::size_t kModels = 100;
  for (std::size_t i = 0; i < kModels; ++i) {
    const ClosedFormModel m = testing::random_model(rng);
    const std::string bytes = serialize_model(m);
    const ClosedFormModel back = deserialize_model(bytes, m.shared_problem());
    const ParameterPoint& w = m.regions().back().witness_theta;
    const auto a = m.forward(w), b = back.forward(w);
    if (serialize_model(back) == bytes && back.W0().storage() == m.W0().storage() &&
        back.base_inverse().storage() == m.base_inverse().storage() && a.x == b.x && a.mu == b.mu &&
        back.precision() == m.precision())
      ++exact;
    try {
      (void)deserialize_model(bytes, testing::random_problem(rng));
    } catch (const DigestMismatch&) {
      ++digest;
    } catch (const Error&) {
    }
    try {
      (void)deserialize_model(std::string_view(bytes).substr(0, bytes.size() * (i % 9 + 1) / 10), m.shared_problem());
    } catch (const MalformedModel&) {
      ++truncated;
    } catch (const Error&) {
    }
  }
  v.require(exact == kModels, "bit-exact " + std::to_string(exact) + "/100");
  v.require(digest == kModels, "digest mismatch rejected " + std::to_string(digest) + "/100");
  v.require(truncated == kModels, "truncation rejected " + std::to_string(truncated) + "/100");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  bool exit_status = true;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--no-exit-status") == 0) exit_status = false;

  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"2D region recovery", region_recovery},
      {"64-bit exactness", exactness64},
      {"32-bit degradation", degradation32},
      {"oracle equivalence", oracle_equivalence},
      {"continuity", continuity},
      {"single-index transitions", transition_structure},
      {"line-limit pattern", line_limit_pattern},
      {"batch throughput", throughput},
      {"renewable planning", renewable_planning},
      {"serialization", serialization},
  };
  int failed = 0, evaluated = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.require(false, std::string("error: ") + e.what());
    }
    ++evaluated;
    if (!v.pass) ++failed;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << i + 1 << ". " << criteria[i].first << "  ("
              << sci(since(t0)) << " s)  " << v.detail.str() << std::endl;
  }
  std::cout << "criteria evaluated: " << evaluated << "/" << criteria.size() << ", failed: " << failed << '\n';
  return exit_status ? failed : 0;
}
