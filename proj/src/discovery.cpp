#include "cfqp/discovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace cfqp {

std::string_view to_string(TransitionKind k) noexcept { return k == TransitionKind::Add ? "add" : "drop"; }

double default_tol(Precision p) noexcept { return p == Precision::f32 ? 1e-4 : 1e-10; }

double region_kkt(const MpQpProblem& problem, const RegionSlopes& slopes, const ParameterPoint& theta) {
  return kkt_report(problem, evaluate_region(problem, slopes, theta), theta).scalar;
}

namespace {

double primal_scale(const MpQpProblem& p, const PrimalDualSolution& sol, const ParameterPoint& theta,
                    std::size_t k) {
  double row = 0.0;
  for (double a : p.A_C().row(k)) row = std::max(row, std::abs(a));
  return std::max({1.0, row * norm_inf<double>(sol.x), std::abs(p.b_C()[k] + theta.theta_C[k])});
}

}  // namespace

double region_margin(const MpQpProblem& problem, const RegionSlopes& slopes, const ParameterPoint& theta) {
  const auto sol = evaluate_region(problem, slopes, theta);
  const auto g = lagrangian_gradients(problem, sol, theta);
  const double dual = std::max(1.0, norm_inf<double>(sol.mu));
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < problem.m2(); ++k) {
    const double m = slopes.active_set.contains(k) ? sol.mu[k] / dual
                                                   : -g.dL_dmu[k] / primal_scale(problem, sol, theta, k);
    margin = std::min(margin, m);
  }
  return margin;
}

Transition identify_transition(const MpQpProblem& problem, const RegionEntry& current, const ParameterPoint& theta) {
  const auto sol = evaluate_region(problem, current.slopes, theta);
  const auto g = lagrangian_gradients(problem, sol, theta);
  constexpr double kFloor = 1e-12;

  std::optional<Transition> add, drop;
  for (std::size_t k = 0; k < problem.m2(); ++k) {
    if (current.active_set.contains(k)) continue;
    const double r = g.dL_dmu[k] / primal_scale(problem, sol, theta, k);
    if (r > kFloor && (!add || r > add->magnitude)) add = Transition{TransitionKind::Add, k, r};
  }
  const double dual = std::max(1.0, norm_inf<double>(sol.mu));
  for (std::size_t k : current.active_set.indices()) {
    const double r = -sol.mu[k] / dual;
    if (r > kFloor && (!drop || r > drop->magnitude)) drop = Transition{TransitionKind::Drop, k, r};
  }
  if (add && drop) return add->magnitude >= drop->magnitude ? *add : *drop;
  if (add) return *add;
  if (drop) return *drop;
  throw UnresolvableTransition("no violated inequality and no negative dual in region " +
                               current.active_set.to_string());
}

ActiveSet apply(const Transition& t, const ActiveSet& b, std::size_t m2) {
  return t.kind == TransitionKind::Add ? b.with(t.constraint, m2) : b.without(t.constraint, m2);
}

namespace {

ParameterPoint lerp(const MpQpProblem& p, const ParameterPoint& a, const ParameterPoint& b, double w) {
  const Vector va = a.stacked(), vb = b.stacked();
  Vector v(va.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = va[i] + w * (vb[i] - va[i]);
  return ParameterPoint::from_stacked(p, v);
}

ParameterPoint point_on(const MpQpProblem& p, const Direction& d, std::size_t i) {
  Vector v = d.start.stacked();
  for (std::size_t c = 0; c < v.size(); ++c) v[c] += static_cast<double>(i) * d.step[c];
  return ParameterPoint::from_stacked(p, v);
}

struct CompositionConflict {};

class Discoverer {
 public:
  Discoverer(std::shared_ptr<const MpQpProblem> problem, const DiscoveryOptions& opts)
      : p_(*problem), problem_(std::move(problem)), opts_(opts) {
    tol_ = opts.tol > 0.0 ? opts.tol : default_tol(opts.precision);
  }

  DiscoveryResult run(const ParameterPoint& theta0, const SearchPattern& pattern) {
    OracleResult start;
    try {
      start = brute_force_solve(p_, theta0);
    } catch (const Infeasible&) {
      throw InfeasibleStart("theta0 is infeasible");
    }
    out_.model = init_model(problem_, start.active_set, theta0, opts_.precision);
    out_.root_degenerate = start.degenerate();
    best_margin_.push_back(region_margin(p_, out_.model.region(0).slopes, theta0));
    certified_.push_back(theta0);
    emit({{"event", "init"}, {"region", 0}, {"active_set", start.active_set.one_based()},
          {"degenerate", start.degenerate()}, {"tol", tol_}});
    if (start.degenerate())
      warn("weakly_active_start", 0, 0, "oracle reports weakly active constraints at theta0");

    for (std::size_t di = 0; di < pattern.directions.size(); ++di) walk(di, pattern.directions[di], theta0);

    for (std::size_t id = 0; id < out_.model.size(); ++id)
      if (best_point_.contains(id)) out_.model = out_.model.with_witness(id, best_point_.at(id));
    emit({{"event", "done"}, {"regions", out_.model.size()}, {"points", out_.points_visited},
          {"unresolved", out_.points_unresolved},
          {"unreached", out_.points_unreached}});
    return std::move(out_);
  }

 private:
  bool law_valid(std::size_t id, const ParameterPoint& theta) const {
    return region_kkt(p_, out_.model.region(id).slopes, theta) <= tol_;
  }

  std::optional<std::size_t> locate(const ParameterPoint& theta, std::size_t prefer) const {
    if (law_valid(prefer, theta)) return prefer;
    for (std::size_t id = 0; id < out_.model.size(); ++id)
      if (id != prefer && law_valid(id, theta)) return id;
    return std::nullopt;
  }

  void emit(json e) {
    if (opts_.on_event) opts_.on_event(e);
    out_.events.push_back(std::move(e));
  }

  void warn(std::string kind, std::size_t di, std::size_t pi, std::string detail) {
    emit({{"event", "warning"}, {"kind", kind}, {"direction", di}, {"point", pi}, {"detail", detail}});
    out_.warnings.push_back({std::move(kind), di, pi, std::move(detail)});
  }

  void move_to(std::size_t to, std::size_t di, std::size_t pi, bool discovered) {
    if (to == current_) return;
    const auto& a = out_.model.region(current_).active_set;
    const auto& b = out_.model.region(to).active_set;
    RegionChange c{di, pi, current_, to, a.distance(b), discovered};
    json e = to_json(c);
    e["event"] = "region_change";
    emit(e);
    if (c.distance != 1)
      warn("multi_constraint_transition", di, pi, a.to_string() + " -> " + b.to_string());
    out_.changes.push_back(c);
    current_ = to;
  }

  void remember(std::size_t id, const ParameterPoint& theta) {
    const double m = region_margin(p_, out_.model.region(id).slopes, theta);
    if (id >= best_margin_.size()) best_margin_.resize(id + 1, -std::numeric_limits<double>::infinity());
    if (m > best_margin_[id]) {
      best_margin_[id] = m;
      best_point_.insert_or_assign(id, theta);
    }
  }

  // Moves the region in force from `lo` (where its law holds) to `target`
  // one add/drop at a time, registering regions not seen before.
  void resolve(const ParameterPoint& lo_start, const ParameterPoint& target, std::size_t di, std::size_t pi) {
    ParameterPoint lo = lo_start;
    const std::size_t max_hops = 4 * p_.m2() + 8;
    for (std::size_t hop = 0; !law_valid(current_, target); ++hop) {
      if (hop == max_hops)
        throw UnresolvableTransition("transitions cycle without reaching direction " + std::to_string(di) +
                                     ", point " + std::to_string(pi));
      ParameterPoint hi = target;
      std::size_t halvings = 0;
      while (!step_once(hi, halvings, di, pi)) {
        if (halvings++ >= opts_.max_halvings)
          throw UnresolvableTransition("no single add/drop from " +
                                       out_.model.region(current_).active_set.to_string() +
                                       " satisfies the KKT conditions at direction " + std::to_string(di) +
                                       ", point " + std::to_string(pi));
        const ParameterPoint mid = lerp(p_, lo, hi, 0.5);
        (law_valid(current_, mid) ? lo : hi) = mid;
      }
      lo = hi;
    }
  }

  // Adds `next` under the first parent, current region first, that keeps the
  // network exact at theta and at every point certified so far.
  ExpandResult compose(const ActiveSet& next, const ParameterPoint& theta, std::size_t di, std::size_t pi) {
    std::vector<std::size_t> parents{current_};
    for (const auto& r : out_.model.regions())
      if (r.id != current_ && r.active_set.distance(next) == 1) parents.push_back(r.id);
    for (std::size_t parent : parents) {
      auto r = expand(out_.model, parent, next, theta);
      if (exact(r.model, theta) &&
          std::all_of(certified_.begin(), certified_.end(), [&](const ParameterPoint& t) { return exact(r.model, t); }))
        return r;
    }
    rejected_.push_back(next);
    warn("composition_conflict", di, pi,
         "no parent of " + next.to_string() + " keeps the network exact on the certified points");
    throw CompositionConflict();
  }

  bool exact(const ClosedFormModel& model, const ParameterPoint& theta) const {
    return kkt_report(p_, model.forward(theta), theta).scalar <= tol_;
  }

  // Tries the Remark-1 transition out of the current region at theta.
  bool step_once(const ParameterPoint& theta, std::size_t halvings, std::size_t di, std::size_t pi) {
    const RegionEntry& cur = out_.model.region(current_);
    Transition t;
    try {
      t = identify_transition(p_, cur, theta);
    } catch (const UnresolvableTransition&) {
      return false;
    }
    const ActiveSet next = apply(t, cur.active_set, p_.m2());
    if (std::find(rejected_.begin(), rejected_.end(), next) != rejected_.end()) throw CompositionConflict();
    if (auto known = out_.model.find_region(next)) {
      if (!law_valid(*known, theta)) return false;
      move_to(*known, di, pi, false);
      return true;
    }
    try {
      if (region_kkt(p_, region_slopes(p_, next), theta) > tol_) return false;
    } catch (const SingularActiveJacobian&) {
      return false;
    }
    const auto r = compose(next, theta, di, pi);
    const std::size_t parent = *r.model.region(r.region_id).parent_id;
    out_.model = std::move(r.model);
    emit({{"event", "transition"}, {"direction", di}, {"point", pi}, {"kind", to_string(t.kind)},
          {"constraint", t.constraint + 1}, {"from", parent}, {"to", r.region_id},
          {"active_set", next.one_based()}, {"halvings", halvings},
          {"direction_sign", out_.model.direction()[r.region_id]}});
    move_to(r.region_id, di, pi, true);
    remember(r.region_id, theta);
    return true;
  }

  void walk(std::size_t di, const Direction& dir, const ParameterPoint& theta0) {
    emit({{"event", "direction"}, {"direction", di}, {"steps", dir.max_steps}});
    std::optional<ParameterPoint> last;
    for (std::size_t pi = 0; pi < dir.max_steps; ++pi) {
      const ParameterPoint theta = point_on(p_, dir, pi);
      if (opts_.feasible && !opts_.feasible(theta)) {
        emit({{"event", "direction_end"}, {"direction", di}, {"point", pi}, {"reason", "infeasible"}});
        return;
      }
      ++out_.points_visited;
      const double before = kkt_report(p_, out_.model.forward(theta), theta).scalar;
      if (before > tol_)
        emit({{"event", "violation"}, {"direction", di}, {"point", pi}, {"kkt", before}, {"region", current_}});

      try {
        if (!last) {
          if (auto id = locate(theta, current_)) {
            current_ = *id;
            emit({{"event", "located"}, {"direction", di}, {"point", pi}, {"region", current_}});
          } else {
            // The sweep starts outside every known region: bridge from theta0.
            current_ = locate(theta0, 0).value_or(0);
            resolve(theta0, theta, di, pi);
          }
        } else if (!law_valid(current_, theta)) {
          resolve(*last, theta, di, pi);
        }
      } catch (const UnresolvableTransition& e) {
        // Points past this crossing are unreachable by single add/drop steps.
        out_.points_unreached += dir.max_steps - pi;
        warn("unresolvable_transition", di, pi, e.what());
        emit({{"event", "direction_end"}, {"direction", di}, {"point", pi}, {"reason", "unresolvable"}});
        return;
      } catch (const CompositionConflict&) {
        out_.points_unreached += dir.max_steps - pi;
        emit({{"event", "direction_end"}, {"direction", di}, {"point", pi}, {"reason", "composition_conflict"}});
        return;
      }

      const double after = before <= tol_ ? before : kkt_report(p_, out_.model.forward(theta), theta).scalar;
      if (after > tol_) {
        ++out_.points_unresolved;
        warn("composition_failure", di, pi,
             "law of region " + std::to_string(current_) + " holds but the network gives KKT " +
                 std::to_string(after));
      } else {
        remember(current_, theta);
        certified_.push_back(theta);
      }
      last = theta;
    }
    emit({{"event", "direction_end"}, {"direction", di}, {"point", dir.max_steps}, {"reason", "steps"}});
  }

  const MpQpProblem& p_;
  std::shared_ptr<const MpQpProblem> problem_;
  DiscoveryOptions opts_;
  double tol_ = 0.0;
  DiscoveryResult out_;
  std::size_t current_ = 0;
  std::vector<double> best_margin_;
  std::map<std::size_t, ParameterPoint> best_point_;
  std::vector<ParameterPoint> certified_;
  std::vector<ActiveSet> rejected_;
};

}  // namespace

DiscoveryResult discover(std::shared_ptr<const MpQpProblem> problem, const ParameterPoint& theta0,
                         const SearchPattern& pattern, const DiscoveryOptions& opts) {
  if (!problem) throw InvalidProblem("discover: no problem");
  if (!theta0.matches(*problem)) throw InvalidProblem("discover: theta0 dimension mismatch");
  for (const auto& d : pattern.directions)
    if (d.max_steps < 1 || d.step.size() != problem->d() || !d.start.matches(*problem))
      throw InvalidProblem("discover: malformed search direction");
  return Discoverer(std::move(problem), opts).run(theta0, pattern);
}

SearchPattern axis_sweep_pattern(const ParameterPoint& theta0, std::span<const double> extent, std::size_t steps) {
  if (steps < 2) throw InvalidProblem("axis sweep needs at least 2 steps");
  if (extent.size() != theta0.size()) throw InvalidProblem("extent length must equal the stacked dimension");
  SearchPattern pat;
  for (std::size_t a = 0; a < extent.size(); ++a) {
    if (extent[a] == 0.0) continue;
    Direction d{theta0, Vector(extent.size(), 0.0), steps};
    d.step[a] = extent[a] / static_cast<double>(steps - 1);
    pat.directions.push_back(std::move(d));
  }
  return pat;
}

SearchPattern scaled_base_pattern(const ParameterPoint& base, std::span<const double> scales,
                                  std::span<const std::size_t> axes, std::size_t steps, const ExtentFn& extent) {
  if (scales.empty()) throw InvalidProblem("scaled pattern needs at least one scale");
  if (!std::is_sorted(scales.begin(), scales.end())) throw InvalidProblem("scales must be ascending");
  if (steps < 2) throw InvalidProblem("scaled pattern needs at least 2 steps");
  SearchPattern pat;
  const Vector b = base.stacked();
  for (double k : scales) {
    Vector s(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) s[i] = k * b[i];
    ParameterPoint start{Vector(s.begin(), s.begin() + base.theta_c.size()),
                         Vector(s.begin() + base.theta_c.size(), s.begin() + base.theta_c.size() + base.theta_e.size()),
                         Vector(s.begin() + base.theta_c.size() + base.theta_e.size(), s.end())};
    for (std::size_t a : axes) {
      if (a >= b.size()) throw InvalidProblem("scaled pattern axis out of range");
      const double e = extent(start, a);
      if (e == 0.0) continue;
      Direction d{start, Vector(b.size(), 0.0), steps};
      d.step[a] = e / static_cast<double>(steps - 1);
      pat.directions.push_back(std::move(d));
    }
  }
  return pat;
}

double feasible_extent(const MpQpProblem& problem, const ParameterPoint& theta0, std::span<const double> direction,
                       double cap) {
  if (direction.size() != problem.d()) throw InvalidProblem("feasible_extent: direction length mismatch");
  if (!(cap > 0.0)) throw InvalidProblem("feasible_extent: cap must be positive");
  if (!is_feasible(problem, theta0)) throw InfeasibleStart("feasible_extent: start point is infeasible");
  const Vector t0 = theta0.stacked();
  auto at = [&](double t) {
    Vector v(t0);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += t * direction[i];
    return is_feasible(problem, ParameterPoint::from_stacked(problem, v));
  };
  if (at(cap)) return cap;
  double lo = 0.0, hi = cap;
  while (hi - lo > 1e-6 * std::max(hi, 1e-300)) {
    const double mid = 0.5 * (lo + hi);
    (at(mid) ? lo : hi) = mid;
  }
  return lo;
}

ExtentFn oracle_extent(const MpQpProblem& problem, double cap, double shrink) {
  return [&problem, cap, shrink](const ParameterPoint& start, std::size_t axis) {
    Vector dir(problem.d(), 0.0);
    dir[axis] = 1.0;
    if (!is_feasible(problem, start)) return 0.0;
    return shrink * feasible_extent(problem, start, dir, cap);
  };
}

ContinuityReport facet_continuity(const ClosedFormModel& model, std::span<const double> eps, double tol) {
  const MpQpProblem& p = model.problem();
  ContinuityReport out;
  auto quantity = [&](const RegionSlopes& law, std::size_t row, bool active, const ParameterPoint& t) {
    const auto sol = evaluate_region(p, law, t);
    return active ? sol.mu[row] : lagrangian_gradients(p, sol, t).dL_dmu[row];
  };
  for (const auto& a : model.regions())
    for (const auto& b : model.regions()) {
      if (b.id <= a.id || a.active_set.distance(b.active_set) != 1) continue;
      std::size_t row = 0;
      for (std::size_t k = 0; k < p.m2(); ++k)
        if (a.active_set.contains(k) != b.active_set.contains(k)) row = k;
      const bool active_in_a = a.active_set.contains(row);
      const Vector ta = a.witness_theta.stacked(), tb = b.witness_theta.stacked();
      // Both quantities are affine along the segment.
      const double qa = quantity(a.slopes, row, active_in_a, a.witness_theta);
      const double qb = quantity(a.slopes, row, active_in_a, b.witness_theta);
      if (qa == qb) {
        out.unlocated.emplace_back(a.id, b.id);
        continue;
      }
      const double w = qa / (qa - qb);
      Vector f(ta.size()), dir(ta.size());
      for (std::size_t i = 0; i < f.size(); ++i) {
        f[i] = ta[i] + w * (tb[i] - ta[i]);
        dir[i] = tb[i] - ta[i];
      }
      const ParameterPoint facet = ParameterPoint::from_stacked(p, f);
      if (w <= 0.0 || w >= 1.0 || region_kkt(p, a.slopes, facet) > tol || region_kkt(p, b.slopes, facet) > tol) {
        out.unlocated.emplace_back(a.id, b.id);
        continue;
      }
      const double dn = norm_inf<double>(dir);
      for (double& v : dir) v /= dn;
      double slope = 0.0;
      for (const Matrix* g : {&a.slopes.grad_x, &b.slopes.grad_x})
        for (std::size_t r = 0; r < g->rows(); ++r) {
          double row_sum = 0.0;
          for (double v : g->row(r)) row_sum += std::abs(v);
          slope = std::max(slope, row_sum);
        }
      const double scale = std::max(1.0, norm_inf<double>(model.forward(facet).x));
      for (double e : eps) {
        Vector lo(f), hi(f);
        for (std::size_t i = 0; i < f.size(); ++i) {
          lo[i] -= e * dir[i];
          hi[i] += e * dir[i];
        }
        const Vector xl = model.forward(ParameterPoint::from_stacked(p, lo)).x;
        const Vector xh = model.forward(ParameterPoint::from_stacked(p, hi)).x;
        double jump = 0.0;
        for (std::size_t i = 0; i < xl.size(); ++i) jump = std::max(jump, std::abs(xh[i] - xl[i]));
        const double slack = model.precision() == Precision::f32 ? 1e-5 : 1e-12;
        out.checks.push_back({a.id, b.id, facet, e, jump, 2.0 * e * slope + slack * scale});
      }
    }
  return out;
}

json to_json(const RegionChange& c) {
  return {{"direction", c.direction}, {"point", c.point}, {"from", c.from}, {"to", c.to},
          {"distance", c.distance}, {"discovered", c.discovered}};
}

}  // namespace cfqp
