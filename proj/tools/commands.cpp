#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "cfqp/errors.hpp"
#include "cfqp/kernels.hpp"
#include "cfqp/oracle.hpp"

namespace cfqp::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Precision config_precision(int bits) {
  if (bits == 32) return Precision::f32;
  if (bits == 64) return Precision::f64;
  throw ParseError("precision must be 32 or 64, got " + std::to_string(bits));
}

std::string sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

bool oracle_available(const MpQpProblem& p) { return p.m2() <= OracleOptions::kMaxInequalities; }

std::size_t axis_index(const MpQpProblem& p, const std::string& name) {
  const auto names = theta_column_names(p);
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ParseError("unknown parameter axis '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

}  // namespace

Config load_config(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  if (!j.is_object()) throw ParseError(path.string() + ": config must be a JSON object");
  auto rel = [&](const std::string& s) {
    const std::filesystem::path q(s);
    return q.is_absolute() ? q : path.parent_path() / q;
  };
  Config c;
  c.source = path;
  try {
    if (j.contains("problem") == j.contains("case"))
      throw ParseError(path.string() + ": config needs exactly one of \"problem\" or \"case\"");
    if (j.contains("problem")) {
      c.problem = std::make_shared<const MpQpProblem>(load_problem(rel(j.at("problem").get<std::string>())));
    } else {
      const PowerCase pc = load_case(rel(j.at("case").get<std::string>()));
      c.dcopf = j.value("line_limits", false) ? build_dcopf_with_lines(pc, case_limits(pc)) : build_dcopf(pc);
      c.problem = c.dcopf->problem;
    }
    c.theta0 = j.contains("theta0") ? parameter_from_json(*c.problem, j.at("theta0")) : ParameterPoint::zeros(*c.problem);
    if (j.contains("pattern")) c.pattern = j.at("pattern");
    if (j.contains("precision")) c.precision = config_precision(j.at("precision").get<int>());
    c.tol = j.value("tol", c.tol);
    c.seed = j.value("seed", c.seed);
    c.steps = j.value("steps", c.steps);
    if (j.contains("scales")) c.scales = j.at("scales").get<std::vector<double>>();
    if (j.contains("renewable_buses")) c.renewable_buses = j.at("renewable_buses").get<std::vector<int>>();
    c.unit_mw = j.value("unit_mw", c.unit_mw);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return c;
}

SearchPattern build_pattern(const Config& cfg) {
  const MpQpProblem& p = *cfg.problem;
  const std::string kind = cfg.pattern.value("kind", cfg.dcopf ? "demand_scaled" : "axis");
  const double shrink = cfg.pattern.value("shrink", 0.999);
  if (kind == "demand_scaled") {
    if (!cfg.dcopf) throw ParseError("pattern 'demand_scaled' needs a power case");
    return demand_scaled_pattern(*cfg.dcopf, cfg.scales, cfg.steps, shrink);
  }
  if (kind != "axis") throw ParseError("unknown pattern kind '" + kind + "'");

  std::vector<std::size_t> axes;
  if (cfg.pattern.contains("axes")) {
    for (const auto& a : cfg.pattern.at("axes")) axes.push_back(axis_index(p, a.get<std::string>()));
  } else {
    for (std::size_t k = 0; k < p.m2(); ++k) axes.push_back(p.n() + p.m1() + k);
  }
  ExtentFn extent;
  if (cfg.pattern.contains("extent")) {
    const double e = cfg.pattern.at("extent").get<double>();
    extent = [e](const ParameterPoint&, std::size_t) { return e; };
  } else {
    if (!oracle_available(p)) throw ParseError("pattern needs an explicit \"extent\" when m2 exceeds the oracle guard");
    extent = oracle_extent(p, cfg.pattern.value("extent_cap", 1e4), shrink);
  }
  return scaled_base_pattern(cfg.theta0, cfg.scales, axes, cfg.steps, extent);
}

DiscoverOutcome cmd_discover(const Config& cfg, const std::filesystem::path& model_out,
                             const std::filesystem::path& log_out, std::ostream& summary) {
  const auto t0 = Clock::now();
  std::ofstream log;
  if (!log_out.empty()) {
    log.open(log_out);
    if (!log) throw ParseError("cannot write " + log_out.string());
  }
  DiscoveryOptions opts;
  opts.precision = cfg.precision.value_or(Precision::f64);
  opts.tol = cfg.tol;
  const auto problem = cfg.problem;
  if (oracle_available(*problem))
    opts.feasible = [problem](const ParameterPoint& t) { return is_feasible(*problem, t); };
  if (log.is_open()) opts.on_event = [&log](const json& e) { log << e.dump() << '\n'; };

  DiscoverOutcome out{discover(problem, cfg.theta0, build_pattern(cfg), opts), 0.0};
  if (!model_out.empty()) write_text_file(model_out, serialize_model(out.result.model));
  out.seconds = seconds_since(t0);

  const auto& r = out.result;
  summary << "regions: " << r.model.size() << '\n';
  for (const auto& reg : r.model.regions()) {
    summary << "  " << reg.id << "  " << reg.active_set.to_string();
    if (reg.parent_id) summary << "  (from " << *reg.parent_id << ", sign " << r.model.direction()[reg.id] << ')';
    summary << '\n';
  }
  std::map<std::string, std::size_t> kinds;
  for (const auto& w : r.warnings) ++kinds[w.kind];
  summary << "points visited: " << r.points_visited << ", unresolved: " << r.points_unresolved
          << ", unreached: " << r.points_unreached << '\n';
  summary << "warnings: " << r.warnings.size();
  for (const auto& [k, n] : kinds) summary << "  " << k << "=" << n;
  summary << '\n';
  if (r.root_degenerate) summary << "note: theta0 has weakly active constraints\n";
  summary << "wall time: " << out.seconds << " s\n";
  return out;
}

ClosedFormModel load_model(const Config& cfg, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedModel("cannot open model file " + path.string());
  std::ostringstream bytes;
  bytes << in.rdbuf();
  ClosedFormModel m = deserialize_model(bytes.str(), cfg.problem);
  return cfg.precision ? m.with_precision(*cfg.precision) : m;
}

double cmd_predict(const Config& cfg, const std::filesystem::path& model_path,
                   const std::filesystem::path& thetas_path, const std::filesystem::path& out, std::ostream& info) {
  const ClosedFormModel model = load_model(cfg, model_path);
  const MpQpProblem& p = *cfg.problem;
  const auto data = read_dataset(p, thetas_path);
  std::vector<ParameterPoint> thetas;
  thetas.reserve(data.size());
  for (const auto& d : data) thetas.push_back(d.theta);

  const auto t0 = Clock::now();
  const auto sols = model.batch_forward(thetas);
  const double wall = seconds_since(t0);

  std::ostringstream os;
  os.precision(17);
  os << "index,objective";
  for (const auto& c : kkt_columns(p, kkt_report(p, thetas.empty() ? PrimalDualSolution{Vector(p.n()), Vector(p.m1()), Vector(p.m2()), 0.0}
                                                                : sols.front(),
                                                 thetas.empty() ? ParameterPoint::zeros(p) : thetas.front())))
    os << ',' << c.name;
  for (std::size_t i = 0; i < p.n(); ++i) os << ",x" << i;
  for (std::size_t i = 0; i < p.m1(); ++i) os << ",lambda" << i;
  for (std::size_t i = 0; i < p.m2(); ++i) os << ",mu" << i;
  os << '\n';
  for (std::size_t i = 0; i < sols.size(); ++i) {
    const auto& s = sols[i];
    os << i << ',' << s.objective;
    for (const auto& c : kkt_columns(p, kkt_report(p, s, thetas[i]))) os << ',' << c.mean;
    for (double v : s.x) os << ',' << v;
    for (double v : s.lambda) os << ',' << v;
    for (double v : s.mu) os << ',' << v;
    os << '\n';
  }
  if (out.empty()) {
    info << os.str();
  } else {
    write_text_file(out, os.str());
  }
  info << "predicted " << sols.size() << " points at " << bits(model.precision()) << "-bit in " << wall
       << " s (batch wall time)\n";
  return wall;
}

KktReportOutcome cmd_kkt_report(const Config& cfg, const std::filesystem::path& model_path,
                                const std::filesystem::path& dataset_path, const std::filesystem::path& out,
                                const KktReportOptions& opts, std::ostream& text) {
  const ClosedFormModel model = load_model(cfg, model_path);
  const MpQpProblem& p = *cfg.problem;
  const auto data = read_dataset(p, dataset_path);
  KktReportOutcome res;
  res.total = data.size();

  const bool oracle = oracle_available(p);
  if (opts.discovered_only && !oracle)
    text << "notice: m2 = " << p.m2() << " exceeds the oracle guard; region membership is not checked\n";
  std::vector<ParameterPoint> kept;
  std::size_t unflagged = 0;
  for (const auto& d : data) {
    bool feasible = true;
    if (d.feasible) {
      feasible = *d.feasible;
    } else if (oracle) {
      feasible = is_feasible(p, d.theta);
    } else {
      ++unflagged;
    }
    if (!feasible) {
      ++res.infeasible;
      continue;
    }
    if (opts.discovered_only && oracle && !model.find_region(brute_force_solve(p, d.theta).active_set)) {
      ++res.undiscovered;
      continue;
    }
    kept.push_back(d.theta);
  }
  res.evaluated = kept.size();

  if (data.empty()) text << "warning: dataset " << dataset_path.string() << " is empty\n";
  text << "points: " << res.total << ", infeasible excluded: " << res.infeasible;
  if (opts.discovered_only) text << ", outside discovered regions: " << res.undiscovered;
  if (unflagged) text << ", without feasibility flag: " << unflagged;
  text << ", evaluated: " << res.evaluated << '\n';

  std::string csv;
  for (Precision mode : opts.modes) {
    const ClosedFormModel m = model.with_precision(mode);
    const auto sols = m.batch_forward(kept);
    KktTable t = kkt_table(p, sols, kept);
    const std::string label = "CF" + std::to_string(bits(mode));
    text << format_table(t, label);
    if (csv.empty()) csv = table_csv_header(t);
    csv += table_csv_rows(t, label);
    res.tables.emplace_back(mode, std::move(t));
  }
  if (!out.empty()) write_text_file(out, csv);
  return res;
}

std::vector<DataPoint> cmd_gen_data(const Config& cfg, const std::string& kind, std::size_t count,
                                    const std::filesystem::path& out, std::ostream& info) {
  if (!cfg.dcopf) throw ParseError("gen-data needs a config that names a power case");
  const Dcopf& m = *cfg.dcopf;
  std::vector<DataPoint> pts;
  if (kind == "local") {
    pts = local_perturbation_dataset(m, count, cfg.seed);
  } else if (kind == "extreme") {
    pts = extreme_dataset(m, cfg.steps);
  } else if (kind == "scaled") {
    pts = scaled_dataset(m, cfg.scales, count, cfg.seed);
  } else if (kind == "planning") {
    PlanningOptions o;
    o.samples = count;
    o.seed = cfg.seed;
    o.unit_mw = cfg.unit_mw;
    o.renewable_buses = cfg.renewable_buses;
    pts = renewable_planning_dataset(m, o);
  } else {
    throw ParseError("unknown dataset kind '" + kind + "' (local, extreme, scaled, planning)");
  }
  if (out.extension() == ".csv") {
    write_dataset_csv(pts, *m.problem, out);
  } else {
    write_dataset_jsonl(pts, out);
  }
  std::map<double, std::pair<std::size_t, std::size_t>> by_scale;
  for (const auto& d : pts) {
    auto& [n, ok] = by_scale[d.scale];
    ++n;
    if (d.feasible.value_or(true)) ++ok;
  }
  info << "wrote " << pts.size() << " points to " << out.string() << '\n';
  if (kind == "scaled")
    for (const auto& [k, c] : by_scale) info << "  k=" << k << "  feasible " << c.second << " of " << c.first << '\n';
  return pts;
}

std::vector<ParameterPoint> bench_thetas(const Config& cfg, const ClosedFormModel& model, std::size_t count) {
  std::vector<ParameterPoint> thetas;
  if (cfg.dcopf) {
    for (auto& d : local_perturbation_dataset(*cfg.dcopf, count, cfg.seed, false)) thetas.push_back(std::move(d.theta));
    return thetas;
  }
  const MpQpProblem& p = *cfg.problem;
  std::vector<Vector> anchors;
  for (const auto& r : model.regions()) anchors.push_back(r.witness_theta.stacked());
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = engine_for(cfg.seed, 4, i);
    std::exponential_distribution<double> w(1.0);
    Vector v(p.d(), 0.0);
    double total = 0.0;
    for (const auto& a : anchors) {
      const double wi = w(rng);
      total += wi;
      for (std::size_t c = 0; c < v.size(); ++c) v[c] += wi * a[c];
    }
    for (double& x : v) x /= total;
    thetas.push_back(ParameterPoint::from_stacked(p, v));
  }
  return thetas;
}

BenchReport cmd_bench(const Config& cfg, const std::filesystem::path& model_path, std::size_t count,
                      std::ostream& text) {
  if (count < 1) throw InvalidProblem("bench count must be at least 1");
  const ClosedFormModel model = load_model(cfg, model_path);
  const MpQpProblem& p = *cfg.problem;
  const auto thetas = bench_thetas(cfg, model, count);
  constexpr int kRepeats = 5;
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };

  BenchReport rep;
  rep.count = count;
  std::vector<double> model_times, oracle_times;
  for (int r = 0; r < kRepeats; ++r) {
    const auto t0 = Clock::now();
    const auto sols = model.batch_forward(thetas);
    model_times.push_back(seconds_since(t0));
    if (sols.size() != thetas.size()) throw InvalidProblem("batch size mismatch");
  }
  rep.model_seconds = median(model_times);

  if (oracle_available(p)) {
    for (int r = 0; r < kRepeats; ++r) {
      const auto t0 = Clock::now();
      for (const auto& t : thetas) {
        try {
          (void)brute_force_solve(p, t);
        } catch (const Infeasible&) {
        }
      }
      oracle_times.push_back(seconds_since(t0));
    }
    rep.oracle_seconds = median(oracle_times);
    constexpr double kResolution = 1e-5;
    if (count > 1 && rep.model_seconds > kResolution)
      rep.speedup = *rep.oracle_seconds / rep.model_seconds;
  } else {
    rep.notice = "m2 = " + std::to_string(p.m2()) + " exceeds the oracle guard; model timing only";
  }

  text << "bench: " << count << " points, " << bits(model.precision()) << "-bit, kernels "
       << kernels::to_string(kernels::active<double>().isa) << ", median of " << kRepeats << '\n';
  text << "  model batch:  " << sci(rep.model_seconds) << " s\n";
  if (rep.oracle_seconds) text << "  oracle total: " << sci(*rep.oracle_seconds) << " s\n";
  if (rep.speedup) {
    text << "  speedup:      " << sci(*rep.speedup) << "x\n";
  } else if (rep.oracle_seconds) {
    text << "  speedup:      n/a (model time below timer resolution)\n";
  }
  if (!rep.notice.empty()) text << "notice: " << rep.notice << '\n';
  return rep;
}

PowerCase cmd_import_case(const std::filesystem::path& in, const std::filesystem::path& out, std::ostream& info) {
  std::ifstream f(in);
  if (!f) throw ParseError("cannot open " + in.string());
  std::ostringstream text;
  text << f.rdbuf();
  PowerCase c = parse_matpower(text.str(), in.stem().string());
  c.validate();
  write_text_file(out, to_json(c).dump(2) + "\n");
  info << "imported " << c.name << ": " << c.buses.size() << " buses, " << c.generators.size() << " generators, "
       << c.lines.size() << " lines -> " << out.string() << '\n';
  return c;
}

int exit_code(ErrorKind kind) noexcept { return static_cast<int>(kind); }

}  // namespace cfqp::cli
