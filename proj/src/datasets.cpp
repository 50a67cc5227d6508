#include "cfqp/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cfqp/errors.hpp"
#include "cfqp/oracle.hpp"

namespace cfqp {

std::mt19937_64 engine_for(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

std::optional<bool> oracle_feasible(const MpQpProblem& p, const ParameterPoint& theta) {
  if (p.m2() > OracleOptions::kMaxInequalities) return std::nullopt;
  return is_feasible(p, theta);
}

namespace {

constexpr std::uint64_t kLocalStream = 1, kScaledStream = 2, kPlanningStream = 3;

DataPoint make_point(const Dcopf& m, const Vector& demand, double scale, bool check) {
  DataPoint d{theta_for_demand(m, demand), scale, std::nullopt};
  if (check) d.feasible = oracle_feasible(*m.problem, d.theta);
  return d;
}

}  // namespace

std::vector<DataPoint> local_perturbation_dataset(const Dcopf& m, std::size_t count, std::uint64_t seed,
                                                  bool check_feasibility) {
  if (count < 1) throw InvalidProblem("dataset count must be at least 1");
  const Vector base = m.power_case.base_demand();
  std::vector<DataPoint> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = engine_for(seed, kLocalStream, i);
    std::uniform_real_distribution<double> ratio(0.6, 1.4);
    Vector demand(base.size());
    for (std::size_t b = 0; b < base.size(); ++b) demand[b] = base[b] * ratio(rng);
    out.push_back(make_point(m, demand, 1.0, check_feasibility));
  }
  return out;
}

std::vector<DataPoint> extreme_dataset(const Dcopf& m, std::size_t steps, bool check_feasibility) {
  if (steps < 2) throw InvalidProblem("extreme sweep needs at least 2 steps");
  const std::size_t nb = m.power_case.buses.size();
  const double top = m.power_case.total_capacity();
  std::vector<DataPoint> out;
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t s = 0; s < steps; ++s) {
      Vector demand(nb, 0.01);
      demand[b] = top * static_cast<double>(s) / static_cast<double>(steps - 1);
      out.push_back(make_point(m, demand, 1.0, check_feasibility));
    }
  return out;
}

std::vector<DataPoint> scaled_dataset(const Dcopf& m, std::span<const double> scales, std::size_t per_scale,
                                      std::uint64_t seed, bool check_feasibility) {
  if (!std::is_sorted(scales.begin(), scales.end())) throw InvalidProblem("scales must be ascending");
  const Vector base = m.power_case.base_demand();
  std::vector<DataPoint> out;
  out.reserve(scales.size() * per_scale);
  for (std::size_t s = 0; s < scales.size(); ++s)
    for (std::size_t i = 0; i < per_scale; ++i) {
      // Same r sequence at every scale.
      auto rng = engine_for(seed, kScaledStream, i);
      const double r = std::uniform_real_distribution<double>(0.6, 1.4)(rng);
      Vector demand(base.size());
      for (std::size_t b = 0; b < base.size(); ++b) demand[b] = r * scales[s] * base[b];
      out.push_back(make_point(m, demand, scales[s], check_feasibility));
    }
  return out;
}

SearchPattern demand_scaled_pattern(const Dcopf& m, std::span<const double> scales, std::size_t steps,
                                    double shrink) {
  if (scales.empty()) throw InvalidProblem("scaled pattern needs at least one scale");
  if (!std::is_sorted(scales.begin(), scales.end())) throw InvalidProblem("scales must be ascending");
  if (steps < 2) throw InvalidProblem("scaled pattern needs at least 2 steps");
  const MpQpProblem& p = *m.problem;
  const Vector base = m.power_case.base_demand();
  const double cap = std::max(1.0, m.power_case.total_capacity());

  std::vector<Vector> axes;
  for (std::size_t b = 0; b < base.size(); ++b) {
    if (base[b] <= 0.0) continue;
    Vector d(p.d(), 0.0);
    d[p.n() + m.index.balance_row[b]] = 1.0;
    axes.push_back(d);
  }
  Vector ray(p.d(), 0.0);
  const double scale = norm_inf<double>(base);
  for (std::size_t b = 0; b < base.size(); ++b) ray[p.n() + m.index.balance_row[b]] = base[b] / scale;
  axes.push_back(ray);

  SearchPattern pat;
  for (double k : scales) {
    Vector demand(base.size());
    for (std::size_t b = 0; b < base.size(); ++b) demand[b] = k * base[b];
    const ParameterPoint start = theta_for_demand(m, demand);
    if (!is_feasible(p, start)) continue;
    for (const Vector& axis : axes)
      for (double sign : {1.0, -1.0}) {
        Vector dir(axis);
        for (double& v : dir) v *= sign;
        const double e = shrink * feasible_extent(p, start, dir, cap);
        if (e <= 0.0) continue;
        Direction d{start, dir, steps};
        for (double& v : d.step) v *= e / static_cast<double>(steps - 1);
        pat.directions.push_back(std::move(d));
      }
  }
  return pat;
}

double sample_renewable(std::mt19937_64& rng, double rate, double cap) {
  return std::min(std::exponential_distribution<double>(rate)(rng), cap);
}

double capped_exponential_mean(double rate, double cap) { return (1.0 - std::exp(-rate * cap)) / rate; }

std::vector<double> diurnal_profile(std::size_t hours) {
  std::vector<double> p(hours);
  for (std::size_t h = 0; h < hours; ++h) {
    // Trough near 04:00, peak near 19:00.
    const double phase = 2.0 * std::numbers::pi * (static_cast<double>(h) - 19.0) / static_cast<double>(hours);
    p[h] = 0.8 + 0.2 * std::cos(phase);
  }
  return p;
}

std::vector<DataPoint> renewable_planning_dataset(const Dcopf& m, const PlanningOptions& opts) {
  const Vector base = m.power_case.base_demand();
  const std::size_t nb = base.size();
  std::vector<std::size_t> ren;
  for (int id : opts.renewable_buses) ren.push_back(m.power_case.bus_index(id));
  const auto profile = diurnal_profile(opts.hours);
  std::vector<DataPoint> out;
  out.reserve(opts.hours * opts.samples);
  for (std::size_t h = 0; h < opts.hours; ++h)
    for (std::size_t s = 0; s < opts.samples; ++s) {
      auto rng = engine_for(opts.seed, kPlanningStream, h * opts.samples + s);
      Vector theta_base(nb), p_ren(nb, 0.0);
      for (std::size_t b = 0; b < nb; ++b) theta_base[b] = (profile[h] - 1.0) * base[b];
      for (std::size_t b : ren) p_ren[b] = opts.unit_mw * sample_renewable(rng);
      out.push_back({inject_renewable(m, theta_base, p_ren), profile[h], std::nullopt});
    }
  return out;
}

std::vector<std::string> theta_column_names(const MpQpProblem& p) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < p.n(); ++i) names.push_back("theta_c" + std::to_string(i));
  for (std::size_t i = 0; i < p.m1(); ++i) names.push_back("theta_e" + std::to_string(i));
  for (std::size_t i = 0; i < p.m2(); ++i) names.push_back("theta_C" + std::to_string(i));
  return names;
}

void write_dataset_csv(const std::vector<DataPoint>& pts, const MpQpProblem& p, const std::filesystem::path& path) {
  std::ostringstream os;
  os.precision(17);
  os << "scale,feasible";
  for (const auto& n : theta_column_names(p)) os << ',' << n;
  os << '\n';
  for (const auto& d : pts) {
    os << d.scale << ',';
    if (d.feasible) os << (*d.feasible ? 1 : 0);
    for (double v : d.theta.stacked()) os << ',' << v;
    os << '\n';
  }
  write_text_file(path, os.str());
}

std::vector<DataPoint> read_dataset_csv(const MpQpProblem& p, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) return {};
  auto split = [](const std::string& s) {
    std::vector<std::string> f;
    std::string cur;
    for (char c : s) {
      if (c == ',') {
        f.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur.push_back(c);
      }
    }
    f.push_back(cur);
    return f;
  };
  const auto header = split(line);
  const auto names = theta_column_names(p);
  if (header.size() != names.size() + 2 || header[0] != "scale" || header[1] != "feasible")
    throw ParseError(path.string() + " line 1: header must be scale,feasible followed by " +
                     std::to_string(names.size()) + " theta columns");
  std::vector<DataPoint> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split(line);
    auto fail = [&](const std::string& why) {
      throw ParseError(path.string() + " line " + std::to_string(lineno) + ": " + why);
    };
    if (f.size() != header.size()) fail("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    auto num = [&](const std::string& s) {
      try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) fail("bad number '" + s + "'");
        return v;
      } catch (const std::logic_error&) {
        fail("bad number '" + s + "'");
      }
      return 0.0;
    };
    DataPoint d;
    d.scale = num(f[0]);
    if (f[1] == "1") d.feasible = true;
    else if (f[1] == "0") d.feasible = false;
    else if (!f[1].empty()) fail("feasible must be 1, 0 or empty");
    Vector v(names.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = num(f[i + 2]);
    d.theta = ParameterPoint::from_stacked(p, v);
    out.push_back(std::move(d));
  }
  return out;
}

void write_dataset_jsonl(const std::vector<DataPoint>& pts, const std::filesystem::path& path) {
  std::string s;
  for (const auto& d : pts) {
    json j = to_json(d.theta);
    j["scale"] = d.scale;
    j["feasible"] = d.feasible ? json(*d.feasible) : json(nullptr);
    s += j.dump() + "\n";
  }
  write_text_file(path, s);
}

std::vector<DataPoint> read_dataset_jsonl(const MpQpProblem& p, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<DataPoint> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      DataPoint d{parameter_from_json(p, j), j.value("scale", 1.0), std::nullopt};
      if (j.contains("feasible") && !j.at("feasible").is_null()) d.feasible = j.at("feasible").get<bool>();
      out.push_back(std::move(d));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + " line " + std::to_string(lineno) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(path.string() + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<DataPoint> read_dataset(const MpQpProblem& p, const std::filesystem::path& path) {
  return path.extension() == ".csv" ? read_dataset_csv(p, path) : read_dataset_jsonl(p, path);
}

}  // namespace cfqp
