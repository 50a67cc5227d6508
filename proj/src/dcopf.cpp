#include "cfqp/dcopf.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <queue>
#include <regex>
#include <sstream>

#include "cfqp/errors.hpp"

namespace cfqp {

std::size_t PowerCase::bus_index(int id) const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == id) return i;
  throw InvalidCase("unknown bus id " + std::to_string(id));
}

Matrix PowerCase::susceptance_matrix() const {
  Matrix b(buses.size(), buses.size());
  for (const auto& l : lines) {
    const std::size_t f = bus_index(l.from), t = bus_index(l.to);
    const double y = base_mva * l.susceptance;
    b(f, f) += y;
    b(t, t) += y;
    b(f, t) -= y;
    b(t, f) -= y;
  }
  return b;
}

Vector PowerCase::base_demand() const {
  Vector d;
  for (const auto& b : buses) d.push_back(b.demand);
  return d;
}

double PowerCase::total_capacity() const {
  double s = 0.0;
  for (const auto& g : generators) s += g.p_max;
  return s;
}

void PowerCase::validate() const {
  if (buses.empty()) throw InvalidCase("case has no buses");
  std::map<int, int> seen;
  for (const auto& b : buses)
    if (seen[b.id]++) throw InvalidCase("duplicate bus id " + std::to_string(b.id));
  if (!seen.contains(slack_bus)) throw MissingSlack("slack bus " + std::to_string(slack_bus) + " is not a bus");
  if (generators.empty()) throw InvalidCase("case has no generators");
  for (const auto& g : generators) {
    (void)bus_index(g.bus);
    if (!(g.p_min <= g.p_max)) throw InvalidCase("generator at bus " + std::to_string(g.bus) + " has P- > P+");
    if (g.q < 0.0) throw InvalidCase("generator at bus " + std::to_string(g.bus) + " has negative q");
  }
  for (const auto& l : lines) {
    (void)bus_index(l.from);
    (void)bus_index(l.to);
    if (l.from == l.to) throw InvalidCase("line from bus " + std::to_string(l.from) + " to itself");
    if (!(l.susceptance > 0.0)) throw InvalidCase("line susceptance must be positive");
    if (l.limit && !(*l.limit > 0.0)) throw InvalidCase("line limit must be positive");
  }
  std::vector<std::vector<std::size_t>> adj(buses.size());
  for (const auto& l : lines) {
    adj[bus_index(l.from)].push_back(bus_index(l.to));
    adj[bus_index(l.to)].push_back(bus_index(l.from));
  }
  std::vector<bool> reached(buses.size(), false);
  std::queue<std::size_t> q;
  q.push(bus_index(slack_bus));
  reached[q.front()] = true;
  std::size_t count = 1;
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    for (std::size_t v : adj[u])
      if (!reached[v]) {
        reached[v] = true;
        ++count;
        q.push(v);
      }
  }
  if (count != buses.size())
    throw DisconnectedNetwork(std::to_string(buses.size() - count) + " bus(es) unreachable from the slack bus");
}

FlowLimits case_limits(const PowerCase& c) {
  FlowLimits f;
  for (const auto& l : c.lines) {
    if (!l.limit) throw InvalidCase("line " + std::to_string(l.from) + "-" + std::to_string(l.to) + " has no limit");
    f.f_plus.push_back(*l.limit);
  }
  return f;
}

FlowLimits uniform_limits(const PowerCase& c, double mw) { return {Vector(c.lines.size(), mw)}; }

Vector DcopfIndex::angles(std::span<const double> x) const {
  Vector a(angle_var.size(), 0.0);
  for (std::size_t b = 0; b < angle_var.size(); ++b)
    if (angle_var[b]) a[b] = x[*angle_var[b]];
  return a;
}

namespace {

Dcopf build(const PowerCase& c, const FlowLimits* limits) {
  c.validate();
  const std::size_t nb = c.buses.size(), ng = c.generators.size();
  const std::size_t slack = c.bus_index(c.slack_bus);
  const std::size_t nl = limits ? c.lines.size() : 0;
  if (limits) {
    if (limits->f_plus.size() != c.lines.size()) throw InvalidCase("one flow limit per line required");
    for (double f : limits->f_plus)
      if (!(f > 0.0)) throw InvalidCase("flow limits must be positive");
  }

  Dcopf out;
  out.power_case = c;
  out.with_lines = limits != nullptr;
  DcopfIndex& ix = out.index;
  for (std::size_t g = 0; g < ng; ++g) ix.gen_var.push_back(g);
  ix.angle_var.resize(nb);
  std::size_t next = ng;
  for (std::size_t b = 0; b < nb; ++b)
    if (b != slack) ix.angle_var[b] = next++;
  const std::size_t n = next, m1 = nb, m2 = 2 * ng + 2 * nl;

  MpQpProblem::Data d;
  d.Q = Matrix(n, n);
  d.C = Vector(n, 0.0);
  for (std::size_t g = 0; g < ng; ++g) {
    d.Q(g, g) = c.generators[g].q;
    d.C[g] = c.generators[g].c;
  }
  const Matrix bmat = c.susceptance_matrix();
  d.A_e = Matrix(m1, n);
  d.b_e = c.base_demand();
  for (std::size_t b = 0; b < nb; ++b) {
    ix.balance_row.push_back(b);
    for (std::size_t k = 0; k < nb; ++k)
      if (ix.angle_var[k]) d.A_e(b, *ix.angle_var[k]) = -bmat(b, k);
  }
  for (std::size_t g = 0; g < ng; ++g) d.A_e(c.bus_index(c.generators[g].bus), g) += 1.0;

  d.A_C = Matrix(m2, n);
  d.b_C = Vector(m2, 0.0);
  std::size_t row = 0;
  for (std::size_t g = 0; g < ng; ++g) {
    ix.gen_upper_row.push_back(row);
    d.A_C(row, g) = -1.0;
    d.b_C[row++] = -c.generators[g].p_max;
    ix.gen_lower_row.push_back(row);
    d.A_C(row, g) = 1.0;
    d.b_C[row++] = c.generators[g].p_min;
  }
  for (std::size_t l = 0; l < nl; ++l) {
    const auto& ln = c.lines[l];
    const double y = c.base_mva * ln.susceptance;
    Vector flow(n, 0.0);
    if (auto v = ix.angle_var[c.bus_index(ln.from)]) flow[*v] += y;
    if (auto v = ix.angle_var[c.bus_index(ln.to)]) flow[*v] -= y;
    ix.line_upper_row.push_back(row);
    for (std::size_t j = 0; j < n; ++j) d.A_C(row, j) = -flow[j];
    d.b_C[row++] = -limits->f_plus[l];
    ix.line_lower_row.push_back(row);
    for (std::size_t j = 0; j < n; ++j) d.A_C(row, j) = flow[j];
    d.b_C[row++] = -limits->f_plus[l];
  }

  VariableGroup pg{"P_g", {}}, delta{"δ", {}};
  for (std::size_t g = 0; g < ng; ++g) pg.indices.push_back(g);
  for (std::size_t v = ng; v < n; ++v) delta.indices.push_back(v);
  d.groups = {pg, delta};
  out.problem = std::make_shared<const MpQpProblem>(std::move(d));
  return out;
}

}  // namespace

Dcopf build_dcopf(const PowerCase& c) { return build(c, nullptr); }

Dcopf build_dcopf_with_lines(const PowerCase& c, const FlowLimits& limits) { return build(c, &limits); }

ParameterPoint theta_for_demand(const Dcopf& m, std::span<const double> demand) {
  const auto& buses = m.power_case.buses;
  if (demand.size() != buses.size()) throw InvalidProblem("demand vector must have one entry per bus");
  ParameterPoint t = ParameterPoint::zeros(*m.problem);
  for (std::size_t b = 0; b < buses.size(); ++b) t.theta_e[m.index.balance_row[b]] = demand[b] - buses[b].demand;
  return t;
}

ParameterPoint inject_renewable(const Dcopf& m, std::span<const double> theta_e_base, std::span<const double> p_ren) {
  const std::size_t nb = m.power_case.buses.size();
  if (theta_e_base.size() != nb || p_ren.size() != nb)
    throw InvalidProblem("renewable injection needs one entry per bus");
  ParameterPoint t = ParameterPoint::zeros(*m.problem);
  for (std::size_t b = 0; b < nb; ++b) t.theta_e[m.index.balance_row[b]] = theta_e_base[b] - p_ren[b];
  return t;
}

PowerCase synthetic_case(std::size_t buses, std::size_t generators, std::uint64_t seed) {
  if (buses < 3 || generators < 1 || generators > buses)
    throw InvalidCase("synthetic case needs at least 3 buses and 1..buses generators");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PowerCase c;
  c.name = "synthetic_" + std::to_string(buses);
  c.slack_bus = 1;
  std::vector<std::size_t> order(buses);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin() + 1, order.end(), rng);
  std::vector<bool> has_gen(buses, false);
  for (std::size_t g = 0; g < generators; ++g) has_gen[order[g]] = true;

  double load = 0.0;
  for (std::size_t b = 0; b < buses; ++b) {
    const double d = has_gen[b] ? 0.0 : 20.0 + 60.0 * unit(rng);
    c.buses.push_back({static_cast<int>(b + 1), d});
    load += d;
  }
  for (std::size_t b = 0; b < buses; ++b)
    c.lines.push_back({static_cast<int>(b + 1), static_cast<int>((b + 1) % buses + 1), 5.0 + 10.0 * unit(rng),
                       std::nullopt});
  std::uniform_int_distribution<std::size_t> pick(0, buses - 1);
  for (std::size_t k = 0; k < buses / 4; ++k) {
    const std::size_t f = pick(rng), t = pick(rng);
    if (f == t) continue;
    c.lines.push_back({static_cast<int>(f + 1), static_cast<int>(t + 1), 5.0 + 10.0 * unit(rng), std::nullopt});
  }
  const double share = 2.0 * load / static_cast<double>(generators);
  for (std::size_t g = 0; g < generators; ++g) {
    const double cap = share * (0.5 + unit(rng));
    c.generators.push_back({static_cast<int>(order[g] + 1), 0.002 + 0.01 * unit(rng), 10.0 + 5.0 * unit(rng),
                            0.1 * cap, cap});
  }
  std::sort(c.generators.begin(), c.generators.end(), [](const Generator& a, const Generator& b) { return a.bus < b.bus; });
  c.validate();
  return c;
}

PowerCase case_from_json(const json& j) {
  try {
    PowerCase c;
    c.name = j.value("name", std::string("case"));
    c.base_mva = j.value("base_mva", 100.0);
    c.slack_bus = j.at("slack_bus").get<int>();
    for (const auto& b : j.at("buses")) c.buses.push_back({b.at("id").get<int>(), b.value("demand", 0.0)});
    for (const auto& g : j.at("generators"))
      c.generators.push_back({g.at("bus").get<int>(), g.value("q", 0.0), g.value("c", 0.0), g.at("p_min").get<double>(),
                              g.at("p_max").get<double>()});
    for (const auto& l : j.at("lines")) {
      Line ln{l.at("from").get<int>(), l.at("to").get<int>(), 0.0, std::nullopt};
      if (l.contains("susceptance"))
        ln.susceptance = l.at("susceptance").get<double>();
      else if (l.contains("x"))
        ln.susceptance = 1.0 / l.at("x").get<double>();
      else
        throw ParseError("line needs 'x' or 'susceptance'");
      if (l.contains("limit") && !l.at("limit").is_null()) ln.limit = l.at("limit").get<double>();
      c.lines.push_back(ln);
    }
    return c;
  } catch (const json::exception& e) {
    throw ParseError(std::string("case file: ") + e.what());
  }
}

json to_json(const PowerCase& c) {
  json j;
  j["name"] = c.name;
  j["base_mva"] = c.base_mva;
  j["slack_bus"] = c.slack_bus;
  j["buses"] = json::array();
  for (const auto& b : c.buses) j["buses"].push_back({{"id", b.id}, {"demand", b.demand}});
  j["generators"] = json::array();
  for (const auto& g : c.generators)
    j["generators"].push_back({{"bus", g.bus}, {"q", g.q}, {"c", g.c}, {"p_min", g.p_min}, {"p_max", g.p_max}});
  j["lines"] = json::array();
  for (const auto& l : c.lines) {
    json e{{"from", l.from}, {"to", l.to}, {"susceptance", l.susceptance}};
    if (l.limit) e["limit"] = *l.limit;
    j["lines"].push_back(e);
  }
  return j;
}

PowerCase load_case(const std::filesystem::path& path) { return case_from_json(read_json_file(path)); }

namespace {

std::vector<std::vector<double>> matpower_table(std::string_view text, const std::string& field) {
  const std::string src(text);
  const std::regex start("mpc\\." + field + "\\s*=\\s*\\[");
  std::smatch m;
  if (!std::regex_search(src, m, start)) throw ParseError("MATPOWER case: missing mpc." + field);
  const std::size_t begin = m.position(0) + m.length(0);
  const std::size_t end = src.find(']', begin);
  if (end == std::string::npos) throw ParseError("MATPOWER case: unterminated mpc." + field);
  const std::size_t first_line =
      static_cast<std::size_t>(std::count(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(begin), '\n')) + 1;

  std::vector<std::vector<double>> rows;
  std::vector<double> cur;
  std::size_t line = first_line;
  std::string tok;
  auto flush_tok = [&] {
    if (tok.empty()) return;
    try {
      std::size_t used = 0;
      cur.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ParseError("MATPOWER case line " + std::to_string(line) + ": bad number '" + tok + "' in mpc." + field);
    }
    tok.clear();
  };
  auto flush_row = [&] {
    flush_tok();
    if (!cur.empty()) rows.push_back(std::move(cur));
    cur.clear();
  };
  bool comment = false;
  for (std::size_t i = begin; i < end; ++i) {
    const char ch = src[i];
    if (ch == '\n') {
      comment = false;
      flush_row();
      ++line;
      continue;
    }
    if (comment) continue;
    if (ch == '%') {
      comment = true;
      flush_tok();
    } else if (ch == ';') {
      flush_row();
    } else if (ch == ' ' || ch == '\t' || ch == ',' || ch == '\r') {
      flush_tok();
    } else {
      tok.push_back(ch);
    }
  }
  flush_row();
  return rows;
}

}  // namespace

PowerCase parse_matpower(std::string_view text, std::string name) {
  PowerCase c;
  c.name = std::move(name);
  const std::string src(text);
  std::smatch m;
  if (std::regex_search(src, m, std::regex("mpc\\.baseMVA\\s*=\\s*([-+0-9.eE]+)"))) c.base_mva = std::stod(m[1]);

  const auto bus = matpower_table(text, "bus");
  const auto gen = matpower_table(text, "gen");
  const auto branch = matpower_table(text, "branch");
  const auto cost = matpower_table(text, "gencost");
  bool have_slack = false;
  for (const auto& r : bus) {
    if (r.size() < 3) throw ParseError("MATPOWER case: bus rows need at least 3 columns");
    c.buses.push_back({static_cast<int>(r[0]), r[2]});
    if (static_cast<int>(r[1]) == 3) {
      c.slack_bus = static_cast<int>(r[0]);
      have_slack = true;
    }
  }
  if (!have_slack) throw MissingSlack("MATPOWER case has no reference bus (type 3)");
  if (cost.size() < gen.size()) throw ParseError("MATPOWER case: gencost needs one row per generator");
  for (std::size_t g = 0; g < gen.size(); ++g) {
    const auto& r = gen[g];
    if (r.size() < 10) throw ParseError("MATPOWER case: gen rows need at least 10 columns");
    if (r[7] <= 0.0) continue;
    const auto& k = cost[g];
    if (k.size() < 4 || static_cast<int>(k[0]) != 2)
      throw ParseError("MATPOWER case: only polynomial generator costs are supported");
    const int ncost = static_cast<int>(k[3]);
    if (ncost < 1 || ncost > 3 || k.size() < 4 + static_cast<std::size_t>(ncost))
      throw ParseError("MATPOWER case: polynomial cost degree must be at most 2");
    double q = 0.0, lin = 0.0;
    if (ncost == 3) {
      q = k[4];
      lin = k[5];
    } else if (ncost == 2) {
      lin = k[4];
    }
    c.generators.push_back({static_cast<int>(r[0]), q, lin, r[9], r[8]});
  }
  for (const auto& r : branch) {
    if (r.size() < 11) throw ParseError("MATPOWER case: branch rows need at least 11 columns");
    if (r[10] <= 0.0) continue;
    if (r[3] == 0.0) throw InvalidCase("MATPOWER case: branch with zero reactance");
    Line l{static_cast<int>(r[0]), static_cast<int>(r[1]), 1.0 / r[3], std::nullopt};
    if (r[5] > 0.0) l.limit = r[5];
    c.lines.push_back(l);
  }
  return c;
}

}  // namespace cfqp
