#include "cfqp/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace cfqp {

KktTable kkt_table(const MpQpProblem& p, std::span<const PrimalDualSolution> sols,
                   std::span<const ParameterPoint> thetas) {
  if (sols.size() != thetas.size()) throw InvalidProblem("kkt_table: one parameter point per solution required");
  KktTable t;
  for (const auto& c : kkt_columns(p, KktReport{Vector(p.n()), Vector(p.m1()), Vector(p.m2()), Vector(p.m2()),
                                               Vector(p.m2()), 0.0}))
    t.columns.push_back(c.name);
  t.mean.assign(t.columns.size(), 0.0);
  t.worst.assign(t.columns.size(), 0.0);
  for (std::size_t i = 0; i < sols.size(); ++i) {
    const auto r = kkt_report(p, sols[i], thetas[i]);
    const auto cols = kkt_columns(p, r);
    for (std::size_t c = 0; c < cols.size(); ++c) {
      t.mean[c] += cols[c].mean;
      t.worst[c] = std::max(t.worst[c], cols[c].max);
    }
    t.scalar_mean += r.scalar;
    t.scalar_worst = std::max(t.scalar_worst, r.scalar);
  }
  t.count = sols.size();
  if (t.count) {
    for (double& m : t.mean) m /= static_cast<double>(t.count);
    t.scalar_mean /= static_cast<double>(t.count);
  }
  return t;
}

namespace {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

}  // namespace

namespace {

// Display width: counts code points, not bytes.
std::size_t width(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
}

std::string pad(std::string_view s, std::size_t to = 11) {
  const std::size_t w = width(s);
  return std::string(w < to ? to - w : 0, ' ') + std::string(s);
}

}  // namespace

std::string format_table(const KktTable& t, const std::string& label) {
  std::ostringstream os;
  os << label << " (" << t.count << " points)\n";
  os << "       ";
  for (const auto& c : t.columns) os << ' ' << pad(c);
  os << '\n' << "  mean ";
  for (double v : t.mean) os << ' ' << pad(sci(v));
  os << '\n' << "  worst";
  for (double v : t.worst) os << ' ' << pad(sci(v));
  os << '\n';
  return os.str();
}

std::string table_csv_header(const KktTable& t) {
  std::string s = "label,stat,count";
  for (const auto& c : t.columns) s += "," + c;
  return s + "\n";
}

std::string table_csv_rows(const KktTable& t, const std::string& label) {
  std::ostringstream os;
  os.precision(6);
  os << std::scientific;
  for (const auto& [stat, vals] : {std::pair{"mean", &t.mean}, std::pair{"worst", &t.worst}}) {
    os << label << ',' << stat << ',' << t.count;
    for (double v : *vals) os << ',' << v;
    os << '\n';
  }
  return os.str();
}

json to_json(const KktTable& t) {
  json j;
  j["count"] = t.count;
  j["scalar_mean"] = t.scalar_mean;
  j["scalar_worst"] = t.scalar_worst;
  json cols = json::object();
  for (std::size_t c = 0; c < t.columns.size(); ++c) cols[t.columns[c]] = {{"mean", t.mean[c]}, {"worst", t.worst[c]}};
  j["columns"] = cols;
  return j;
}

}  // namespace cfqp
