#include "cfqp/model.hpp"

#include <algorithm>
#include <cmath>

#include "cfqp/errors.hpp"
#include "cfqp/io.hpp"
#include "cfqp/kernels.hpp"

namespace cfqp {

std::optional<std::size_t> ClosedFormModel::find_region(const ActiveSet& b) const {
  for (const auto& r : regions_)
    if (r.active_set == b) return r.id;
  return std::nullopt;
}

Matrix ClosedFormModel::incidence_dense() const {
  Matrix m(size(), size());
  for (const auto& e : incidence_) m(e.row, e.col) = e.value;
  return m;
}

ClosedFormModel ClosedFormModel::with_precision(Precision p) const {
  ClosedFormModel m = *this;
  m.precision_ = p;
  return m;
}

ClosedFormModel ClosedFormModel::with_witness(std::size_t id, const ParameterPoint& theta) const {
  if (!theta.matches(*problem_)) throw InvalidProblem("witness dimension mismatch");
  ClosedFormModel m = *this;
  m.regions_.at(id).witness_theta = theta;
  return m;
}

void ClosedFormModel::check_bound(const MpQpProblem& p) const {
  if (p.digest() != digest_)
    throw DigestMismatch("model was built for problem " + digest_.substr(0, 12) + ", got " +
                         p.digest().substr(0, 12));
}

void ClosedFormModel::rebuild() {
  const MpQpProblem& p = *problem_;
  const std::size_t m2 = p.m2(), d = p.d(), k = regions_.size();
  w0_ = Matrix(k * m2, d);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t r = 0; r < m2; ++r)
      for (std::size_t c = 0; c < d; ++c) w0_(i * m2 + r, c) = regions_[i].slopes.grad_mu(r, c);

  const Matrix act = p.A_C().transpose();
  auto make = [&]<typename T>(T) {
    auto c = std::make_shared<Cache<T>>();
    c->w0.assign(w0_.storage().begin(), w0_.storage().end());
    c->agreement.assign(agreement_.storage().begin(), agreement_.storage().end());
    c->base_inverse.assign(base_inverse_.storage().begin(), base_inverse_.storage().end());
    c->a_c_transposed.assign(act.storage().begin(), act.storage().end());
    return c;
  };
  cache32_ = make(0.0f);
  cache64_ = make(0.0);
}

// Block buffers, row-major with one column per θ.
template <typename T>
struct ClosedFormModel::Workspace {
  std::size_t width;
  std::vector<T> u, h, acc, mu, rhs, z;
  Workspace(const MpQpProblem& p, std::size_t k, std::size_t w)
      : width(w),
        u(p.d() * w),
        h(k * p.m2() * w),
        acc(p.m2() * w),
        mu(p.m2() * w),
        rhs((p.n() + p.m1()) * w),
        z((p.n() + p.m1()) * w) {}
};

template <typename T>
void ClosedFormModel::run(std::span<const ParameterPoint> thetas, const Cache<T>& c, Workspace<T>& ws, bool mu_only,
                          PrimalDualSolution* out) const {
  const MpQpProblem& p = *problem_;
  const auto& kt = kernels::active<T>();
  const std::size_t n = p.n(), m1 = p.m1(), m2 = p.m2(), d = p.d(), k = regions_.size();
  const std::size_t w = thetas.size(), nm = n + m1;

  T* u = ws.u.data();
  for (std::size_t b = 0; b < w; ++b) {
    const ParameterPoint& t = thetas[b];
    if (!t.matches(p)) throw InvalidProblem("parameter dimensions do not match the model's problem");
    for (std::size_t i = 0; i < n; ++i) u[i * w + b] = static_cast<T>(-p.C()[i] - t.theta_c[i]);
    for (std::size_t q = 0; q < m1; ++q) u[(n + q) * w + b] = static_cast<T>(-p.b_e()[q] - t.theta_e[q]);
    for (std::size_t q = 0; q < m2; ++q) u[(nm + q) * w + b] = static_cast<T>(-p.b_C()[q] - t.theta_C[q]);
  }

  T* mu = ws.mu.data();
  std::fill(mu, mu + m2 * w, T{0});
  if (m2 > 0) {
    kt.gemm(c.w0.data(), k * m2, d, u, w, ws.h.data());
    std::size_t e = 0;
    for (std::size_t j = 0; j < k; ++j) {
      std::fill(ws.acc.begin(), ws.acc.begin() + m2 * w, T{0});
      for (; e < incidence_.size() && incidence_[e].col == j; ++e)
        kt.axpy(m2 * w, static_cast<T>(incidence_[e].value), ws.h.data() + incidence_[e].row * m2 * w,
                ws.acc.data());
      for (std::size_t q = 0; q < m2; ++q)
        kt.relu_axpy(w, c.agreement[j * m2 + q], static_cast<T>(direction_[j]), ws.acc.data() + q * w, mu + q * w);
    }
  }

  T* rhs = ws.rhs.data();
  if (!mu_only) {
    if (m2 > 0) kt.gemm(c.a_c_transposed.data(), n, m2, mu, w, rhs);
    else std::fill(rhs, rhs + n * w, T{0});
    kt.axpy(n * w, T{1}, u, rhs);
    std::copy(u + n * w, u + nm * w, rhs + n * w);
    kt.gemm(c.base_inverse.data(), nm, nm, rhs, w, ws.z.data());
  }

  for (std::size_t b = 0; b < w; ++b) {
    PrimalDualSolution& sol = out[b];
    auto gather = [w, b](Vector& v, const T* src, std::size_t len) {
      v.reserve(len);
      for (std::size_t i = 0; i < len; ++i) v.push_back(src[i * w + b]);
    };
    gather(sol.mu, mu, m2);
    if (mu_only) continue;
    gather(sol.x, ws.z.data(), n);
    gather(sol.lambda, ws.z.data() + n * w, m1);
    sol.objective = objective_value(p, sol.x, thetas[b]);
  }
}

template <typename T>
std::vector<PrimalDualSolution> ClosedFormModel::run_batch(std::span<const ParameterPoint> thetas, const Cache<T>& c,
                                                           bool mu_only) const {
  constexpr std::size_t kBlock = 64;
  Workspace<T> ws(*problem_, regions_.size(), std::min(kBlock, std::max<std::size_t>(thetas.size(), 1)));
  std::vector<PrimalDualSolution> out(thetas.size());
  for (std::size_t s = 0; s < thetas.size(); s += ws.width) {
    const std::size_t w = std::min(ws.width, thetas.size() - s);
    run(thetas.subspan(s, w), c, ws, mu_only, out.data() + s);
  }
  return out;
}

Vector ClosedFormModel::forward_mu(const ParameterPoint& theta) const {
  const std::span<const ParameterPoint> one(&theta, 1);
  auto sols = precision_ == Precision::f32 ? run_batch(one, *cache32_, true) : run_batch(one, *cache64_, true);
  return std::move(sols.front().mu);
}

PrimalDualSolution ClosedFormModel::forward(const ParameterPoint& theta) const {
  const std::span<const ParameterPoint> one(&theta, 1);
  auto sols = precision_ == Precision::f32 ? run_batch(one, *cache32_, false) : run_batch(one, *cache64_, false);
  return std::move(sols.front());
}

std::vector<PrimalDualSolution> ClosedFormModel::batch_forward(std::span<const ParameterPoint> thetas) const {
  return precision_ == Precision::f32 ? run_batch(thetas, *cache32_, false) : run_batch(thetas, *cache64_, false);
}

ClosedFormModel init_model(std::shared_ptr<const MpQpProblem> problem, const ActiveSet& b0,
                           const ParameterPoint& theta0, Precision precision) {
  if (!problem) throw InvalidProblem("init_model: no problem");
  if (!theta0.matches(*problem)) throw InvalidProblem("init_model: theta0 dimension mismatch");
  ClosedFormModel m;
  m.problem_ = problem;
  m.digest_ = problem->digest();
  m.precision_ = precision;
  m.base_inverse_ = factorize(assemble_base_jacobian(*problem)).inverse();
  m.regions_.push_back({0, b0, region_slopes(*problem, b0), std::nullopt, theta0});
  m.incidence_.push_back({0, 0, 1});
  m.direction_.push_back(1);
  m.agreement_ = Matrix(1, problem->m2(), 1.0);
  m.rebuild();
  return m;
}

ExpandResult expand(const ClosedFormModel& model, std::size_t parent_id, const ActiveSet& new_set,
                    const ParameterPoint& probe_theta) {
  if (parent_id >= model.size()) throw InvalidProblem("expand: unknown parent region");
  if (auto existing = model.find_region(new_set)) return {model, *existing, true};

  const MpQpProblem& p = model.problem();
  const std::size_t m2 = p.m2(), j = model.size();
  RegionSlopes slopes = region_slopes(p, new_set);

  const Vector u = model_input(p, probe_theta);
  const Vector mu_new = matvec<double>(slopes.grad_mu, u);
  const Vector mu_parent = matvec<double>(model.region(parent_id).slopes.grad_mu, u);
  Vector delta(m2);
  std::size_t lead = 0;
  for (std::size_t q = 0; q < m2; ++q) {
    delta[q] = mu_new[q] - mu_parent[q];
    if (std::abs(delta[q]) > std::abs(delta[lead])) lead = q;
  }
  const double largest = m2 ? std::abs(delta[lead]) : 0.0;
  const int v = (m2 == 0 || delta[lead] >= 0.0) ? 1 : -1;

  ClosedFormModel m = model;
  m.regions_.push_back({j, new_set, std::move(slopes), parent_id, probe_theta});
  m.incidence_.push_back({parent_id, j, -v});
  m.incidence_.push_back({j, j, v});
  std::sort(m.incidence_.begin(), m.incidence_.end(),
            [](const IncidenceEntry& a, const IncidenceEntry& b) { return a.col != b.col ? a.col < b.col : a.row < b.row; });
  m.direction_.push_back(v);
  Matrix agreement(j + 1, m2);
  for (std::size_t i = 0; i < j; ++i)
    for (std::size_t q = 0; q < m2; ++q) agreement(i, q) = model.agreement()(i, q);
  for (std::size_t q = 0; q < m2; ++q) {
    const bool clear = std::abs(delta[q]) > 1e-9 * largest;
    const int s = clear ? (delta[q] > 0.0 ? 1 : -1) : v;
    agreement(j, q) = s * v;
  }
  m.agreement_ = std::move(agreement);
  m.rebuild();
  return {std::move(m), j, false};
}

namespace {

constexpr const char* kFormatName = "cfqp-model";

[[noreturn]] void malformed(const std::string& what) { throw MalformedModel("model file: " + what); }

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) malformed(std::string("missing field '") + key + "'");
  return j.at(key);
}

}  // namespace

std::string serialize_model(const ClosedFormModel& model) {
  const MpQpProblem& p = model.problem();
  json j;
  j["format"] = kFormatName;
  j["version"] = kModelFormatVersion;
  j["precision"] = bits(model.precision());
  j["problem_digest"] = model.problem_digest();
  j["dims"] = {{"n", p.n()}, {"m1", p.m1()}, {"m2", p.m2()}, {"regions", model.size()}};
  json regions = json::array();
  for (const auto& r : model.regions()) {
    json e;
    e["id"] = r.id;
    e["active_set"] = r.active_set.one_based();
    e["parent"] = r.parent_id ? json(*r.parent_id) : json(nullptr);
    e["witness"] = r.witness_theta.stacked();
    regions.push_back(e);
  }
  j["regions"] = regions;
  j["W0"] = matrix_to_json(model.W0());
  json inc = json::array();
  for (const auto& e : model.incidence()) inc.push_back({e.row, e.col, e.value});
  j["incidence"] = inc;
  j["direction"] = model.direction();
  j["agreement"] = matrix_to_json(model.agreement());
  j["base_inverse"] = matrix_to_json(model.base_inverse());
  return j.dump() + "\n";
}

ClosedFormModel deserialize_model(std::string_view bytes, std::shared_ptr<const MpQpProblem> problem) {
  if (!problem) throw InvalidProblem("deserialize_model: no problem");
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::parse_error& e) {
    malformed(std::string("not valid JSON (") + e.what() + ")");
  }
  try {
    if (field(j, "format") != kFormatName) malformed("unrecognized format tag");
    if (!field(j, "version").is_number_integer() || field(j, "version").get<int>() != kModelFormatVersion)
      malformed("unsupported version " + field(j, "version").dump());
    const std::string digest = field(j, "problem_digest").get<std::string>();
    if (digest != problem->digest())
      throw DigestMismatch("model was built for problem " + digest.substr(0, 12) + ", got " +
                           problem->digest().substr(0, 12));
    const MpQpProblem& p = *problem;
    const json& dims = field(j, "dims");
    if (field(dims, "n").get<std::size_t>() != p.n() || field(dims, "m1").get<std::size_t>() != p.m1() ||
        field(dims, "m2").get<std::size_t>() != p.m2())
      malformed("dimensions disagree with the problem");
    const std::size_t k = field(dims, "regions").get<std::size_t>();
    if (k == 0) malformed("no regions");

    ClosedFormModel m;
    m.problem_ = problem;
    m.digest_ = digest;
    m.precision_ = precision_from_bits(field(j, "precision").get<int>());

    const json& regions = field(j, "regions");
    if (!regions.is_array() || regions.size() != k) malformed("region count mismatch");
    for (std::size_t i = 0; i < k; ++i) {
      const json& r = regions[i];
      if (field(r, "id").get<std::size_t>() != i) malformed("region ids must be 0..k-1 in order");
      std::vector<std::size_t> idx;
      for (std::size_t one : field(r, "active_set").get<std::vector<std::size_t>>()) {
        if (one == 0 || one > p.m2()) malformed("active-set index out of range");
        idx.push_back(one - 1);
      }
      std::optional<std::size_t> parent;
      if (!field(r, "parent").is_null()) {
        parent = field(r, "parent").get<std::size_t>();
        if (*parent >= i) malformed("parent must precede its child");
      } else if (i != 0) {
        malformed("only the root may lack a parent");
      }
      const Vector w = vector_from_json(field(r, "witness"), p.d(), "witness");
      ActiveSet b(idx, p.m2());
      m.regions_.push_back({i, b, region_slopes(p, b), parent, ParameterPoint::from_stacked(p, w)});
    }

    const Matrix w0 = matrix_from_json(field(j, "W0"), k * p.m2(), p.d(), "W0");
    for (const json& t : field(j, "incidence")) {
      if (!t.is_array() || t.size() != 3) malformed("incidence entries are [row, col, value]");
      const IncidenceEntry e{t[0].get<std::size_t>(), t[1].get<std::size_t>(), t[2].get<int>()};
      if (e.row >= k || e.col >= k || (e.value != 1 && e.value != -1)) malformed("incidence entry out of range");
      m.incidence_.push_back(e);
    }
    m.direction_ = field(j, "direction").get<std::vector<int>>();
    if (m.direction_.size() != k) malformed("direction length mismatch");
    m.agreement_ = matrix_from_json(field(j, "agreement"), k, p.m2(), "agreement");
    m.base_inverse_ = matrix_from_json(field(j, "base_inverse"), p.n() + p.m1(), p.n() + p.m1(), "base_inverse");

    // Structural invariants of the incidence matrix.
    std::vector<int> per_col(k, 0);
    for (std::size_t e = 0; e < m.incidence_.size(); ++e) {
      const auto& t = m.incidence_[e];
      if (e > 0) {
        const auto& prev = m.incidence_[e - 1];
        if (prev.col > t.col || (prev.col == t.col && prev.row >= t.row)) malformed("incidence not sorted");
      }
      ++per_col[t.col];
      const int v = m.direction_[t.col];
      if (t.row == t.col ? t.value != v : (t.value != -v || !m.regions_[t.col].parent_id ||
                                           *m.regions_[t.col].parent_id != t.row))
        malformed("incidence entry disagrees with direction or parent");
    }
    if (per_col[0] != 1 || m.direction_[0] != 1) malformed("root column must be +1");
    for (std::size_t c = 1; c < k; ++c)
      if (per_col[c] != 2) malformed("non-root incidence column needs two entries");
    for (double a : m.agreement_.storage())
      if (a != 1.0 && a != -1.0) malformed("agreement entries must be +-1");

    m.rebuild();
    if (!(m.w0_ == w0)) malformed("W0 does not match the slopes of the listed active sets");
    return m;
  } catch (const json::exception& e) {
    malformed(e.what());
  }
}

}  // namespace cfqp
