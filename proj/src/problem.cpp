#include "cfqp/problem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cfqp/errors.hpp"
#include "cfqp/io.hpp"

namespace cfqp {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidProblem: return "InvalidProblem";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::SingularActiveJacobian: return "SingularActiveJacobian";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::InfeasibleStart: return "InfeasibleStart";
    case ErrorKind::UnresolvableTransition: return "UnresolvableTransition";
    case ErrorKind::DigestMismatch: return "DigestMismatch";
    case ErrorKind::MalformedModel: return "MalformedModel";
    case ErrorKind::InvalidCase: return "InvalidCase";
    case ErrorKind::DisconnectedNetwork: return "DisconnectedNetwork";
    case ErrorKind::MissingSlack: return "MissingSlack";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

Precision precision_from_bits(int b) {
  if (b == 32) return Precision::f32;
  if (b == 64) return Precision::f64;
  throw InvalidProblem("precision must be 32 or 64, got " + std::to_string(b));
}

int bits(Precision p) noexcept { return static_cast<int>(p); }

namespace {

bool positive_semidefinite(const Matrix& q, double shift) {
  // Cholesky of Q + shift·I succeeds iff the smallest eigenvalue exceeds -shift.
  const std::size_t n = q.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = q(j, j) + shift;
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (diag <= 0.0) return false;
    l(j, j) = std::sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = q(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / l(j, j);
    }
  }
  return true;
}

// Gaussian elimination with complete pivoting.
std::size_t numerical_rank(Matrix a, double rel_tol) {
  const std::size_t rows = a.rows(), cols = a.cols();
  const double threshold = rel_tol * std::max(1.0, a.max_abs());
  std::size_t rank = 0;
  for (std::size_t k = 0; k < std::min(rows, cols); ++k) {
    std::size_t pr = k, pc = k;
    double best = 0.0;
    for (std::size_t i = k; i < rows; ++i)
      for (std::size_t j = k; j < cols; ++j)
        if (std::abs(a(i, j)) > best) {
          best = std::abs(a(i, j));
          pr = i;
          pc = j;
        }
    if (best <= threshold) break;
    for (std::size_t j = 0; j < cols; ++j) std::swap(a(k, j), a(pr, j));
    for (std::size_t i = 0; i < rows; ++i) std::swap(a(i, k), a(i, pc));
    for (std::size_t i = k + 1; i < rows; ++i) {
      const double f = a(i, k) / a(k, k);
      for (std::size_t j = k; j < cols; ++j) a(i, j) -= f * a(k, j);
    }
    ++rank;
  }
  return rank;
}

}  // namespace

MpQpProblem::MpQpProblem(Data data) : d_(std::move(data)) {
  const std::size_t n = d_.C.size(), m1 = d_.b_e.size(), m2 = d_.b_C.size();
  auto shape = [](const Matrix& m, std::size_t r, std::size_t c, const char* name) {
    if (m.rows() != r || m.cols() != c) {
      std::ostringstream os;
      os << name << " has shape " << m.rows() << "x" << m.cols() << ", expected " << r << "x" << c;
      throw InvalidProblem(os.str());
    }
  };
  if (n == 0) throw InvalidProblem("problem has no decision variables");
  shape(d_.Q, n, n, "Q");
  shape(d_.A_e, m1, n, "A_e");
  shape(d_.A_C, m2, n, "A_C");

  double s = std::max({1.0, d_.Q.max_abs(), d_.A_e.max_abs(), d_.A_C.max_abs(),
                       norm_inf<double>(d_.C), norm_inf<double>(d_.b_e),
                       norm_inf<double>(d_.b_C), std::abs(d_.C0)});
  scale_ = s;

  const double qmax = std::max(1.0, d_.Q.max_abs());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(d_.Q(i, j) - d_.Q(j, i)) > 1e-10 * qmax)
        throw InvalidProblem("Q is not symmetric");
  if (!positive_semidefinite(d_.Q, 1e-10 * qmax))
    throw InvalidProblem("Q is not positive semidefinite");
  if (m1 > 0 && numerical_rank(d_.A_e, 1e-12) < m1)
    throw InvalidProblem("A_e does not have full row rank");

  for (const auto& g : d_.groups)
    for (std::size_t i : g.indices)
      if (i >= n) throw InvalidProblem("variable group '" + g.name + "' index out of range");

  digest_ = sha256_hex(canonical_json(d_));
}

Vector MpQpProblem::stacked_coefficients() const {
  Vector b;
  b.reserve(d());
  b.insert(b.end(), d_.C.begin(), d_.C.end());
  b.insert(b.end(), d_.b_e.begin(), d_.b_e.end());
  b.insert(b.end(), d_.b_C.begin(), d_.b_C.end());
  return b;
}

ParameterPoint ParameterPoint::zeros(const MpQpProblem& p) {
  return {Vector(p.n(), 0.0), Vector(p.m1(), 0.0), Vector(p.m2(), 0.0)};
}

ParameterPoint ParameterPoint::from_stacked(const MpQpProblem& p, std::span<const double> v) {
  if (v.size() != p.d()) throw InvalidProblem("stacked parameter has wrong length");
  ParameterPoint t;
  t.theta_c.assign(v.begin(), v.begin() + p.n());
  t.theta_e.assign(v.begin() + p.n(), v.begin() + p.n() + p.m1());
  t.theta_C.assign(v.begin() + p.n() + p.m1(), v.end());
  return t;
}

Vector ParameterPoint::stacked() const {
  Vector v;
  v.reserve(size());
  v.insert(v.end(), theta_c.begin(), theta_c.end());
  v.insert(v.end(), theta_e.begin(), theta_e.end());
  v.insert(v.end(), theta_C.begin(), theta_C.end());
  return v;
}

bool ParameterPoint::matches(const MpQpProblem& p) const noexcept {
  return theta_c.size() == p.n() && theta_e.size() == p.m1() && theta_C.size() == p.m2();
}

Vector model_input(const MpQpProblem& p, const ParameterPoint& theta) {
  if (!theta.matches(p)) throw InvalidProblem("parameter dimensions do not match the problem");
  Vector u = p.stacked_coefficients();
  const Vector t = theta.stacked();
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = -u[i] - t[i];
  return u;
}

ActiveSet::ActiveSet(std::vector<std::size_t> zero_based, std::size_t m2) : idx_(std::move(zero_based)) {
  std::sort(idx_.begin(), idx_.end());
  idx_.erase(std::unique(idx_.begin(), idx_.end()), idx_.end());
  if (!idx_.empty() && idx_.back() >= m2)
    throw InvalidProblem("active-set index " + std::to_string(idx_.back() + 1) + " exceeds m2 = " +
                         std::to_string(m2));
}

ActiveSet ActiveSet::from_one_based(std::initializer_list<std::size_t> idx, std::size_t m2) {
  std::vector<std::size_t> z;
  for (std::size_t i : idx) {
    if (i == 0) throw InvalidProblem("one-based active-set index 0");
    z.push_back(i - 1);
  }
  return ActiveSet(std::move(z), m2);
}

ActiveSet ActiveSet::from_mask(std::uint64_t mask, std::size_t m2) {
  std::vector<std::size_t> z;
  for (std::size_t i = 0; i < 64; ++i)
    if (mask & (std::uint64_t{1} << i)) z.push_back(i);
  return ActiveSet(std::move(z), m2);
}

bool ActiveSet::contains(std::size_t i) const noexcept {
  return std::binary_search(idx_.begin(), idx_.end(), i);
}

ActiveSet ActiveSet::with(std::size_t i, std::size_t m2) const {
  auto z = idx_;
  z.push_back(i);
  return ActiveSet(std::move(z), m2);
}

ActiveSet ActiveSet::without(std::size_t i, std::size_t m2) const {
  auto z = idx_;
  z.erase(std::remove(z.begin(), z.end(), i), z.end());
  return ActiveSet(std::move(z), m2);
}

std::vector<std::size_t> ActiveSet::one_based() const {
  std::vector<std::size_t> o(idx_);
  for (auto& i : o) ++i;
  return o;
}

std::string ActiveSet::to_string() const {
  std::string s = "{";
  for (std::size_t k = 0; k < idx_.size(); ++k) {
    if (k) s += ",";
    s += std::to_string(idx_[k] + 1);
  }
  return s + "}";
}

std::size_t ActiveSet::distance(const ActiveSet& other) const {
  std::vector<std::size_t> diff;
  std::set_symmetric_difference(idx_.begin(), idx_.end(), other.idx_.begin(), other.idx_.end(),
                                std::back_inserter(diff));
  return diff.size();
}

}  // namespace cfqp
