#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cfqp {

/// Error families. The CLI maps each to a distinct exit code.
enum class ErrorKind {
  InvalidProblem = 10,
  SingularJacobian = 11,
  SingularActiveJacobian = 12,
  Infeasible = 20,
  InfeasibleStart = 21,
  UnresolvableTransition = 22,
  DigestMismatch = 30,
  MalformedModel = 31,
  InvalidCase = 40,
  DisconnectedNetwork = 41,
  MissingSlack = 42,
  ParseError = 50,
};

[[nodiscard]] std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

template <ErrorKind K>
class KindedError : public Error {
 public:
  explicit KindedError(const std::string& what) : Error(K, what) {}
};

using InvalidProblem = KindedError<ErrorKind::InvalidProblem>;
using SingularJacobian = KindedError<ErrorKind::SingularJacobian>;
using SingularActiveJacobian = KindedError<ErrorKind::SingularActiveJacobian>;
using Infeasible = KindedError<ErrorKind::Infeasible>;
using InfeasibleStart = KindedError<ErrorKind::InfeasibleStart>;
using UnresolvableTransition = KindedError<ErrorKind::UnresolvableTransition>;
using DigestMismatch = KindedError<ErrorKind::DigestMismatch>;
using MalformedModel = KindedError<ErrorKind::MalformedModel>;
using InvalidCase = KindedError<ErrorKind::InvalidCase>;
using DisconnectedNetwork = KindedError<ErrorKind::DisconnectedNetwork>;
using MissingSlack = KindedError<ErrorKind::MissingSlack>;
using ParseError = KindedError<ErrorKind::ParseError>;

}  // namespace cfqp
