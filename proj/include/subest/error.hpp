#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace subest {

enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  RankDeficient,
  ConstraintViolation,
  TooFewRows,
  NotPositiveDefinite,
  DegenerateInput,
  TooLarge,
  BudgetExhausted,
  InfeasibleParameters,
  Io,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::ConstraintViolation: return "ConstraintViolation";
    case ErrorKind::TooFewRows: return "TooFewRows";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::BudgetExhausted: return "BudgetExhausted";
    case ErrorKind::InfeasibleParameters: return "InfeasibleParameters";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

}  // namespace subest
