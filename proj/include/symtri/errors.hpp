#pragma once

#include <stdexcept>
#include <string>

namespace symtri {

enum class ErrorKind {
  NotPrimePower,
  FieldTooLarge,
  DivisionByZero,
  ParseError,
  NotASteinerSystem,
  NoPerfectMatching,
  InfeasibleMemory,
  MemoryOverflow,
  DimensionMismatch,
  InfeasibleGrid,
  GroupEmpty,
  InvalidArgument,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::NotPrimePower: return "NotPrimePower";
    case ErrorKind::FieldTooLarge: return "FieldTooLarge";
    case ErrorKind::DivisionByZero: return "DivisionByZero";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::NotASteinerSystem: return "NotASteinerSystem";
    case ErrorKind::NoPerfectMatching: return "NoPerfectMatching";
    case ErrorKind::InfeasibleMemory: return "InfeasibleMemory";
    case ErrorKind::MemoryOverflow: return "MemoryOverflow";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InfeasibleGrid: return "InfeasibleGrid";
    case ErrorKind::GroupEmpty: return "GroupEmpty";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

// Every failure raised by the library carries a kind so callers (and the CLI)
// can map it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised by load_steiner. The pair is the first offending one found.
class SteinerError : public Error {
 public:
  enum class Reason { Missing, Duplicated, Other };

  SteinerError(Reason reason, int i, int j, const std::string& what)
      : Error(ErrorKind::NotASteinerSystem, what), reason_(reason), i_(i), j_(j) {}

  Reason reason() const noexcept { return reason_; }
  int first() const noexcept { return i_; }
  int second() const noexcept { return j_; }

 private:
  Reason reason_;
  int i_, j_;
};

}  // namespace symtri
