#ifndef MIXEDEM_ERRORS_HPP
#define MIXEDEM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mixedem {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& msg)
      : Error("DimensionMismatch: " + msg) {}
};

class RankDeficientX : public Error {
 public:
  explicit RankDeficientX(const std::string& msg)
      : Error("RankDeficientX: " + msg) {}
};

class NonFiniteInput : public Error {
 public:
  explicit NonFiniteInput(const std::string& msg)
      : Error("NonFiniteInput: " + msg) {}
};

class EmptyInput : public Error {
 public:
  explicit EmptyInput(const std::string& msg)
      : Error("EmptyInput: " + msg) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& msg)
      : Error("InvalidArgument: " + msg) {}
};

/// A factorization broke down (non-positive-definite matrix, ill-conditioning).
class NumericalFailure : public Error {
 public:
  explicit NumericalFailure(const std::string& msg)
      : Error("NumericalFailure: " + msg) {}
};

/// Refusal to compare ML and REML objective values against each other.
class CriterionMismatch : public Error {
 public:
  explicit CriterionMismatch(const std::string& msg)
      : Error("CriterionMismatch: " + msg) {}
};

}  // namespace mixedem

#endif  // MIXEDEM_ERRORS_HPP
