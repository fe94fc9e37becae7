#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace odequad {

// Base of every library error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Evaluation outside a function's natural domain (ln of non-positive,
// division by zero, non-finite result).
class DomainError : public Error {
 public:
  using Error::Error;
};

class QuadratureError : public Error {
 public:
  using Error::Error;
};

// A closed-form solution was asked for its value at (or numerically at) a
// movable pole.
class PoleError : public Error {
 public:
  PoleError(const std::string& what, double x) : Error(what), x_(x) {}
  double x() const noexcept { return x_; }

 private:
  double x_;
};

class ClassificationError : public Error {
 public:
  ClassificationError(const std::string& what, std::vector<double> candidates = {})
      : Error(what), candidates_(std::move(candidates)) {}
  const std::vector<double>& candidates() const noexcept { return candidates_; }

 private:
  std::vector<double> candidates_;
};

// Construction preconditions violated: a coefficient vanishing inside the
// domain, an unsupported root configuration, an infeasible constraint.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double last_x) : Error(what), last_x_(last_x) {}
  double last_good_x() const noexcept { return last_x_; }

 private:
  double last_x_;
};

class VerificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace odequad
