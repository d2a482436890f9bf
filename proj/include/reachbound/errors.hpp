#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace reachbound {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Text input could not be parsed; `position` is a byte offset into the source.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " (at position " + std::to_string(position) + ")"),
        position(position) {}
  std::size_t position;
};

// A monomial exceeds the declared degree bound of its polynomial.
class DegreeOverflow : public Error {
 public:
  DegreeOverflow(int poly_index, int monomial_degree, int declared_degree)
      : Error("degree overflow in polynomial " + std::to_string(poly_index) +
              ": monomial of degree " + std::to_string(monomial_degree) +
              " exceeds declared bound " + std::to_string(declared_degree)),
        poly_index(poly_index),
        monomial_degree(monomial_degree),
        declared_degree(declared_degree) {}
  int poly_index;
  int monomial_degree;
  int declared_degree;
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what) : Error(what) {}
};

// Jacobian (or generic matrix) does not have full row rank to working tolerance.
class NonSurjective : public Error {
 public:
  explicit NonSurjective(double sigma_q)
      : Error("matrix is not surjective (sigma_q = " + std::to_string(sigma_q) + ")"),
        sigma_q(sigma_q) {}
  double sigma_q;
};

class NotAZero : public Error {
 public:
  explicit NotAZero(double residual)
      : Error("point is not a zero of the tuple (residual " + std::to_string(residual) + ")"),
        residual(residual) {}
  double residual;
};

class NotOnBoundary : public Error {
 public:
  NotOnBoundary() : Error("point is not on the boundary of the unit cube") {}
};

class PreconditionViolated : public Error {
 public:
  explicit PreconditionViolated(const std::string& what) : Error(what) {}
};

class EmptySample : public Error {
 public:
  explicit EmptySample(const std::string& what) : Error(what) {}
};

class NoAdmissiblePairs : public Error {
 public:
  explicit NoAdmissiblePairs(const std::string& what) : Error(what) {}
};

class NoRouteApplicable : public Error {
 public:
  explicit NoRouteApplicable(const std::string& what) : Error(what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace reachbound
