#pragma once

#include <stdexcept>
#include <string>

namespace spdalp {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Array shapes do not agree (state/action counts, feature dimension, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A value lies outside the domain of the operation (negative weights,
/// non-stochastic rows, points on the boundary of a Bregman domain, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The average-cost chain does not have a unique stationary distribution.
class ErgodicityError : public Error {
 public:
  using Error::Error;
};

/// The hyperplane {θ : θᵀ1 = 1} does not meet the interior of the domain.
class InfeasibleGeometryError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class IterationLimitError : public Error {
 public:
  using Error::Error;
};

/// A sample (s,a) has zero mass under the uniform mixture of feature columns.
class SamplingSupportError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace spdalp
