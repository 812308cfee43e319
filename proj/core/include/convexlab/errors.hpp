#pragma once

#include <stdexcept>

namespace convexlab {

/// A P2 gradient was requested at a point outside the triangle.
class OutOfTriangleError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// A weak Hessian was requested for a basis function whose support reaches the boundary.
class BoundaryTestFunctionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sample points of a difference quotient, or a consistency patch, leave the domain.
class OutOfDomainError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// a and b are (numerically) parallel.
class DegenerateDirectionsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Every sample of an order fit is below the round-off floor.
class DegenerateDataError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace convexlab
