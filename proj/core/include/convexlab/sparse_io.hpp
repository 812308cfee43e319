#pragma once

#include <iosfwd>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "convexlab/constraints.hpp"
#include "convexlab/qp.hpp"

namespace convexlab {

// Coordinate text format: a "rows cols nnz" line, then one "i j value" line per
// entry with 0-based indices and 17 significant digits.

void write_coordinate(std::ostream& out, const SparseMatrix& m);
SparseMatrix read_coordinate(std::istream& in);

/// Dense vector: a length line, then one value per line.
void write_vector(std::ostream& out, const Eigen::VectorXd& v);
Eigen::VectorXd read_vector(std::istream& in);

/// Writes A to `path` and one "kind id" line per row to `path + ".labels"`.
void save_constraints(const std::string& path, const LinearConstraintSet& set);
LinearConstraintSet load_constraints(const std::string& path, int degree = 1);

/// Writes <prefix>_P.txt, <prefix>_q.txt, <prefix>_A.txt, <prefix>_lower.txt and
/// <prefix>_pinned.txt ("dof value" lines).
void save_qp(const std::string& prefix, const QPProblem& p);
QPProblem load_qp(const std::string& prefix);

}  // namespace convexlab
