#include "convexlab/sparse_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "convexlab/report.hpp"

namespace convexlab {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return in;
}

template <typename Matrix>
void write_entries(std::ostream& out, const Matrix& m) {
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  for (int k = 0; k < m.outerSize(); ++k) {
    for (typename Matrix::InnerIterator it(m, k); it; ++it) {
      out << it.row() << ' ' << it.col() << ' ' << format_double(it.value()) << '\n';
    }
  }
}

}  // namespace

void write_coordinate(std::ostream& out, const SparseMatrix& m) { write_entries(out, m); }

SparseMatrix read_coordinate(std::istream& in) {
  long rows = 0, cols = 0, nnz = 0;
  if (!(in >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0) {
    throw std::runtime_error("coordinate file: bad size line");
  }
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(nnz));
  for (long k = 0; k < nnz; ++k) {
    long i = 0, j = 0;
    double v = 0.0;
    if (!(in >> i >> j >> v)) throw std::runtime_error("coordinate file: truncated entries");
    if (i < 0 || i >= rows || j < 0 || j >= cols) throw std::runtime_error("coordinate file: index out of range");
    trips.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
  }
  SparseMatrix m(rows, cols);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
  out << v.size() << '\n';
  for (Eigen::Index i = 0; i < v.size(); ++i) out << format_double(v[i]) << '\n';
}

Eigen::VectorXd read_vector(std::istream& in) {
  long n = 0;
  if (!(in >> n) || n < 0) throw std::runtime_error("vector file: bad length");
  Eigen::VectorXd v(n);
  for (long i = 0; i < n; ++i) {
    if (!(in >> v[i])) throw std::runtime_error("vector file: truncated");
  }
  return v;
}

void save_constraints(const std::string& path, const LinearConstraintSet& set) {
  auto out = open_out(path);
  write_entries(out, set.A);
  auto labels = open_out(path + ".labels");
  for (const RowLabel& l : set.labels) labels << l.kind << ' ' << l.id << '\n';
}

LinearConstraintSet load_constraints(const std::string& path, int degree) {
  auto in = open_in(path);
  LinearConstraintSet set;
  set.A = read_coordinate(in);
  set.degree = degree;
  auto labels = open_in(path + ".labels");
  RowLabel l;
  while (labels >> l.kind >> l.id) set.labels.push_back(l);
  if (static_cast<int>(set.labels.size()) != set.rows()) {
    throw std::runtime_error("constraint labels: row count mismatch");
  }
  return set;
}

void save_qp(const std::string& prefix, const QPProblem& p) {
  {
    auto out = open_out(prefix + "_P.txt");
    write_coordinate(out, p.P);
  }
  {
    auto out = open_out(prefix + "_q.txt");
    write_vector(out, p.q);
  }
  {
    auto out = open_out(prefix + "_A.txt");
    write_entries(out, p.A);
  }
  {
    auto out = open_out(prefix + "_lower.txt");
    write_vector(out, p.lower_bounds());
  }
  auto out = open_out(prefix + "_pinned.txt");
  for (const auto& [dof, value] : p.pinned) out << dof << ' ' << format_double(value) << '\n';
}

QPProblem load_qp(const std::string& prefix) {
  QPProblem p;
  {
    auto in = open_in(prefix + "_P.txt");
    p.P = read_coordinate(in);
  }
  {
    auto in = open_in(prefix + "_q.txt");
    p.q = read_vector(in);
  }
  {
    auto in = open_in(prefix + "_A.txt");
    p.A = read_coordinate(in);
  }
  {
    auto in = open_in(prefix + "_lower.txt");
    p.lower = read_vector(in);
  }
  auto in = open_in(prefix + "_pinned.txt");
  int dof = 0;
  double value = 0.0;
  while (in >> dof >> value) p.pinned[dof] = value;
  p.validate();
  return p;
}

}  // namespace convexlab
