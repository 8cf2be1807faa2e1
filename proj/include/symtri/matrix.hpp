#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"

namespace symtri {

enum class Kernel { SYRK, SYR2K, SYMM };

inline const char* to_string(Kernel k) {
  switch (k) {
    case Kernel::SYRK: return "syrk";
    case Kernel::SYR2K: return "syr2k";
    case Kernel::SYMM: return "symm";
  }
  return "?";
}

inline Kernel parse_kernel(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (s == "syrk") return Kernel::SYRK;
  if (s == "syr2k") return Kernel::SYR2K;
  if (s == "symm") return Kernel::SYMM;
  throw Error(ErrorKind::InvalidArgument, "unknown kernel '" + s + "'");
}

// Number of non-symmetric matrices taking part in the inner loop.
inline int kernel_m(Kernel k) { return k == Kernel::SYRK ? 1 : 2; }

// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, 0.0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * cols_ + j; }
  double& operator()(int i, int j) { return data_[index(i, j)]; }
  double operator()(int i, int j) const { return data_[index(i, j)]; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

// Symmetric matrix stored as its packed lower triangle, row by row.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int n) : n_(n), data_(static_cast<std::size_t>(n) * (n + 1) / 2, 0.0) {}

  int n() const { return n_; }
  std::size_t size() const { return data_.size(); }
  static std::size_t index(int i, int j) {
    if (i < j) std::swap(i, j);
    return static_cast<std::size_t>(i) * (i + 1) / 2 + j;
  }
  double& operator()(int i, int j) { return data_[index(i, j)]; }
  double operator()(int i, int j) const { return data_[index(i, j)]; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

 private:
  int n_ = 0;
  std::vector<double> data_;
};

// Operands of one kernel call. For SYRK/SYR2K `sym` is the output C; for SYMM
// `sym` is the input A and `C` the dense output. Unused members stay empty.
struct KernelInstance {
  Kernel kernel = Kernel::SYRK;
  int n1 = 0;
  int n2 = 0;
  Matrix A;    // SYRK, SYR2K
  Matrix B;    // SYR2K, SYMM
  SymMatrix sym;
  Matrix C;    // SYMM

  int m() const { return kernel_m(kernel); }

  void check() const {
    auto bad = [](const std::string& what) { throw Error(ErrorKind::DimensionMismatch, what); };
    if (n1 < 1 || n2 < 0) bad("n1 must be >= 1 and n2 >= 0");
    if (sym.n() != n1) bad("symmetric operand has order " + std::to_string(sym.n()) + ", expected " + std::to_string(n1));
    auto dense = [&](const Matrix& x, const char* name) {
      if (x.rows() != n1 || x.cols() != n2)
        bad(std::string(name) + " is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) + ", expected " +
            std::to_string(n1) + "x" + std::to_string(n2));
    };
    if (kernel != Kernel::SYMM) dense(A, "A");
    if (kernel != Kernel::SYRK) dense(B, "B");
    if (kernel == Kernel::SYMM) dense(C, "C");
  }

  // The matrix the kernel updates, flattened (packed triangle or row-major C).
  const std::vector<double>& output() const { return kernel == Kernel::SYMM ? C.data() : sym.data(); }
  std::vector<double>& output() { return kernel == Kernel::SYMM ? C.data() : sym.data(); }
};

// Dense reference kernels with the textbook loop nests; summation order is
// i, then j <= i, then k.
inline void reference_kernel(KernelInstance& x) {
  x.check();
  const int n1 = x.n1, n2 = x.n2;
  switch (x.kernel) {
    case Kernel::SYRK:
      for (int i = 0; i < n1; ++i)
        for (int j = 0; j <= i; ++j)
          for (int k = 0; k < n2; ++k) x.sym(i, j) += x.A(i, k) * x.A(j, k);
      break;
    case Kernel::SYR2K:
      for (int i = 0; i < n1; ++i)
        for (int j = 0; j <= i; ++j)
          for (int k = 0; k < n2; ++k) x.sym(i, j) += x.A(i, k) * x.B(j, k) + x.B(i, k) * x.A(j, k);
      break;
    case Kernel::SYMM:
      for (int i = 0; i < n1; ++i)
        for (int j = 0; j < i; ++j)
          for (int k = 0; k < n2; ++k) {
            x.C(i, k) += x.sym(i, j) * x.B(j, k);
            x.C(j, k) += x.sym(i, j) * x.B(i, k);
          }
      for (int i = 0; i < n1; ++i)
        for (int k = 0; k < n2; ++k) x.C(i, k) += x.sym(i, i) * x.B(i, k);
      break;
  }
}

// max |a - b| / max |b|, with 0/0 treated as 0.
inline double max_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return INFINITY;
  double diff = 0, scale = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  if (diff == 0) return 0;
  return scale == 0 ? INFINITY : diff / scale;
}

}  // namespace symtri
