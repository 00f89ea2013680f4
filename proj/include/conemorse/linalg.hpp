#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

namespace conemorse::linalg {

/// Dense row-major real matrix.
///
/// Matrices built from signed flow counts carry an `integral` flag; rank
/// decisions for flagged matrices are made with exact integer elimination.
class RealMatrix {
 public:
  RealMatrix() = default;
  RealMatrix(std::size_t rows, std::size_t cols);
  RealMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static RealMatrix identity(std::size_t n);
  static RealMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static RealMatrix column(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  double operator()(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return entries_[r * cols_ + c]; }

  std::span<const double> entries() const noexcept { return entries_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(entries_).subspan(r * cols_, cols_);
  }
  std::vector<double> col(std::size_t c) const;

  bool integral() const noexcept { return integral_; }
  /// Marks the matrix as integer valued. Throws if an entry is not an integer.
  RealMatrix& mark_integral();

  RealMatrix transpose() const;
  double max_abs() const noexcept;
  bool all_finite() const noexcept;

  /// Columns [first, first+count).
  RealMatrix columns(std::size_t first, std::size_t count) const;

  /// Compares shape and entries; the integral flag is not part of the value.
  friend bool operator==(const RealMatrix& a, const RealMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.entries_ == b.entries_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
  bool integral_ = false;
};

RealMatrix operator+(const RealMatrix& a, const RealMatrix& b);
RealMatrix operator-(const RealMatrix& a, const RealMatrix& b);
RealMatrix operator*(double s, const RealMatrix& m);

/// Rank threshold: either automatic (max(rows,cols) * eps * max|entry|) or
/// an explicit absolute pivot threshold.
class Tolerance {
 public:
  static Tolerance automatic() { return Tolerance(std::nullopt); }
  static Tolerance absolute(double value);

  bool is_auto() const noexcept { return !value_.has_value(); }
  double resolve(const RealMatrix& m) const;

 private:
  explicit Tolerance(std::optional<double> v) : value_(v) {}
  std::optional<double> value_;
};

struct RankReport {
  std::size_t rank = 0;
  double pivot_tolerance = 0.0;
  /// Smallest pivot magnitude kept (0 when rank == 0).
  double smallest_accepted_pivot = 0.0;
  /// Largest pivot magnitude discarded (0 when the matrix has full rank).
  double largest_rejected_pivot = 0.0;
  bool exact = false;

  /// True when some pivot sits within three orders of magnitude of the
  /// threshold on either side, i.e. the accepted/rejected gap around the
  /// tolerance spans fewer than six orders of magnitude.
  bool uncertain() const noexcept;
};

/// Rank by complete-pivoting Gaussian elimination, or by fraction-free
/// integer elimination when the matrix is flagged integral.
RankReport rank(const RealMatrix& m, Tolerance tol = Tolerance::automatic());

/// Exact matrix product; every dot product uses pairwise summation.
RealMatrix compose(const RealMatrix& a, const RealMatrix& b);

/// Orthonormal columns spanning the null space; column count is cols - rank.
RealMatrix kernel_basis(const RealMatrix& m, Tolerance tol = Tolerance::automatic());

/// Orthonormal columns spanning the column space; column count is rank.
RealMatrix range_basis(const RealMatrix& m, Tolerance tol = Tolerance::automatic());

/// Orthonormal columns spanning the orthogonal complement of the column space.
RealMatrix cokernel_basis(const RealMatrix& m, Tolerance tol = Tolerance::automatic());

/// Minimum-norm solution of m x = b for b in the column space of m.
std::vector<double> solve_in_range(const RealMatrix& m, std::span<const double> b,
                                   Tolerance tol = Tolerance::automatic());

/// Block stacking helpers; shapes must agree.
RealMatrix vstack(const RealMatrix& top, const RealMatrix& bottom);
RealMatrix hstack(const RealMatrix& left, const RealMatrix& right);

double max_abs_diff(const RealMatrix& a, const RealMatrix& b);

/// Pairwise summation of a sequence.
double pairwise_sum(std::span<const double> values);

}  // namespace conemorse::linalg
