#include "conemorse/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

#include <boost/multiprecision/cpp_int.hpp>

#include "conemorse/error.hpp"

namespace conemorse::linalg {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_finite(const RealMatrix& m) {
  if (!m.all_finite()) {
    throw Error(ErrorCode::kNonFiniteEntry, "matrix contains NaN or Inf");
  }
}

std::string shape(const RealMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// Householder QR with column pivoting. Returns the explicit orthogonal
// factor Q (rows x rows); R is discarded because callers only need bases.
RealMatrix pivoted_qr_q(const RealMatrix& m) {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  RealMatrix a = m;
  RealMatrix q = RealMatrix::identity(rows);
  const std::size_t steps = std::min(rows, cols);
  std::vector<double> v(rows);
  std::vector<std::size_t> order(cols);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t k = 0; k < steps; ++k) {
    std::size_t best = k;
    double best_norm = -1.0;
    for (std::size_t j = k; j < cols; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < rows; ++i) s += a(i, j) * a(i, j);
      if (s > best_norm) {
        best_norm = s;
        best = j;
      }
    }
    if (best != k) {
      for (std::size_t i = 0; i < rows; ++i) std::swap(a(i, k), a(i, best));
    }
    const double norm = std::sqrt(best_norm);
    if (norm == 0.0) break;

    const double alpha = a(k, k) >= 0.0 ? -norm : norm;
    std::fill(v.begin(), v.end(), 0.0);
    for (std::size_t i = k; i < rows; ++i) v[i] = a(i, k);
    v[k] -= alpha;
    double vnorm2 = 0.0;
    for (std::size_t i = k; i < rows; ++i) vnorm2 += v[i] * v[i];
    if (vnorm2 == 0.0) continue;
    const double beta = 2.0 / vnorm2;

    for (std::size_t j = k; j < cols; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < rows; ++i) s += v[i] * a(i, j);
      s *= beta;
      for (std::size_t i = k; i < rows; ++i) a(i, j) -= s * v[i];
    }
    for (std::size_t r = 0; r < rows; ++r) {
      double s = 0.0;
      for (std::size_t i = k; i < rows; ++i) s += q(r, i) * v[i];
      s *= beta;
      for (std::size_t i = k; i < rows; ++i) q(r, i) -= s * v[i];
    }
  }
  return q;
}

RankReport exact_integer_rank(const RealMatrix& m) {
  using boost::multiprecision::cpp_int;
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  std::vector<cpp_int> a(rows * cols);
  for (std::size_t i = 0; i < rows * cols; ++i) {
    a[i] = cpp_int(static_cast<std::int64_t>(m.entries()[i]));
  }
  auto at = [&](std::size_t r, std::size_t c) -> cpp_int& { return a[r * cols + c]; };

  RankReport report;
  report.exact = true;
  cpp_int prev = 1;
  std::size_t k = 0;
  for (; k < std::min(rows, cols); ++k) {
    std::size_t pr = rows, pc = cols;
    for (std::size_t j = k; j < cols && pr == rows; ++j) {
      for (std::size_t i = k; i < rows; ++i) {
        if (at(i, j) != 0) {
          pr = i;
          pc = j;
          break;
        }
      }
    }
    if (pr == rows) break;
    if (pr != k) {
      for (std::size_t j = 0; j < cols; ++j) std::swap(at(pr, j), at(k, j));
    }
    if (pc != k) {
      for (std::size_t i = 0; i < rows; ++i) std::swap(at(i, pc), at(i, k));
    }
    for (std::size_t i = k + 1; i < rows; ++i) {
      for (std::size_t j = k + 1; j < cols; ++j) {
        at(i, j) = (at(k, k) * at(i, j) - at(i, k) * at(k, j)) / prev;
      }
      at(i, k) = 0;
    }
    prev = at(k, k);
  }
  report.rank = k;
  report.smallest_accepted_pivot = k > 0 ? 1.0 : 0.0;
  return report;
}

}  // namespace

RealMatrix::RealMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), entries_(rows * cols, 0.0) {}

RealMatrix::RealMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (entries_.size() != rows * cols) {
    throw Error(ErrorCode::kShapeMismatch, "entry count does not match " +
                                               std::to_string(rows) + "x" + std::to_string(cols));
  }
}

RealMatrix RealMatrix::identity(std::size_t n) {
  RealMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  m.integral_ = true;
  return m;
}

RealMatrix RealMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> entries;
  entries.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw Error(ErrorCode::kShapeMismatch, "ragged rows");
    entries.insert(entries.end(), row.begin(), row.end());
  }
  return RealMatrix(r, c, std::move(entries));
}

RealMatrix RealMatrix::column(std::span<const double> values) {
  return RealMatrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

std::vector<double> RealMatrix::col(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

RealMatrix& RealMatrix::mark_integral() {
  for (double x : entries_) {
    if (!std::isfinite(x) || std::nearbyint(x) != x || std::abs(x) > 9.0e15) {
      throw Error(ErrorCode::kInvalidArgument, "integral flag on non-integer entry");
    }
  }
  integral_ = true;
  return *this;
}

RealMatrix RealMatrix::transpose() const {
  RealMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  t.integral_ = integral_;
  return t;
}

double RealMatrix::max_abs() const noexcept {
  double m = 0.0;
  for (double x : entries_) m = std::max(m, std::abs(x));
  return m;
}

bool RealMatrix::all_finite() const noexcept {
  return std::all_of(entries_.begin(), entries_.end(), [](double x) { return std::isfinite(x); });
}

RealMatrix RealMatrix::columns(std::size_t first, std::size_t count) const {
  if (first + count > cols_) throw Error(ErrorCode::kShapeMismatch, "column range out of bounds");
  RealMatrix out(rows_, count);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = (*this)(r, first + c);
  return out;
}

RealMatrix operator+(const RealMatrix& a, const RealMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::kShapeMismatch, shape(a) + " + " + shape(b));
  }
  RealMatrix out(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = a(r, c) + b(r, c);
  return out;
}

RealMatrix operator-(const RealMatrix& a, const RealMatrix& b) { return a + (-1.0) * b; }

RealMatrix operator*(double s, const RealMatrix& m) {
  RealMatrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = s * m(r, c);
  return out;
}

Tolerance Tolerance::absolute(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(ErrorCode::kInvalidArgument, "tolerance must be positive and finite");
  }
  return Tolerance(value);
}

double Tolerance::resolve(const RealMatrix& m) const {
  if (value_) return *value_;
  return static_cast<double>(std::max(m.rows(), m.cols())) * kEps * m.max_abs();
}

bool RankReport::uncertain() const noexcept {
  if (exact) return false;
  constexpr double kBand = 1.0e3;
  if (rank > 0 && smallest_accepted_pivot < kBand * pivot_tolerance) return true;
  if (largest_rejected_pivot > pivot_tolerance / kBand) return true;
  return false;
}

RankReport rank(const RealMatrix& m, Tolerance tol) {
  require_finite(m);
  if (m.integral()) return exact_integer_rank(m);

  RankReport report;
  report.pivot_tolerance = tol.resolve(m);
  RealMatrix a = m;
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  const std::size_t steps = std::min(rows, cols);
  double smallest = std::numeric_limits<double>::infinity();
  std::size_t k = 0;
  for (; k < steps; ++k) {
    std::size_t pr = k, pc = k;
    double best = -1.0;
    for (std::size_t i = k; i < rows; ++i) {
      for (std::size_t j = k; j < cols; ++j) {
        const double v = std::abs(a(i, j));
        if (v > best) {
          best = v;
          pr = i;
          pc = j;
        }
      }
    }
    if (best <= report.pivot_tolerance) {
      report.largest_rejected_pivot = best;
      break;
    }
    smallest = std::min(smallest, best);
    if (pr != k) {
      for (std::size_t j = 0; j < cols; ++j) std::swap(a(pr, j), a(k, j));
    }
    if (pc != k) {
      for (std::size_t i = 0; i < rows; ++i) std::swap(a(i, pc), a(i, k));
    }
    const double pivot = a(k, k);
    for (std::size_t i = k + 1; i < rows; ++i) {
      const double factor = a(i, k) / pivot;
      if (factor == 0.0) continue;
      for (std::size_t j = k + 1; j < cols; ++j) a(i, j) -= factor * a(k, j);
      a(i, k) = 0.0;
    }
  }
  report.rank = k;
  report.smallest_accepted_pivot = k > 0 ? smallest : 0.0;
  return report;
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 8;
  if (values.size() <= kBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

RealMatrix compose(const RealMatrix& a, const RealMatrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::kShapeMismatch, shape(a) + " * " + shape(b));
  }
  RealMatrix out(a.rows(), b.cols());
  std::vector<double> terms(a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < b.cols(); ++c) {
      for (std::size_t k = 0; k < a.cols(); ++k) terms[k] = a(r, k) * b(k, c);
      out(r, c) = pairwise_sum(terms);
    }
  }
  if (a.integral() && b.integral() && out.max_abs() < 9.0e15) out.mark_integral();
  return out;
}

RealMatrix kernel_basis(const RealMatrix& m, Tolerance tol) {
  require_finite(m);
  const std::size_t r = rank(m, tol).rank;
  const std::size_t n = m.cols();
  if (r == n) return RealMatrix(n, 0);
  if (r == 0) return RealMatrix::identity(n);
  const RealMatrix q = pivoted_qr_q(m.transpose());
  return q.columns(r, n - r);
}

RealMatrix range_basis(const RealMatrix& m, Tolerance tol) {
  require_finite(m);
  const std::size_t r = rank(m, tol).rank;
  if (r == 0) return RealMatrix(m.rows(), 0);
  const RealMatrix q = pivoted_qr_q(m);
  return q.columns(0, r);
}

RealMatrix cokernel_basis(const RealMatrix& m, Tolerance tol) {
  require_finite(m);
  const std::size_t r = rank(m, tol).rank;
  const std::size_t n = m.rows();
  if (r == 0) return RealMatrix::identity(n);
  if (r == n) return RealMatrix(n, 0);
  const RealMatrix q = pivoted_qr_q(m);
  return q.columns(r, n - r);
}

std::vector<double> solve_in_range(const RealMatrix& m, std::span<const double> b, Tolerance tol) {
  if (b.size() != m.rows()) throw Error(ErrorCode::kShapeMismatch, "right-hand side length");
  const RealMatrix left = range_basis(m, tol);
  const RealMatrix right = range_basis(m.transpose(), tol);
  const std::size_t r = left.cols();
  std::vector<double> x(m.cols(), 0.0);
  if (r == 0) return x;

  RealMatrix system = compose(compose(left.transpose(), m), right);
  std::vector<double> rhs(r);
  {
    const RealMatrix lb = compose(left.transpose(), RealMatrix::column(b));
    for (std::size_t i = 0; i < r; ++i) rhs[i] = lb(i, 0);
  }
  // Gaussian elimination with complete pivoting on the r x r system.
  std::vector<std::size_t> col_order(r);
  std::iota(col_order.begin(), col_order.end(), std::size_t{0});
  for (std::size_t k = 0; k < r; ++k) {
    std::size_t pr = k, pc = k;
    double best = -1.0;
    for (std::size_t i = k; i < r; ++i)
      for (std::size_t j = k; j < r; ++j)
        if (std::abs(system(i, j)) > best) {
          best = std::abs(system(i, j));
          pr = i;
          pc = j;
        }
    if (best == 0.0) throw Error(ErrorCode::kDegenerateSystem, "singular reduced system");
    if (pr != k) {
      for (std::size_t j = 0; j < r; ++j) std::swap(system(pr, j), system(k, j));
      std::swap(rhs[pr], rhs[k]);
    }
    if (pc != k) {
      for (std::size_t i = 0; i < r; ++i) std::swap(system(i, pc), system(i, k));
      std::swap(col_order[pc], col_order[k]);
    }
    for (std::size_t i = k + 1; i < r; ++i) {
      const double f = system(i, k) / system(k, k);
      for (std::size_t j = k; j < r; ++j) system(i, j) -= f * system(k, j);
      rhs[i] -= f * rhs[k];
    }
  }
  std::vector<double> y_perm(r);
  for (std::size_t k = r; k-- > 0;) {
    double s = rhs[k];
    for (std::size_t j = k + 1; j < r; ++j) s -= system(k, j) * y_perm[j];
    y_perm[k] = s / system(k, k);
  }
  std::vector<double> y(r);
  for (std::size_t k = 0; k < r; ++k) y[col_order[k]] = y_perm[k];
  const RealMatrix xm = compose(right, RealMatrix::column(y));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = xm(i, 0);
  return x;
}

RealMatrix vstack(const RealMatrix& top, const RealMatrix& bottom) {
  if (top.cols() != bottom.cols()) throw Error(ErrorCode::kShapeMismatch, "vstack column counts");
  RealMatrix out(top.rows() + bottom.rows(), top.cols());
  for (std::size_t r = 0; r < top.rows(); ++r)
    for (std::size_t c = 0; c < top.cols(); ++c) out(r, c) = top(r, c);
  for (std::size_t r = 0; r < bottom.rows(); ++r)
    for (std::size_t c = 0; c < top.cols(); ++c) out(top.rows() + r, c) = bottom(r, c);
  return out;
}

RealMatrix hstack(const RealMatrix& left, const RealMatrix& right) {
  if (left.rows() != right.rows()) throw Error(ErrorCode::kShapeMismatch, "hstack row counts");
  RealMatrix out(left.rows(), left.cols() + right.cols());
  for (std::size_t r = 0; r < left.rows(); ++r) {
    for (std::size_t c = 0; c < left.cols(); ++c) out(r, c) = left(r, c);
    for (std::size_t c = 0; c < right.cols(); ++c) out(r, left.cols() + c) = right(r, c);
  }
  return out;
}

double max_abs_diff(const RealMatrix& a, const RealMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::kShapeMismatch, shape(a) + " vs " + shape(b));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.entries().size(); ++i) {
    m = std::max(m, std::abs(a.entries()[i] - b.entries()[i]));
  }
  return m;
}

}  // namespace conemorse::linalg
