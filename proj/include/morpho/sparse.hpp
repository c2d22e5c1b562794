#pragma once

/// Compressed-row sparse matrices and the dense-vector helpers used by the
/// assemblers, the Krylov solver and the multigrid hierarchy.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace morpho {

using Vector = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

/// Compressed-row matrix. Column indices are sorted and unique within each
/// row; stored zeros are allowed.
class CsrMatrix {
 public:
  CsrMatrix() = default;

  CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> offsets,
            std::vector<std::size_t> columns, std::vector<double> values)
      : rows_(rows),
        cols_(cols),
        offsets_(std::move(offsets)),
        columns_(std::move(columns)),
        values_(std::move(values)) {
    if (offsets_.size() != rows_ + 1 || offsets_.front() != 0 ||
        offsets_.back() != columns_.size() || columns_.size() != values_.size())
      throw std::invalid_argument("CsrMatrix: inconsistent offsets");
    for (std::size_t i = 0; i < rows_; ++i) {
      if (offsets_[i] > offsets_[i + 1]) throw std::invalid_argument("CsrMatrix: decreasing offsets");
      for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
        if (columns_[k] >= cols_) throw std::invalid_argument("CsrMatrix: column out of range");
        if (k > offsets_[i] && columns_[k] <= columns_[k - 1])
          throw std::invalid_argument("CsrMatrix: columns not sorted/unique in row " + std::to_string(i));
      }
    }
  }

  static CsrMatrix identity(std::size_t n) { return diagonal(Vector(n, 1.0)); }

  static CsrMatrix diagonal(std::span<const double> d) {
    std::vector<std::size_t> off(d.size() + 1), col(d.size());
    std::iota(off.begin(), off.end(), std::size_t{0});
    std::iota(col.begin(), col.end(), std::size_t{0});
    return {d.size(), d.size(), std::move(off), std::move(col), Vector(d.begin(), d.end())};
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const std::size_t> row_offsets() const { return offsets_; }
  std::span<const std::size_t> col_indices() const { return columns_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  std::span<const std::size_t> row_columns(std::size_t i) const {
    return {columns_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::span<const double> row_values(std::size_t i) const {
    return {values_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::span<double> row_values(std::size_t i) {
    return {values_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const {
    if (x.size() != cols_ || y.size() != rows_) throw std::invalid_argument("CsrMatrix::multiply: shape mismatch");
    for (std::size_t i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) s += values_[k] * x[columns_[k]];
      y[i] = s;
    }
  }

  Vector operator*(std::span<const double> x) const {
    Vector y(rows_);
    multiply(x, y);
    return y;
  }

  /// Entry (i, j), zero when not stored.
  double at(std::size_t i, std::size_t j) const {
    auto cols = row_columns(i);
    auto it = std::lower_bound(cols.begin(), cols.end(), j);
    if (it == cols.end() || *it != j) return 0.0;
    return values_[offsets_[i] + static_cast<std::size_t>(it - cols.begin())];
  }

  Vector diagonal() const {
    Vector d(std::min(rows_, cols_), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
    return d;
  }

  Vector row_sums() const {
    Vector s(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i)
      for (double v : row_values(i)) s[i] += v;
    return s;
  }

  CsrMatrix transpose() const {
    std::vector<std::size_t> off(cols_ + 1, 0);
    for (auto c : columns_) ++off[c + 1];
    for (std::size_t j = 0; j < cols_; ++j) off[j + 1] += off[j];
    std::vector<std::size_t> col(nnz());
    Vector val(nnz());
    auto next = off;
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
        auto dst = next[columns_[k]]++;
        col[dst] = i;
        val[dst] = values_[k];
      }
    return {cols_, rows_, std::move(off), std::move(col), std::move(val)};
  }

  void scale(double a) {
    for (auto& v : values_) v *= a;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::size_t> columns_;
  Vector values_;
};

/// Coordinate-format accumulator; duplicates are summed on build().
class TripletBuilder {
 public:
  TripletBuilder(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {}

  void reserve(std::size_t n) { entries_.reserve(n); }

  void add(std::size_t i, std::size_t j, double v) {
    if (i >= rows_ || j >= cols_) throw std::out_of_range("TripletBuilder: index out of range");
    entries_.emplace_back(i, j, v);
  }

  CsrMatrix build() const {
    auto sorted = entries_;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
      return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
    });
    std::vector<std::size_t> off(rows_ + 1, 0), col;
    Vector val;
    col.reserve(sorted.size());
    val.reserve(sorted.size());
    for (std::size_t k = 0; k < sorted.size();) {
      auto [i, j, v] = sorted[k];
      double s = v;
      std::size_t m = k + 1;
      while (m < sorted.size() && std::get<0>(sorted[m]) == i && std::get<1>(sorted[m]) == j) s += std::get<2>(sorted[m++]);
      col.push_back(j);
      val.push_back(s);
      ++off[i + 1];
      k = m;
    }
    for (std::size_t i = 0; i < rows_; ++i) off[i + 1] += off[i];
    return {rows_, cols_, std::move(off), std::move(col), std::move(val)};
  }

 private:
  std::size_t rows_, cols_;
  std::vector<std::tuple<std::size_t, std::size_t, double>> entries_;
};

/// a*A + b*B on the union sparsity pattern.
inline CsrMatrix add(const CsrMatrix& A, const CsrMatrix& B, double a = 1.0, double b = 1.0) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) throw std::invalid_argument("add: shape mismatch");
  std::vector<std::size_t> off(A.rows() + 1, 0), col;
  Vector val;
  col.reserve(A.nnz() + B.nnz());
  val.reserve(A.nnz() + B.nnz());
  for (std::size_t i = 0; i < A.rows(); ++i) {
    auto ca = A.row_columns(i), cb = B.row_columns(i);
    auto va = A.row_values(i), vb = B.row_values(i);
    std::size_t p = 0, q = 0;
    while (p < ca.size() || q < cb.size()) {
      if (q == cb.size() || (p < ca.size() && ca[p] < cb[q])) {
        col.push_back(ca[p]);
        val.push_back(a * va[p++]);
      } else if (p == ca.size() || cb[q] < ca[p]) {
        col.push_back(cb[q]);
        val.push_back(b * vb[q++]);
      } else {
        col.push_back(ca[p]);
        val.push_back(a * va[p++] + b * vb[q++]);
      }
    }
    off[i + 1] = col.size();
  }
  return {A.rows(), A.cols(), std::move(off), std::move(col), std::move(val)};
}

/// Sparse product A*B (row-by-row accumulation with a dense marker).
inline CsrMatrix multiply(const CsrMatrix& A, const CsrMatrix& B) {
  if (A.cols() != B.rows()) throw std::invalid_argument("multiply: shape mismatch");
  std::vector<std::size_t> off(A.rows() + 1, 0), col;
  Vector val;
  std::vector<std::ptrdiff_t> marker(B.cols(), -1);
  Vector acc(B.cols(), 0.0);
  std::vector<std::size_t> touched;
  for (std::size_t i = 0; i < A.rows(); ++i) {
    touched.clear();
    auto ca = A.row_columns(i);
    auto va = A.row_values(i);
    for (std::size_t p = 0; p < ca.size(); ++p) {
      auto cb = B.row_columns(ca[p]);
      auto vb = B.row_values(ca[p]);
      for (std::size_t q = 0; q < cb.size(); ++q) {
        auto j = cb[q];
        if (marker[j] != static_cast<std::ptrdiff_t>(i)) {
          marker[j] = static_cast<std::ptrdiff_t>(i);
          acc[j] = 0.0;
          touched.push_back(j);
        }
        acc[j] += va[p] * vb[q];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (auto j : touched) {
      col.push_back(j);
      val.push_back(acc[j]);
    }
    off[i + 1] = col.size();
  }
  return {A.rows(), B.cols(), std::move(off), std::move(col), std::move(val)};
}

/// Assemble a block matrix from a grid of optional blocks (nullptr = zero).
/// Row heights / column widths are taken from the non-null blocks.
inline CsrMatrix block_matrix(const std::vector<std::vector<const CsrMatrix*>>& grid) {
  const std::size_t br = grid.size();
  const std::size_t bc = br ? grid[0].size() : 0;
  std::vector<std::size_t> heights(br, 0), widths(bc, 0);
  for (std::size_t I = 0; I < br; ++I) {
    if (grid[I].size() != bc) throw std::invalid_argument("block_matrix: ragged grid");
    for (std::size_t J = 0; J < bc; ++J)
      if (const auto* m = grid[I][J]) {
        if ((heights[I] && heights[I] != m->rows()) || (widths[J] && widths[J] != m->cols()))
          throw std::invalid_argument("block_matrix: inconsistent block shapes");
        heights[I] = m->rows();
        widths[J] = m->cols();
      }
  }
  std::vector<std::size_t> roff(br + 1, 0), coff(bc + 1, 0);
  for (std::size_t I = 0; I < br; ++I) roff[I + 1] = roff[I] + heights[I];
  for (std::size_t J = 0; J < bc; ++J) coff[J + 1] = coff[J] + widths[J];
  std::vector<std::size_t> off(roff[br] + 1, 0), col;
  Vector val;
  for (std::size_t I = 0; I < br; ++I)
    for (std::size_t i = 0; i < heights[I]; ++i) {
      for (std::size_t J = 0; J < bc; ++J)
        if (const auto* m = grid[I][J]) {
          auto c = m->row_columns(i);
          auto v = m->row_values(i);
          for (std::size_t k = 0; k < c.size(); ++k) {
            col.push_back(coff[J] + c[k]);
            val.push_back(v[k]);
          }
        }
      off[roff[I] + i + 1] = col.size();
    }
  return {roff[br], coff[bc], std::move(off), std::move(col), std::move(val)};
}

}  // namespace morpho
