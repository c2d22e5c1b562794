#pragma once

/// Linear operators, full right-preconditioned GMRES and a small dense LU.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "morpho/sparse.hpp"

namespace morpho {

/// Shape plus a linear action y = A x (y is overwritten).
class LinearOperator {
 public:
  using Apply = std::function<void(std::span<const double>, std::span<double>)>;

  LinearOperator(std::size_t rows, std::size_t cols, Apply apply)
      : rows_(rows), cols_(cols), apply_(std::move(apply)) {
    if (!apply_) throw std::invalid_argument("LinearOperator: empty apply");
  }

  static LinearOperator from_matrix(std::shared_ptr<const CsrMatrix> m) {
    if (!m) throw std::invalid_argument("LinearOperator: null matrix");
    const auto r = m->rows(), c = m->cols();
    return {r, c, [m = std::move(m)](std::span<const double> x, std::span<double> y) { m->multiply(x, y); }};
  }
  static LinearOperator from_matrix(CsrMatrix m) { return from_matrix(std::make_shared<const CsrMatrix>(std::move(m))); }

  static LinearOperator identity(std::size_t n) {
    return {n, n, [](std::span<const double> x, std::span<double> y) { std::copy(x.begin(), x.end(), y.begin()); }};
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  void apply(std::span<const double> x, std::span<double> y) const {
    if (x.size() != cols_ || y.size() != rows_) throw std::invalid_argument("LinearOperator: shape mismatch");
    apply_(x, y);
  }

  Vector operator()(std::span<const double> x) const {
    Vector y(rows_);
    apply(x, y);
    return y;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  Apply apply_;
};

/// diag(B_1, ..., B_k) acting on consecutive segments.
inline LinearOperator block_diag_operator(std::vector<LinearOperator> blocks) {
  std::size_t n = 0;
  for (const auto& b : blocks) {
    if (b.rows() != b.cols()) throw std::invalid_argument("block_diag_operator: blocks must be square");
    n += b.rows();
  }
  return {n, n, [blocks = std::move(blocks)](std::span<const double> x, std::span<double> y) {
            std::size_t off = 0;
            for (const auto& b : blocks) {
              b.apply(x.subspan(off, b.cols()), y.subspan(off, b.rows()));
              off += b.rows();
            }
          }};
}

struct SolveReport {
  std::size_t iterations = 0;
  double residual_norm = 0.0;  // true residual ||b - A x||
  double threshold = 0.0;      // max(rtol ||b||, atol)
  bool converged = false;
  double wall_time = 0.0;      // seconds
  std::vector<double> history;  // initial residual, then the least-squares estimate per Krylov dimension
};

struct GmresOptions {
  double rtol = 1e-6;
  double atol = 1e-8;
  std::size_t max_iter = 500;
};

struct GmresResult {
  Vector x;
  SolveReport report;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, SolveReport report) : std::runtime_error(what), report_(std::move(report)) {}
  const SolveReport& report() const { return report_; }

 private:
  SolveReport report_;
};

/// Full GMRES with modified Gram-Schmidt and Givens rotations, right
/// preconditioned (x = x0 + P y). Acceptance is decided on the true residual.
inline GmresResult gmres(const LinearOperator& A, std::span<const double> b, const LinearOperator* P = nullptr,
                         const GmresOptions& opt = {}, std::span<const double> x0 = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = A.rows();
  if (A.cols() != n || b.size() != n) throw std::invalid_argument("gmres: shape mismatch");
  if (P && (P->rows() != n || P->cols() != n)) throw std::invalid_argument("gmres: preconditioner shape mismatch");
  if (!x0.empty() && x0.size() != n) throw std::invalid_argument("gmres: x0 shape mismatch");
  if (!(opt.rtol > 0.0) || !(opt.atol > 0.0)) throw std::invalid_argument("gmres: tolerances must be positive");

  GmresResult res;
  auto& rep = res.report;
  res.x = x0.empty() ? Vector(n, 0.0) : Vector(x0.begin(), x0.end());
  rep.threshold = std::max(opt.rtol * norm2(b), opt.atol);

  auto true_residual = [&](const Vector& x, Vector& r) {
    A.apply(x, r);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    return norm2(r);
  };
  auto finish = [&]() {
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return std::move(res);
  };

  Vector r(n), w(n), z(n);
  double beta = true_residual(res.x, r);
  rep.residual_norm = beta;
  rep.history.push_back(beta);
  if (beta <= rep.threshold) {
    rep.converged = true;
    return finish();
  }

  const std::size_t m = std::min(opt.max_iter, n);
  std::vector<Vector> V;
  V.reserve(m + 1);
  std::vector<std::vector<double>> H;  // column j holds h(0..j+1, j)
  std::vector<double> cs, sn, g{beta};

  V.emplace_back(r);
  for (auto& v : V[0]) v /= beta;

  // x = x0 + P V_k y_k for the current Krylov dimension k.
  auto form_solution = [&](std::size_t k) {
    std::vector<double> y(k, 0.0);
    for (std::size_t i = k; i-- > 0;) {
      double s = g[i];
      for (std::size_t j = i + 1; j < k; ++j) s -= H[j][i] * y[j];
      y[i] = s / H[i][i];
    }
    Vector u(n, 0.0);
    for (std::size_t j = 0; j < k; ++j) axpy(y[j], V[j], u);
    Vector x = x0.empty() ? Vector(n, 0.0) : Vector(x0.begin(), x0.end());
    if (P) {
      P->apply(u, z);
      axpy(1.0, z, x);
    } else {
      axpy(1.0, u, x);
    }
    return x;
  };

  for (std::size_t j = 0; j < m; ++j) {
    if (P) {
      P->apply(V[j], z);
      A.apply(z, w);
    } else {
      A.apply(V[j], w);
    }
    const double wnorm = norm2(w);
    std::vector<double> h(j + 2, 0.0);
    for (std::size_t i = 0; i <= j; ++i) {
      h[i] = dot(w, V[i]);
      axpy(-h[i], V[i], w);
    }
    h[j + 1] = norm2(w);
    const double hnext = h[j + 1];
    const bool breakdown = hnext <= 1e-14 * wnorm;

    for (std::size_t i = 0; i < j; ++i) {
      const double t = cs[i] * h[i] + sn[i] * h[i + 1];
      h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
      h[i] = t;
    }
    const double d = std::hypot(h[j], h[j + 1]);
    const double c = d == 0.0 ? 1.0 : h[j] / d;
    const double s = d == 0.0 ? 0.0 : h[j + 1] / d;
    cs.push_back(c);
    sn.push_back(s);
    h[j] = d;
    h[j + 1] = 0.0;
    g.push_back(-s * g[j]);
    g[j] *= c;
    H.push_back(std::move(h));
    rep.iterations = j + 1;
    rep.history.push_back(std::abs(g[j + 1]));

    if (std::abs(g[j + 1]) <= rep.threshold || breakdown || j + 1 == m) {
      Vector x = form_solution(j + 1);
      const double rn = true_residual(x, r);
      if (rn <= rep.residual_norm || rn <= rep.threshold) {
        res.x = std::move(x);
        rep.residual_norm = rn;
      }
      if (rep.residual_norm <= rep.threshold) {
        rep.converged = true;
        return finish();
      }
      if (breakdown) return finish();
    }
    if (j + 1 < m) {
      V.emplace_back(w);
      for (auto& v : V.back()) v /= hnext;
    }
  }
  return finish();
}

/// Dense LU with partial pivoting (Eigen); used for the AMG coarse level
/// and as a test oracle.
class DenseLu {
 public:
  explicit DenseLu(const CsrMatrix& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("DenseLu: matrix must be square");
    const auto n = static_cast<Eigen::Index>(A.rows());
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < A.rows(); ++i) {
      auto c = A.row_columns(i);
      auto v = A.row_values(i);
      for (std::size_t k = 0; k < c.size(); ++k)
        D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c[k])) += v[k];
    }
    lu_.compute(D);
    if (n > 0 && !(lu_.rcond() > 1e-15)) throw std::runtime_error("DenseLu: matrix is singular to machine precision");
  }

  std::size_t size() const { return static_cast<std::size_t>(lu_.rows()); }

  void solve(std::span<const double> b, std::span<double> x) const {
    if (b.size() != size() || x.size() != size()) throw std::invalid_argument("DenseLu: shape mismatch");
    Eigen::Map<const Eigen::VectorXd> bb(b.data(), static_cast<Eigen::Index>(b.size()));
    Eigen::Map<Eigen::VectorXd> xx(x.data(), static_cast<Eigen::Index>(x.size()));
    xx = lu_.solve(bb);
  }

 private:
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

inline constexpr std::size_t kDirectSolveCap = 2000;

inline Vector direct_solve_small(const CsrMatrix& A, std::span<const double> b, std::size_t cap = kDirectSolveCap) {
  if (A.rows() > cap) throw std::invalid_argument("direct_solve_small: size " + std::to_string(A.rows()) + " exceeds cap");
  if (b.size() != A.rows()) throw std::invalid_argument("direct_solve_small: shape mismatch");
  DenseLu lu(A);
  Vector x(b.size());
  lu.solve(b, x);
  return x;
}

}  // namespace morpho
