#pragma once

/// Smoothed-aggregation algebraic multigrid with symmetric Gauss-Seidel
/// V(1,1) cycles and a dense LU on the coarsest level.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "morpho/gmres.hpp"
#include "morpho/sparse.hpp"

namespace morpho {

struct AmgOptions {
  double strength_threshold = 0.08;
  std::size_t coarse_cap = 200;
  std::size_t max_levels = 25;
  double prolongation_weight = 4.0 / 3.0;  // omega = weight / rho(D^-1 A)
  std::size_t power_iterations = 20;
  // Coarsest levels above this size (after stagnation) are smoothed instead of factored.
  std::size_t max_direct_size = 4000;
};

/// Near-null-space vectors plus a component label per dof. Strength links
/// between dofs with different labels are dropped.
struct NearNullSpace {
  std::vector<Vector> vectors;
  std::vector<int> component;

  static NearNullSpace constant(std::size_t n) { return {{Vector(n, 1.0)}, std::vector<int>(n, 0)}; }

  /// One constant per component for a space blocked as [comp 0 | comp 1 | ...].
  static NearNullSpace blocked_constants(std::size_t n, int components) {
    if (components < 1 || n % static_cast<std::size_t>(components) != 0)
      throw std::invalid_argument("NearNullSpace: size not divisible by component count");
    const std::size_t block = n / static_cast<std::size_t>(components);
    NearNullSpace ns;
    ns.component.resize(n);
    for (int c = 0; c < components; ++c) {
      Vector v(n, 0.0);
      for (std::size_t i = 0; i < block; ++i) {
        v[static_cast<std::size_t>(c) * block + i] = 1.0;
        ns.component[static_cast<std::size_t>(c) * block + i] = c;
      }
      ns.vectors.push_back(std::move(v));
    }
    return ns;
  }

  void validate(std::size_t n) const {
    if (vectors.empty()) throw std::invalid_argument("NearNullSpace: no vectors");
    for (const auto& v : vectors)
      if (v.size() != n) throw std::invalid_argument("NearNullSpace: vector length mismatch");
    if (component.size() != n) throw std::invalid_argument("NearNullSpace: component label length mismatch");
  }
};

class AmgDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AmgSolveResult {
  Vector x;
  std::size_t cycles = 0;
  double relative_residual = 0.0;
};

namespace detail {

/// Symmetrized strength graph, self links excluded.
inline std::vector<std::vector<std::size_t>> strength_graph(const CsrMatrix& A, const std::vector<int>& comp,
                                                            double theta) {
  const std::size_t n = A.rows();
  const Vector d = A.diagonal();
  std::vector<std::vector<std::size_t>> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto c = A.row_columns(i);
    auto v = A.row_values(i);
    for (std::size_t k = 0; k < c.size(); ++k) {
      const std::size_t j = c[k];
      if (j == i || comp[i] != comp[j] || v[k] == 0.0) continue;
      if (std::abs(v[k]) >= theta * std::sqrt(std::abs(d[i] * d[j]))) {
        g[i].push_back(j);
        g[j].push_back(i);
      }
    }
  }
  for (auto& r : g) {
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
  }
  return g;
}

inline constexpr std::size_t kUnaggregated = static_cast<std::size_t>(-1);

/// Standard three-pass greedy aggregation; isolated nodes stay unaggregated.
inline std::vector<std::size_t> aggregate(const std::vector<std::vector<std::size_t>>& g, std::size_t& count) {
  const std::size_t n = g.size();
  std::vector<std::size_t> agg(n, kUnaggregated);
  count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (agg[i] != kUnaggregated || g[i].empty()) continue;
    bool free = std::all_of(g[i].begin(), g[i].end(), [&](std::size_t j) { return agg[j] == kUnaggregated; });
    if (!free) continue;
    agg[i] = count;
    for (auto j : g[i]) agg[j] = count;
    ++count;
  }
  std::vector<std::size_t> after_first = agg;
  for (std::size_t i = 0; i < n; ++i) {
    if (agg[i] != kUnaggregated || g[i].empty()) continue;
    for (auto j : g[i])
      if (after_first[j] != kUnaggregated) {
        agg[i] = after_first[j];
        break;
      }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (agg[i] != kUnaggregated || g[i].empty()) continue;
    agg[i] = count;
    for (auto j : g[i])
      if (agg[j] == kUnaggregated) agg[j] = count;
    ++count;
  }
  return agg;
}

inline double spectral_radius_dinv_a(const CsrMatrix& A, const Vector& dinv, std::size_t iters) {
  const std::size_t n = A.rows();
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  Vector x(n), y(n);
  for (auto& v : x) v = u(rng);
  double rho = 0.0;
  for (std::size_t it = 0; it < iters; ++it) {
    const double nx = norm2(x);
    if (nx == 0.0) break;
    for (auto& v : x) v /= nx;
    A.multiply(x, y);
    for (std::size_t i = 0; i < n; ++i) y[i] *= dinv[i];
    rho = norm2(y);
    std::swap(x, y);
  }
  return rho;
}

}  // namespace detail

class AmgHierarchy {
 public:
  struct Level {
    CsrMatrix A;
    CsrMatrix P;  // to the next coarser level (empty on the coarsest)
    CsrMatrix R;
    Vector diag;
    std::vector<std::size_t> diag_pos;
  };

  AmgHierarchy(const CsrMatrix& A, NearNullSpace nns, AmgOptions opt = {}) : opt_(opt) {
    if (A.rows() != A.cols()) throw std::invalid_argument("AmgHierarchy: matrix must be square");
    nns.validate(A.rows());
    CsrMatrix cur = A;
    for (;;) {
      Level lev = make_level(std::move(cur));
      const std::size_t n = lev.A.rows();
      if (n <= opt_.coarse_cap || levels_.size() + 1 >= opt_.max_levels) {
        levels_.push_back(std::move(lev));
        break;
      }
      auto next = coarsen(lev, nns);
      if (!next) {
        levels_.push_back(std::move(lev));
        break;
      }
      cur = std::move(next->first);
      nns = std::move(next->second);
      levels_.push_back(std::move(lev));
    }
    const auto& coarse = levels_.back().A;
    if (coarse.rows() <= opt_.max_direct_size) coarse_lu_.emplace(coarse);
  }

  AmgHierarchy(const CsrMatrix& A, const AmgOptions& opt = {})
      : AmgHierarchy(A, NearNullSpace::constant(A.rows()), opt) {}

  std::size_t size() const { return levels_.front().A.rows(); }
  std::size_t level_count() const { return levels_.size(); }
  const Level& level(std::size_t l) const { return levels_.at(l); }
  const AmgOptions& options() const { return opt_; }

  /// One V(1,1) cycle on x (in place), forward GS before and backward GS after
  /// the coarse correction.
  void vcycle(std::span<const double> b, std::span<double> x) const { cycle(0, b, x); }

  AmgSolveResult solve(std::span<const double> b, double tol, std::size_t max_cycles) const {
    const std::size_t n = size();
    if (b.size() != n) throw std::invalid_argument("amg_solve: shape mismatch");
    AmgSolveResult res;
    res.x.assign(n, 0.0);
    const double bn = norm2(b);
    Vector r(n);
    if (bn == 0.0) {
      res.cycles = 1;
      return res;
    }
    Vector best = res.x;
    double best_rel = 1.0, prev = 1.0;
    int growth = 0;
    for (std::size_t k = 1; k <= max_cycles; ++k) {
      vcycle(b, res.x);
      residual(0, b, res.x, r);
      const double rel = norm2(r) / bn;
      res.cycles = k;
      if (rel < best_rel) {
        best_rel = rel;
        best = res.x;
      }
      growth = rel > prev ? growth + 1 : 0;
      if (growth >= 3) throw AmgDivergence("amg_solve: residual grew over 3 consecutive cycles; " + describe());
      prev = rel;
      if (rel <= tol) break;
    }
    res.x = std::move(best);
    res.relative_residual = best_rel;
    return res;
  }

  /// Level sizes and nonzeros, for diagnostics.
  std::string describe() const {
    std::ostringstream os;
    os << "levels:";
    for (const auto& l : levels_) os << " [n=" << l.A.rows() << " nnz=" << l.A.nnz() << "]";
    return os.str();
  }

 private:
  Level make_level(CsrMatrix A) const {
    Level lev;
    const std::size_t n = A.rows();
    lev.diag.resize(n);
    lev.diag_pos.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto c = A.row_columns(i);
      if (c.empty()) throw std::invalid_argument("AmgHierarchy: empty row " + std::to_string(i));
      auto it = std::lower_bound(c.begin(), c.end(), i);
      if (it == c.end() || *it != i || A.row_values(i)[static_cast<std::size_t>(it - c.begin())] == 0.0)
        throw std::invalid_argument("AmgHierarchy: zero diagonal in row " + std::to_string(i));
      lev.diag_pos[i] = static_cast<std::size_t>(it - c.begin());
      lev.diag[i] = A.row_values(i)[lev.diag_pos[i]];
    }
    lev.A = std::move(A);
    return lev;
  }

  std::optional<std::pair<CsrMatrix, NearNullSpace>> coarsen(Level& lev, const NearNullSpace& nns) const {
    const auto& A = lev.A;
    const std::size_t n = A.rows();
    const auto g = detail::strength_graph(A, nns.component, opt_.strength_threshold);
    std::size_t nagg = 0;
    const auto agg = detail::aggregate(g, nagg);
    if (nagg == 0) return std::nullopt;

    std::vector<std::vector<std::size_t>> members(nagg);
    for (std::size_t i = 0; i < n; ++i)
      if (agg[i] != detail::kUnaggregated) members[agg[i]].push_back(i);

    // Tentative prolongator: per-aggregate QR of the near-null block.
    const std::size_t nv = nns.vectors.size();
    std::vector<std::tuple<std::size_t, std::size_t, double>> tent;
    std::vector<std::vector<double>> coarse_b;  // per coarse dof, nv entries
    std::vector<int> coarse_comp;
    for (std::size_t a = 0; a < nagg; ++a) {
      const auto& mem = members[a];
      std::vector<Vector> q;
      std::vector<std::vector<double>> Rm(nv, std::vector<double>(nv, 0.0));
      for (std::size_t k = 0; k < nv; ++k) {
        Vector col(mem.size());
        for (std::size_t t = 0; t < mem.size(); ++t) col[t] = nns.vectors[k][mem[t]];
        const double n0 = norm2(col);
        for (std::size_t p = 0; p < q.size(); ++p) {
          const double h = dot(col, q[p]);
          Rm[p][k] = h;
          axpy(-h, q[p], col);
        }
        const double nr = norm2(col);
        if (n0 == 0.0 || nr <= 1e-10 * n0) continue;
        for (auto& v : col) v /= nr;
        Rm[q.size()][k] = nr;
        q.push_back(std::move(col));
      }
      for (std::size_t p = 0; p < q.size(); ++p) {
        const std::size_t cd = coarse_b.size();
        for (std::size_t t = 0; t < mem.size(); ++t) tent.emplace_back(mem[t], cd, q[p][t]);
        coarse_b.push_back(Rm[p]);
        coarse_comp.push_back(nns.component[mem.front()]);
      }
    }
    const std::size_t nc = coarse_b.size();
    if (nc == 0 || nc >= n) return std::nullopt;
    TripletBuilder tb(n, nc);
    for (const auto& [i, j, v] : tent) tb.add(i, j, v);
    const CsrMatrix Tm = tb.build();

    Vector dinv(n);
    for (std::size_t i = 0; i < n; ++i) dinv[i] = 1.0 / lev.diag[i];
    const double rho = detail::spectral_radius_dinv_a(A, dinv, opt_.power_iterations);
    const double omega = rho > 0.0 ? opt_.prolongation_weight / rho : 0.0;
    CsrMatrix DA = A;
    for (std::size_t i = 0; i < n; ++i)
      for (auto& v : DA.row_values(i)) v *= omega * dinv[i];
    CsrMatrix P = add(Tm, multiply(DA, Tm), 1.0, -1.0);
    CsrMatrix R = P.transpose();
    CsrMatrix Ac = multiply(R, multiply(A, P));

    NearNullSpace cn;
    cn.component = std::move(coarse_comp);
    cn.vectors.assign(nv, Vector(nc, 0.0));
    for (std::size_t c = 0; c < nc; ++c)
      for (std::size_t k = 0; k < nv; ++k) cn.vectors[k][c] = coarse_b[c][k];
    lev.P = std::move(P);
    lev.R = std::move(R);
    return std::make_pair(std::move(Ac), std::move(cn));
  }

  void residual(std::size_t l, std::span<const double> b, std::span<const double> x, std::span<double> r) const {
    levels_[l].A.multiply(x, r);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  }

  void gauss_seidel(const Level& lev, std::span<const double> b, std::span<double> x, bool forward) const {
    const std::size_t n = lev.A.rows();
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t i = forward ? s : n - 1 - s;
      auto c = lev.A.row_columns(i);
      auto v = lev.A.row_values(i);
      double acc = b[i];
      for (std::size_t k = 0; k < c.size(); ++k) acc -= v[k] * x[c[k]];
      x[i] += acc / lev.diag[i];
    }
  }

  void cycle(std::size_t l, std::span<const double> b, std::span<double> x) const {
    const Level& lev = levels_[l];
    if (l + 1 == levels_.size()) {
      if (coarse_lu_) {
        coarse_lu_->solve(b, x);
      } else {
        for (int s = 0; s < 10; ++s) {
          gauss_seidel(lev, b, x, true);
          gauss_seidel(lev, b, x, false);
        }
      }
      return;
    }
    gauss_seidel(lev, b, x, true);
    Vector r(lev.A.rows());
    residual(l, b, x, r);
    Vector bc(lev.R.rows()), xc(lev.R.rows(), 0.0);
    lev.R.multiply(r, bc);
    cycle(l + 1, bc, xc);
    Vector corr(lev.P.rows());
    lev.P.multiply(xc, corr);
    axpy(1.0, corr, x);
    gauss_seidel(lev, b, x, false);
  }

  AmgOptions opt_;
  std::vector<Level> levels_;
  std::optional<DenseLu> coarse_lu_;
};

/// Number of V-cycles needed to reduce the relative residual of a
/// random right-hand side below tol, capped at max_cycles.
inline std::size_t calibrate_cycles(const AmgHierarchy& h, double tol, std::size_t max_cycles = 10) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector b(h.size());
  for (auto& v : b) v = u(rng);
  return std::max<std::size_t>(1, h.solve(b, tol, max_cycles).cycles);
}

/// x = (fixed number of V-cycles from a zero guess) b; a linear operator.
inline LinearOperator amg_operator(std::shared_ptr<const AmgHierarchy> h, std::size_t cycles) {
  if (!h) throw std::invalid_argument("amg_operator: null hierarchy");
  if (cycles == 0) throw std::invalid_argument("amg_operator: cycle count must be positive");
  const std::size_t n = h->size();
  return {n, n, [h = std::move(h), cycles](std::span<const double> b, std::span<double> x) {
            std::fill(x.begin(), x.end(), 0.0);
            for (std::size_t k = 0; k < cycles; ++k) h->vcycle(b, x);
          }};
}

}  // namespace morpho
