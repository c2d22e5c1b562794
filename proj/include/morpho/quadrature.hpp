#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace morpho {

/// Point in barycentric coordinates; the weight is relative to the cell
/// measure (weights of a rule sum to one).
struct QuadraturePoint {
  std::array<double, 3> bary{};
  double weight = 0.0;
};

using QuadratureRule = std::vector<QuadraturePoint>;

/// Exact for P2*P2 products on triangles and in 1D.
inline constexpr int kDefaultQuadratureDegree = 4;

namespace detail {

inline QuadratureRule gauss_interval(int points) {
  QuadratureRule r;
  auto push = [&r](double x, double w) { r.push_back({{1.0 - x, x, 0.0}, w}); };
  switch (points) {
    case 2: {
      const double d = 0.5 / std::sqrt(3.0);
      push(0.5 - d, 0.5);
      push(0.5 + d, 0.5);
      break;
    }
    case 3: {
      const double d = 0.5 * std::sqrt(0.6);
      push(0.5 - d, 5.0 / 18.0);
      push(0.5, 8.0 / 18.0);
      push(0.5 + d, 5.0 / 18.0);
      break;
    }
    case 4: {
      const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(1.2));
      const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(1.2));
      const double wa = (18.0 + std::sqrt(30.0)) / 72.0;
      const double wb = (18.0 - std::sqrt(30.0)) / 72.0;
      push(0.5 * (1.0 - b), wb);
      push(0.5 * (1.0 - a), wa);
      push(0.5 * (1.0 + a), wa);
      push(0.5 * (1.0 + b), wb);
      break;
    }
    default: throw std::invalid_argument("gauss_interval: unsupported point count");
  }
  return r;
}

// Symmetric triangle rules (Strang-Fix / Dunavant).
inline void push_orbit3(QuadratureRule& r, double a, double w) {
  const double b = 1.0 - 2.0 * a;
  r.push_back({{a, a, b}, w});
  r.push_back({{a, b, a}, w});
  r.push_back({{b, a, a}, w});
}

inline void push_orbit6(QuadratureRule& r, double a, double b, double w) {
  const double c = 1.0 - a - b;
  r.push_back({{a, b, c}, w});
  r.push_back({{a, c, b}, w});
  r.push_back({{b, a, c}, w});
  r.push_back({{b, c, a}, w});
  r.push_back({{c, a, b}, w});
  r.push_back({{c, b, a}, w});
}

inline QuadratureRule triangle_rule(int degree) {
  QuadratureRule r;
  if (degree <= 2) {
    push_orbit3(r, 1.0 / 6.0, 1.0 / 3.0);
  } else if (degree <= 4) {
    push_orbit3(r, 0.445948490915965, 0.223381589678011);
    push_orbit3(r, 0.091576213509771, 0.109951743655322);
  } else if (degree <= 6) {
    push_orbit3(r, 0.249286745170910, 0.116786275726379);
    push_orbit3(r, 0.063089014491502, 0.050844906370207);
    push_orbit6(r, 0.053145049844817, 0.310352451033784, 0.082851075618374);
  } else {
    throw std::invalid_argument("triangle_rule: degree > 6 unsupported");
  }
  return r;
}

}  // namespace detail

/// Smallest available rule exact for polynomials of the requested degree.
inline const QuadratureRule& simplex_rule(int dim, int degree) {
  static const std::array<QuadratureRule, 3> interval{detail::gauss_interval(2), detail::gauss_interval(3),
                                                      detail::gauss_interval(4)};
  static const std::array<QuadratureRule, 3> triangle{detail::triangle_rule(2), detail::triangle_rule(4),
                                                      detail::triangle_rule(6)};
  if (degree < 0) throw std::invalid_argument("simplex_rule: negative degree");
  if (dim == 1) {
    if (degree <= 3) return interval[0];
    if (degree <= 5) return interval[1];
    if (degree <= 7) return interval[2];
  } else if (dim == 2) {
    if (degree <= 2) return triangle[0];
    if (degree <= 4) return triangle[1];
    if (degree <= 6) return triangle[2];
  } else {
    throw std::invalid_argument("simplex_rule: only 1D and 2D are supported");
  }
  throw std::invalid_argument("simplex_rule: degree too high");
}

}  // namespace morpho
