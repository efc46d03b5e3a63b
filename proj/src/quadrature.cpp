#include "parcon/quadrature.hpp"

#include <cmath>

#include "parcon/errors.hpp"

namespace parcon {

namespace {

void add_orbit3(QuadratureRule& r, double a, double w) {
  const double b = 1.0 - 2.0 * a;
  r.points.emplace_back(b, a, a);
  r.points.emplace_back(a, b, a);
  r.points.emplace_back(a, a, b);
  r.weights.insert(r.weights.end(), 3, w);
}

}  // namespace

const QuadratureRule& centroid_rule() {
  static const QuadratureRule rule{{Eigen::Vector3d::Constant(1.0 / 3.0)}, {1.0}, 1};
  return rule;
}

const QuadratureRule& degree2_rule() {
  static const QuadratureRule rule = [] {
    QuadratureRule r;
    r.degree = 2;
    add_orbit3(r, 1.0 / 6.0, 1.0 / 3.0);
    return r;
  }();
  return rule;
}

const QuadratureRule& degree5_rule() {
  static const QuadratureRule rule = [] {
    const double s15 = std::sqrt(15.0);
    QuadratureRule r;
    r.degree = 5;
    r.points.emplace_back(Eigen::Vector3d::Constant(1.0 / 3.0));
    r.weights.push_back(9.0 / 40.0);
    add_orbit3(r, (6.0 - s15) / 21.0, (155.0 - s15) / 1200.0);
    add_orbit3(r, (6.0 + s15) / 21.0, (155.0 + s15) / 1200.0);
    return r;
  }();
  return rule;
}

const GaussRule1d& gauss_legendre(int points) {
  static const std::array<GaussRule1d, 4> rules = [] {
    const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
    const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
    const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
    const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
    const double g2 = 1.0 / std::sqrt(3.0);
    const double g3 = std::sqrt(3.0 / 5.0);
    return std::array<GaussRule1d, 4>{
        GaussRule1d{{0.0}, {2.0}},
        GaussRule1d{{-g2, g2}, {1.0, 1.0}},
        GaussRule1d{{-g3, 0.0, g3}, {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0}},
        GaussRule1d{{-b, -a, a, b}, {wb, wa, wa, wb}},
    };
  }();
  if (points < 1 || points > 4) throw InvalidParameter("Gauss-Legendre rule supports 1 to 4 points");
  return rules[static_cast<std::size_t>(points - 1)];
}

}  // namespace parcon
