#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace parcon {

/// Rule on the reference triangle in barycentric coordinates. Weights are
/// normalised to sum to one, so a physical integral is |K| * sum(w f).
struct QuadratureRule {
  std::vector<Eigen::Vector3d> points;
  std::vector<double> weights;
  int degree = 0;

  std::size_t size() const { return weights.size(); }
};

/// Centroid rule, exact for degree 1.
const QuadratureRule& centroid_rule();
/// Three interior points, exact for degree 2.
const QuadratureRule& degree2_rule();
/// Seven-point rule, exact for degree 5.
const QuadratureRule& degree5_rule();

/// Gauss-Legendre nodes and weights on [-1, 1] for 1 to 4 points.
struct GaussRule1d {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussRule1d& gauss_legendre(int points);

/// Integral of f over [a, b] with the given Gauss rule.
template <class F>
double integrate_interval(F&& f, double a, double b, const GaussRule1d& rule) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) sum += rule.weights[q] * f(mid + half * rule.nodes[q]);
  return half * sum;
}

}  // namespace parcon
