#include "parcon/measure.hpp"

#include <algorithm>
#include <cmath>

#include "parcon/errors.hpp"

namespace parcon {

TimeGrid::TimeGrid(double final_time, int steps) : final_time_(final_time), steps_(steps) {
  if (!(final_time > 0.0) || !std::isfinite(final_time)) throw InvalidParameter("final time must be positive");
  if (steps < 1) throw InvalidParameter("number of time steps must be positive");
}

int TimeGrid::interval_of(double t) const {
  int i = static_cast<int>(std::ceil(t / step()));
  i = std::clamp(i, 1, steps_);
  while (i > 1 && t <= time(i - 1)) --i;
  while (i < steps_ && t > time(i)) ++i;
  return i;
}

double total_variation(const TimeMeasure& tm, double final_time) {
  double tv = 0.0;
  for (const auto& a : tm.atoms) tv += std::abs(a.weight);
  if (tm.density) {
    constexpr int cells = 1024;
    const auto& rule = gauss_legendre(kTimeGaussPoints);
    for (int c = 0; c < cells; ++c) {
      tv += integrate_interval([&](double t) { return std::abs(tm.density(t)); }, final_time * c / cells,
                               final_time * (c + 1) / cells, rule);
    }
  }
  return tv;
}

Vector measure_load(const TimeMeasure& tm, const Mesh& m, const TimeGrid& grid, int i, const QuadratureRule& q) {
  if (i < 1 || i > grid.steps()) throw InvalidParameter("interval index out of range: " + std::to_string(i));
  const double k = grid.step();
  Vector load = Vector::Zero(m.num_vertices());
  for (const auto& atom : tm.atoms) {
    if (!(atom.time >= 0.0 && atom.time <= grid.final_time())) {
      throw InvalidParameter("Dirac atom at t = " + std::to_string(atom.time) + " lies outside [0, T]");
    }
    if (grid.interval_of(atom.time) != i || atom.weight == 0.0) continue;
    if (!tm.atom_profile) throw InvalidParameter("measure has atoms but no atom profile");
    const double t = atom.time;
    load += atom.weight * assemble_load(m, [&](const Point2& x) { return tm.atom_profile(x, t); }, q);
  }
  if (tm.density) {
    if (!tm.density_profile) throw InvalidParameter("measure has a density but no density profile");
    const auto& rule = gauss_legendre(kTimeGaussPoints);
    const double a = grid.time(i - 1);
    const double half = 0.5 * k;
    for (std::size_t g = 0; g < rule.nodes.size(); ++g) {
      const double t = a + half * (1.0 + rule.nodes[g]);
      const double d = tm.density(t);
      if (d == 0.0) continue;
      load += (half * rule.weights[g] * d) * assemble_load(m, [&](const Point2& x) { return tm.density_profile(x, t); }, q);
    }
  }
  return load / k;
}

}  // namespace parcon
