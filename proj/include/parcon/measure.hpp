#pragma once

#include <functional>
#include <vector>

#include "parcon/fem.hpp"

namespace parcon {

using TimeFunction = std::function<double(double)>;
using SpaceTimeFunction = std::function<double(const Point2&, double)>;

/// Uniform partition of [0, T] into N intervals I_i = (t_{i-1}, t_i].
class TimeGrid {
 public:
  TimeGrid(double final_time, int steps);

  double final_time() const { return final_time_; }
  int steps() const { return steps_; }
  double step() const { return final_time_ / steps_; }
  /// t_i = i T / N, so t_0 = 0 and t_N = T exactly.
  double time(int i) const { return final_time_ * i / steps_; }
  /// Index i of the interval (t_{i-1}, t_i] containing t; t = 0 maps to 1.
  int interval_of(double t) const;

 private:
  double final_time_;
  int steps_;
};

struct DiracAtom {
  double time;
  double weight;
};

/// mu = sigma * tau with tau a sum of Dirac atoms plus an absolutely
/// continuous part density(t) dt. Atoms and density carry their own spatial
/// profiles, so data written as "profile times Dirac plus smooth source"
/// is represented exactly.
struct TimeMeasure {
  std::vector<DiracAtom> atoms;
  SpaceTimeFunction atom_profile;
  TimeFunction density;
  SpaceTimeFunction density_profile;
};

/// sum |weights| + integral of |density| over [0, T].
double total_variation(const TimeMeasure& tm, double final_time);

inline constexpr int kTimeGaussPoints = 4;

/// Component j = (1/k) * integral over Omega x I_i of phi_j d(mu).
/// Throws InvalidParameter for an atom outside [0, T] or i outside 1..N.
Vector measure_load(const TimeMeasure& tm, const Mesh& m, const TimeGrid& grid, int i,
                    const QuadratureRule& q = degree5_rule());

}  // namespace parcon
