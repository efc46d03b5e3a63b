#pragma once

#include <iosfwd>
#include <vector>

#include "parcon/dynamics.hpp"

namespace parcon {

struct Bounds {
  double lower = -0.5;
  double upper = 0.1;

  void validate() const;
};

/// min(upper, max(lower, v)).
inline double box_project(double v, const Bounds& b) { return std::min(b.upper, std::max(b.lower, v)); }
ControlField box_project(const ControlField& u, const Bounds& b);

/// Exact mean of a P1 field over each triangle.
Vector cell_average(const Mesh& m, const NodalField& v);

struct OptimizerConfig {
  double alpha = 1.0;
  Bounds bounds;
  /// Gradient step; zero selects 1/alpha.
  double step = 0.0;
  double tol = 1e-8;
  int max_iter = 500;

  void validate() const;
  double effective_step() const { return step > 0.0 ? step : 1.0 / alpha; }
};

/// Continuous problem data: measure source, desired state, initial state.
struct ControlProblem {
  TimeMeasure measure;
  SpaceTimeFunction desired_state;
  SpatialFunction initial_state;
  double final_time = 1.0;
};

/// A control problem on one mesh and time grid with every control-independent
/// quantity precomputed: measure pairings, (P_k^i y_d, phi), ||P_k^i y_d||^2
/// and the projected initial state.
class DiscreteControlProblem {
 public:
  DiscreteControlProblem(const ControlProblem& problem, Mesh mesh, TimeGrid grid,
                         const QuadratureRule& q = degree5_rule());

  const ParabolicOperator& op() const { return op_; }
  const Mesh& mesh() const { return op_.mesh(); }
  const TimeGrid& grid() const { return op_.grid(); }
  const std::vector<Vector>& source() const { return source_; }
  const std::vector<Vector>& target() const { return target_; }
  const std::vector<double>& target_norm2() const { return target_norm2_; }
  const NodalField& initial_state() const { return y0_; }

  ControlField zero_control() const { return ControlField::Zero(grid().steps(), mesh().num_triangles()); }
  Trajectory state(const ControlField& u) const;
  Trajectory costate(const Trajectory& y) const;

 private:
  ParabolicOperator op_;
  std::vector<Vector> source_;
  std::vector<Vector> target_;
  std::vector<double> target_norm2_;
  NodalField y0_;
};

/// 1/2 sum_i k (||y^i - P_k^i y_d||^2 + alpha ||u^i||^2) from precomputed data.
double cost_functional(const DiscreteControlProblem& p, const ControlField& u, const Trajectory& y, double alpha);
/// Same functional by direct quadrature of (y^i - P_k^i y_d)^2.
double cost_functional(const Mesh& m, const TimeGrid& grid, const ControlField& u, const Trajectory& y,
                       const SpaceTimeFunction& yd, double alpha, const QuadratureRule& q = degree5_rule());

/// j(u): solves the state equation and evaluates the cost.
double reduced_cost(const DiscreteControlProblem& p, const ControlField& u, double alpha);

/// g_{i,K} = alpha u_{i,K} + mean_K(z^{i-1}). The derivative of j in the
/// direction e_{i,K} is k |K| g_{i,K}.
ControlField reduced_gradient(const Mesh& m, const ControlField& u, const Trajectory& z, double alpha);

/// sqrt(sum_i k sum_K |K| v_{i,K}^2).
double control_norm(const Mesh& m, const TimeGrid& grid, const ControlField& v);

/// max |u - P(u - g)|; zero exactly at discrete KKT points.
double kkt_residual(const Mesh& m, const ControlField& u, const Trajectory& z, const OptimizerConfig& cfg);

struct OptimizerReport {
  int iterations = 0;
  /// j(u^0), j(u^1), ..., j(u_final).
  std::vector<double> cost_history;
  /// L2(L2) norms of u^{m+1} - u^m.
  std::vector<double> step_norms;
  double kkt_residual = 0.0;
  bool converged = false;
};

struct OptimalControl {
  ControlField u;
  Trajectory y;
  Trajectory z;
  OptimizerReport report;
};

/// u^{m+1} = P(u^m - step g^m) from u^0 = 0 until the control increment is at
/// most cfg.tol or cfg.max_iter iterations have run.
OptimalControl projected_gradient_solve(const DiscreteControlProblem& p, const OptimizerConfig& cfg);

/// CSV with columns interval,triangle,centroid_x,centroid_y,value.
void write_control_csv(std::ostream& os, const Mesh& m, const ControlField& u);

}  // namespace parcon
