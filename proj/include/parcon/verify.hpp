#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "parcon/control.hpp"

namespace parcon {

/// A control problem with closed-form optimal state, co-state and control.
struct ManufacturedProblem {
  std::string id;
  ControlProblem data;
  SpaceTimeFunction exact_state;
  SpaceTimeFunction exact_costate;
  SpaceTimeFunction exact_control;
  double alpha = 1.0;
  Bounds bounds;
};

/// L-shaped domain, T = 1, Dirac atom at t = 0.5:
///   y = sin(pi |x|^2) (t^2 for t < 1/2, t^2 + 2t otherwise),
///   z = sin(pi |x|^2) t,  u = P_[u_a,u_b](-z / alpha).
ManufacturedProblem lshape_measure_problem(double alpha = 1.0, Bounds bounds = {});

/// Same structure on the L-shape with the spatial profile
/// 200 q(x1) q(x2), q(s) = s (1 - s) (s - 1/2), and z = profile (1 - t), so
/// that y and z vanish on the boundary and z(T) = 0.
ManufacturedProblem lshape_consistent_problem(double alpha = 1.0, Bounds bounds = {});

/// Measure-free problem with smooth desired state; no exact solution.
ControlProblem smooth_tracking_problem();

/// Problems selectable by name: "lshape-measure", "lshape-consistent".
ManufacturedProblem problem_by_id(const std::string& id, double alpha, Bounds bounds);

/// The P1 fields that the scheme holds constant on I_1..I_N: y^1..y^N for a
/// state, z^0..z^{N-1} for a co-state.
std::vector<NodalField> state_on_intervals(const Trajectory& y);
std::vector<NodalField> costate_on_intervals(const Trajectory& z);

/// L2(0,T; L2(Omega)) distance between a piecewise-constant-in-time P1
/// function and an exact solution (2-point Gauss per interval in time).
double l2l2_error(const Mesh& m, const TimeGrid& grid, std::span<const NodalField> per_interval,
                  const SpaceTimeFunction& exact, const QuadratureRule& q = degree5_rule());
/// Same for a control constant on each (interval, triangle).
double l2l2_error(const Mesh& m, const TimeGrid& grid, const ControlField& u, const SpaceTimeFunction& exact,
                  const QuadratureRule& q = degree5_rule());

/// || y_h - y(., T) ||_{L2(Omega)}.
double final_time_error(const Mesh& m, const NodalField& y_final, const SpaceTimeFunction& exact, double final_time,
                        const QuadratureRule& q = degree5_rule());

/// log(e1 / e2) / log(h1 / h2). Throws DomainError on non-positive input or
/// h1 == h2.
double eoc(double e1, double e2, double h1, double h2);

/// Number of time steps with k <= h^2, rounded up to an even count so that
/// t = T/2 is a grid point.
int time_steps_for(double h, double final_time);

struct StudyConfig {
  std::string problem = "lshape-measure";
  std::vector<int> levels{4, 8, 16, 32};
  OptimizerConfig optimizer;
  /// Levels solved concurrently.
  unsigned threads = 1;
};

struct ConvergenceRow {
  int level = 0;
  double h = 0.0;
  int dof = 0;
  int steps = 0;
  double err_y = 0.0;
  double err_z = 0.0;
  double err_u = 0.0;
  std::optional<double> rate_y, rate_z, rate_u;
  double err_y_final = 0.0;
  std::optional<double> rate_y_final;
  int iterations = 0;
  double kkt = 0.0;
  bool converged = false;
  /// Non-empty when the level failed; the error columns are then NaN.
  std::string failure;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;

  bool complete() const;
  /// level,h,dof,N,err_y,err_z,err_u,rate_y,rate_z,rate_u with six
  /// significant digits; rates of the first row are empty.
  std::string to_csv() const;
  /// Final-time state errors: level,h,dof,N,err_y_T,rate_y_T.
  std::string final_time_csv() const;
};

/// Solves the problem on every level, computes errors against the exact
/// solution and rates between consecutive levels. Rows are ordered by level.
ConvergenceReport run_convergence_study(const StudyConfig& cfg);

/// Single level of a study.
ConvergenceRow solve_level(const ManufacturedProblem& problem, int n, const OptimizerConfig& cfg);

struct GradientCheckOptions {
  int num_components = 20;
  double eps = 1e-5;
  std::uint64_t seed = 20240613;
};

/// Worst relative mismatch between k |K| g_{i,K} and central differences of
/// j(u) for randomly drawn (i, K), evaluated at the control `at` (a random
/// admissible control when empty).
double gradient_fd_check(const ControlProblem& problem, int n, int steps, double alpha,
                         const GradientCheckOptions& opts = {}, const std::optional<ControlField>& at = std::nullopt,
                         const Bounds& bounds = {});

/// Log-log plot of the three error columns against h with a slope-1/2 guide.
std::string convergence_svg(const ConvergenceReport& report);

}  // namespace parcon
