#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "parcon/measure.hpp"

namespace parcon {

/// Piecewise-constant control: row i-1 holds the values on interval I_i,
/// column t the value on triangle t.
using ControlField = Eigen::MatrixXd;

/// Nodal fields per time level 0..N. For a state, level i is y^i; for a
/// co-state, level i is z^i and level N is zero.
struct Trajectory {
  std::vector<NodalField> levels;

  int steps() const { return static_cast<int>(levels.size()) - 1; }
  const NodalField& operator[](int i) const { return levels[static_cast<std::size_t>(i)]; }
};

/// Mean of f over I_i with a four-point Gauss rule.
double pk_average(const TimeFunction& f, const TimeGrid& grid, int i);
/// Pointwise mean over I_i of a space-time function.
SpatialFunction pk_average(const SpaceTimeFunction& f, const TimeGrid& grid, int i);

/// (P_k^i f, phi_j) for every vertex j.
Vector averaged_load(const Mesh& m, const TimeGrid& grid, const SpaceTimeFunction& f, int i,
                     const QuadratureRule& q = degree5_rule());

enum class StepSolver { kCholesky, kConjugateGradient };

/// Mass, stiffness and the backward-Euler matrix M/k + K for one mesh and
/// time grid. The step matrix is factorised once and reused by every sweep.
class ParabolicOperator {
 public:
  ParabolicOperator(Mesh mesh, TimeGrid grid, StepSolver solver = StepSolver::kCholesky);
  ~ParabolicOperator();
  ParabolicOperator(ParabolicOperator&&) noexcept;
  ParabolicOperator& operator=(ParabolicOperator&&) noexcept;

  const Mesh& mesh() const { return mesh_; }
  const TimeGrid& grid() const { return grid_; }
  const SparseMatrix& mass() const { return mass_; }
  const SparseMatrix& stiffness() const { return stiffness_; }
  const std::vector<Index>& free() const { return free_; }

  /// Solves (M/k + K) x = load on the interior vertices; boundary values of x
  /// are zero and boundary entries of `load` are ignored.
  NodalField solve_step(const Vector& load) const;

 private:
  struct Factor;

  Mesh mesh_;
  TimeGrid grid_;
  StepSolver solver_;
  SparseMatrix mass_;
  SparseMatrix stiffness_;
  std::vector<Index> free_;
  SparseMatrix step_matrix_;
  std::unique_ptr<Factor> factor_;
};

/// Backward Euler for the state:
///   (M/k + K) y^i = M/k y^{i-1} + source[i-1] + (u^i, phi).
/// `source` holds the N measure pairings, `y0` the initial field.
Trajectory solve_state(const ParabolicOperator& op, std::span<const Vector> source, const ControlField& u,
                       const NodalField& y0);

/// Backward sweep for the co-state with z^N = 0:
///   (M/k + K) z^{i-1} = M/k z^i + M y^i - target[i-1],
/// where target[i-1] = (P_k^i y_d, phi).
Trajectory solve_costate(const ParabolicOperator& op, const Trajectory& state, std::span<const Vector> target);

/// Measure pairings <mu, phi>_{I_i}, i = 1..N.
std::vector<Vector> measure_loads(const TimeMeasure& mu, const Mesh& m, const TimeGrid& grid,
                                  const QuadratureRule& q = degree5_rule());
/// (P_k^i y_d, phi), i = 1..N.
std::vector<Vector> desired_state_loads(const SpaceTimeFunction& yd, const Mesh& m, const TimeGrid& grid,
                                        const QuadratureRule& q = degree5_rule());

Trajectory solve_state(const Mesh& m, const TimeGrid& grid, const TimeMeasure& mu, const ControlField& u,
                       const NodalField& y0);
Trajectory solve_costate(const Mesh& m, const TimeGrid& grid, const Trajectory& state, const SpaceTimeFunction& yd);

/// CSV with columns level,vertex_index,x,y,value.
void write_trajectory_csv(std::ostream& os, const Mesh& m, const Trajectory& traj);

}  // namespace parcon
