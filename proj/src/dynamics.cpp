#include "parcon/dynamics.hpp"

#include <cstdio>
#include <ostream>

#include <Eigen/SparseCholesky>

#include "parcon/errors.hpp"

namespace parcon {

double pk_average(const TimeFunction& f, const TimeGrid& grid, int i) {
  return integrate_interval(f, grid.time(i - 1), grid.time(i), gauss_legendre(kTimeGaussPoints)) / grid.step();
}

SpatialFunction pk_average(const SpaceTimeFunction& f, const TimeGrid& grid, int i) {
  return [f, grid, i](const Point2& x) { return pk_average([&](double t) { return f(x, t); }, grid, i); };
}

Vector averaged_load(const Mesh& m, const TimeGrid& grid, const SpaceTimeFunction& f, int i, const QuadratureRule& q) {
  return assemble_load(m, pk_average(f, grid, i), q);
}

struct ParabolicOperator::Factor {
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
};

ParabolicOperator::ParabolicOperator(Mesh mesh, TimeGrid grid, StepSolver solver)
    : mesh_(std::move(mesh)),
      grid_(grid),
      solver_(solver),
      mass_(assemble_mass(mesh_)),
      stiffness_(assemble_stiffness(mesh_)),
      free_(free_vertices(mesh_)) {
  step_matrix_ = restrict_to(SparseMatrix(mass_ / grid_.step() + stiffness_), free_);
  if (solver_ == StepSolver::kCholesky && step_matrix_.rows() > 0) {
    factor_ = std::make_unique<Factor>();
    factor_->llt.compute(Eigen::SparseMatrix<double>(step_matrix_));
    if (factor_->llt.info() != Eigen::Success) throw SolverError("Cholesky factorisation of M/k + K failed", 1.0);
  }
}

ParabolicOperator::~ParabolicOperator() = default;
ParabolicOperator::ParabolicOperator(ParabolicOperator&&) noexcept = default;
ParabolicOperator& ParabolicOperator::operator=(ParabolicOperator&&) noexcept = default;

NodalField ParabolicOperator::solve_step(const Vector& load) const {
  const Vector rhs = restrict_to(load, free_);
  Vector x;
  if (rhs.size() == 0) {
    x = rhs;
  } else if (solver_ == StepSolver::kCholesky) {
    x = factor_->llt.solve(rhs);
  } else {
    x = cg_solve(step_matrix_, rhs, CgOptions{1e-13, true});
  }
  return extend_by_zero(x, free_, mesh_.num_vertices());
}

namespace {

void check_loads(std::span<const Vector> loads, const ParabolicOperator& op, const char* what) {
  if (static_cast<int>(loads.size()) != op.grid().steps()) {
    throw ValidationError(std::string(what) + ": expected one load per time interval");
  }
  for (const auto& l : loads) {
    if (l.size() != op.mesh().num_vertices()) throw ValidationError(std::string(what) + ": load size mismatch");
  }
}

}  // namespace

Trajectory solve_state(const ParabolicOperator& op, std::span<const Vector> source, const ControlField& u,
                       const NodalField& y0) {
  const auto& m = op.mesh();
  const int n_steps = op.grid().steps();
  check_loads(source, op, "solve_state");
  if (u.rows() != n_steps || u.cols() != m.num_triangles()) throw ValidationError("solve_state: control shape mismatch");
  if (y0.size() != m.num_vertices()) throw ValidationError("solve_state: initial field size mismatch");

  const double inv_k = 1.0 / op.grid().step();
  Trajectory y;
  y.levels.reserve(static_cast<std::size_t>(n_steps) + 1);
  y.levels.push_back(extend_by_zero(restrict_to(y0, op.free()), op.free(), m.num_vertices()));
  for (int i = 1; i <= n_steps; ++i) {
    Vector rhs = inv_k * (op.mass() * y[i - 1]) + source[static_cast<std::size_t>(i - 1)];
    rhs += assemble_cellwise_load(m, u.row(i - 1).transpose());
    y.levels.push_back(op.solve_step(rhs));
  }
  return y;
}

Trajectory solve_costate(const ParabolicOperator& op, const Trajectory& state, std::span<const Vector> target) {
  const auto& m = op.mesh();
  const int n_steps = op.grid().steps();
  check_loads(target, op, "solve_costate");
  if (state.steps() != n_steps) throw ValidationError("solve_costate: state has the wrong number of levels");

  const double inv_k = 1.0 / op.grid().step();
  Trajectory z;
  z.levels.assign(static_cast<std::size_t>(n_steps) + 1, NodalField::Zero(m.num_vertices()));
  for (int i = n_steps; i >= 1; --i) {
    const Vector rhs =
        inv_k * (op.mass() * z[i]) + op.mass() * state[i] - target[static_cast<std::size_t>(i - 1)];
    z.levels[static_cast<std::size_t>(i - 1)] = op.solve_step(rhs);
  }
  return z;
}

std::vector<Vector> measure_loads(const TimeMeasure& mu, const Mesh& m, const TimeGrid& grid, const QuadratureRule& q) {
  std::vector<Vector> loads;
  loads.reserve(static_cast<std::size_t>(grid.steps()));
  for (int i = 1; i <= grid.steps(); ++i) loads.push_back(measure_load(mu, m, grid, i, q));
  return loads;
}

std::vector<Vector> desired_state_loads(const SpaceTimeFunction& yd, const Mesh& m, const TimeGrid& grid,
                                        const QuadratureRule& q) {
  std::vector<Vector> loads;
  loads.reserve(static_cast<std::size_t>(grid.steps()));
  for (int i = 1; i <= grid.steps(); ++i) loads.push_back(averaged_load(m, grid, yd, i, q));
  return loads;
}

Trajectory solve_state(const Mesh& m, const TimeGrid& grid, const TimeMeasure& mu, const ControlField& u,
                       const NodalField& y0) {
  const ParabolicOperator op(m, grid);
  return solve_state(op, measure_loads(mu, m, grid), u, y0);
}

Trajectory solve_costate(const Mesh& m, const TimeGrid& grid, const Trajectory& state, const SpaceTimeFunction& yd) {
  const ParabolicOperator op(m, grid);
  return solve_costate(op, state, desired_state_loads(yd, m, grid));
}

void write_trajectory_csv(std::ostream& os, const Mesh& m, const Trajectory& traj) {
  os << "level,vertex_index,x,y,value\n";
  char buf[128];
  for (int level = 0; level <= traj.steps(); ++level) {
    for (Index v = 0; v < m.num_vertices(); ++v) {
      const auto& p = m.vertex(v);
      std::snprintf(buf, sizeof buf, "%d,%d,%.10g,%.10g,%.10g\n", level, v, p.x(), p.y(), traj[level][v]);
      os << buf;
    }
  }
}

}  // namespace parcon
