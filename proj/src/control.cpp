#include "parcon/control.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "parcon/errors.hpp"

namespace parcon {

void Bounds::validate() const {
  if (!(lower < upper)) {
    throw ValidationError("control bounds need u_a < u_b, got u_a = " + std::to_string(lower) +
                          ", u_b = " + std::to_string(upper));
  }
}

void OptimizerConfig::validate() const {
  bounds.validate();
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  if (step < 0.0) throw ValidationError("step must be positive (or zero for 1/alpha)");
  if (!(tol > 0.0)) throw ValidationError("tol must be positive");
  if (max_iter < 1) throw ValidationError("max_iter must be at least 1");
}

ControlField box_project(const ControlField& u, const Bounds& b) {
  return u.unaryExpr([&](double v) { return box_project(v, b); });
}

Vector cell_average(const Mesh& m, const NodalField& v) {
  if (v.size() != m.num_vertices()) throw ValidationError("cell_average: field size mismatch");
  Vector avg(m.num_triangles());
  for (Index t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangle(t);
    avg[t] = (v[tri[0]] + v[tri[1]] + v[tri[2]]) / 3.0;
  }
  return avg;
}

namespace {

Vector triangle_areas(const Mesh& m) {
  Vector a(m.num_triangles());
  for (Index t = 0; t < m.num_triangles(); ++t) a[t] = m.area(t);
  return a;
}

void check_shape(const Mesh& m, int steps, const ControlField& u, const char* what) {
  if (u.rows() != steps || u.cols() != m.num_triangles()) {
    throw ValidationError(std::string(what) + ": control shape mismatch");
  }
}

}  // namespace

DiscreteControlProblem::DiscreteControlProblem(const ControlProblem& problem, Mesh mesh, TimeGrid grid,
                                               const QuadratureRule& q)
    : op_(std::move(mesh), grid) {
  if (std::abs(grid.final_time() - problem.final_time) > 1e-14 * problem.final_time) {
    throw ValidationError("time grid does not cover [0, T] of the problem");
  }
  const auto& m = op_.mesh();
  source_ = measure_loads(problem.measure, m, grid, q);
  target_ = desired_state_loads(problem.desired_state, m, grid, q);
  target_norm2_.assign(static_cast<std::size_t>(grid.steps()), 0.0);
  for (int i = 1; i <= grid.steps(); ++i) {
    const auto avg = pk_average(problem.desired_state, grid, i);
    double s = 0.0;
    for (Index t = 0; t < m.num_triangles(); ++t) {
      const auto pts = quadrature_points(m, t, q);
      double local = 0.0;
      for (std::size_t k = 0; k < q.size(); ++k) local += q.weights[k] * std::pow(avg(pts[k]), 2);
      s += m.area(t) * local;
    }
    target_norm2_[static_cast<std::size_t>(i - 1)] = s;
  }
  y0_ = problem.initial_state ? l2_project_interior(m, problem.initial_state, q) : NodalField::Zero(m.num_vertices());
}

Trajectory DiscreteControlProblem::state(const ControlField& u) const { return solve_state(op_, source_, u, y0_); }

Trajectory DiscreteControlProblem::costate(const Trajectory& y) const { return solve_costate(op_, y, target_); }

double cost_functional(const DiscreteControlProblem& p, const ControlField& u, const Trajectory& y, double alpha) {
  const auto& m = p.mesh();
  const int n = p.grid().steps();
  check_shape(m, n, u, "cost_functional");
  if (y.steps() != n) throw ValidationError("cost_functional: trajectory length mismatch");
  const Vector areas = triangle_areas(m);
  double sum = 0.0;
  for (int i = 1; i <= n; ++i) {
    const auto idx = static_cast<std::size_t>(i - 1);
    const double tracking = y[i].dot(p.op().mass() * y[i]) - 2.0 * y[i].dot(p.target()[idx]) + p.target_norm2()[idx];
    const double control = areas.dot(u.row(i - 1).transpose().cwiseAbs2());
    sum += tracking + alpha * control;
  }
  return 0.5 * p.grid().step() * sum;
}

double cost_functional(const Mesh& m, const TimeGrid& grid, const ControlField& u, const Trajectory& y,
                       const SpaceTimeFunction& yd, double alpha, const QuadratureRule& q) {
  const int n = grid.steps();
  check_shape(m, n, u, "cost_functional");
  if (y.steps() != n) throw ValidationError("cost_functional: trajectory length mismatch");
  double sum = 0.0;
  for (int i = 1; i <= n; ++i) {
    const auto avg = pk_average(yd, grid, i);
    for (Index t = 0; t < m.num_triangles(); ++t) {
      const auto& tri = m.triangle(t);
      const auto pts = quadrature_points(m, t, q);
      double local = 0.0;
      for (std::size_t k = 0; k < q.size(); ++k) {
        const auto& l = q.points[k];
        const double yh = l[0] * y[i][tri[0]] + l[1] * y[i][tri[1]] + l[2] * y[i][tri[2]];
        local += q.weights[k] * std::pow(yh - avg(pts[k]), 2);
      }
      sum += m.area(t) * (local + alpha * u(i - 1, t) * u(i - 1, t));
    }
  }
  return 0.5 * grid.step() * sum;
}

double reduced_cost(const DiscreteControlProblem& p, const ControlField& u, double alpha) {
  return cost_functional(p, u, p.state(u), alpha);
}

ControlField reduced_gradient(const Mesh& m, const ControlField& u, const Trajectory& z, double alpha) {
  const int n = z.steps();
  check_shape(m, n, u, "reduced_gradient");
  ControlField g(n, m.num_triangles());
  for (int i = 1; i <= n; ++i) g.row(i - 1) = alpha * u.row(i - 1) + cell_average(m, z[i - 1]).transpose();
  return g;
}

double control_norm(const Mesh& m, const TimeGrid& grid, const ControlField& v) {
  check_shape(m, grid.steps(), v, "control_norm");
  const Vector areas = triangle_areas(m);
  return std::sqrt(grid.step() * (v.cwiseAbs2() * areas).sum());
}

double kkt_residual(const Mesh& m, const ControlField& u, const Trajectory& z, const OptimizerConfig& cfg) {
  const ControlField g = reduced_gradient(m, u, z, cfg.alpha);
  if (u.size() == 0) return 0.0;
  return (u - box_project(u - g, cfg.bounds)).cwiseAbs().maxCoeff();
}

OptimalControl projected_gradient_solve(const DiscreteControlProblem& p, const OptimizerConfig& cfg) {
  cfg.validate();
  const auto& m = p.mesh();
  const double step = cfg.effective_step();
  OptimalControl out;
  out.u = p.zero_control();
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    const Trajectory y = p.state(out.u);
    const Trajectory z = p.costate(y);
    out.report.cost_history.push_back(cost_functional(p, out.u, y, cfg.alpha));
    const ControlField next = box_project(out.u - step * reduced_gradient(m, out.u, z, cfg.alpha), cfg.bounds);
    const double increment = control_norm(m, p.grid(), next - out.u);
    out.report.step_norms.push_back(increment);
    out.report.iterations = iter;
    out.u = next;
    if (increment <= cfg.tol) {
      out.report.converged = true;
      break;
    }
  }
  out.y = p.state(out.u);
  out.z = p.costate(out.y);
  out.report.cost_history.push_back(cost_functional(p, out.u, out.y, cfg.alpha));
  out.report.kkt_residual = kkt_residual(m, out.u, out.z, cfg);
  return out;
}

void write_control_csv(std::ostream& os, const Mesh& m, const ControlField& u) {
  os << "interval,triangle,centroid_x,centroid_y,value\n";
  char buf[128];
  for (Index i = 0; i < u.rows(); ++i) {
    for (Index t = 0; t < m.num_triangles(); ++t) {
      const Point2 c = m.centroid(t);
      std::snprintf(buf, sizeof buf, "%d,%d,%.10g,%.10g,%.10g\n", i + 1, t, c.x(), c.y(), u(i, t));
      os << buf;
    }
  }
}

}  // namespace parcon
