#include "parcon/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "parcon/errors.hpp"

namespace parcon {

namespace {

constexpr double pi = std::numbers::pi;

double radial_sin(const Point2& x) { return std::sin(pi * x.squaredNorm()); }

// -Laplacian of sin(pi |x|^2) in two dimensions.
double radial_minus_laplacian(const Point2& x) {
  const double r2 = x.squaredNorm();
  return -4.0 * pi * std::cos(pi * r2) + 4.0 * pi * pi * r2 * std::sin(pi * r2);
}

// Time profile of the state; jumps by 1 at t = 1/2.
double state_profile(double t) { return t < 0.5 ? t * t : t * t + 2.0 * t; }
double state_profile_rate(double t) { return t < 0.5 ? 2.0 * t : 2.0 * t + 2.0; }

std::string format6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string format6(const std::optional<double>& v) { return v ? format6(*v) : std::string(); }

double p1_at(const NodalField& v, const Triangle& tri, const Eigen::Vector3d& lambda) {
  return lambda[0] * v[tri[0]] + lambda[1] * v[tri[1]] + lambda[2] * v[tri[2]];
}

}  // namespace

namespace {

// y = profile(x) g(t), z = profile(x) c(t), u = P(-z / alpha), with a unit
// jump of g at t = 1/2 carried by a Dirac atom. The source is whatever makes
// y_t - Laplace y = mu + u hold and y_d whatever makes
// -z_t - Laplace z = y - y_d hold.
struct SeparableData {
  SpatialFunction profile;
  SpatialFunction minus_laplacian;
  TimeFunction costate_time;
  TimeFunction costate_time_rate;
};

ManufacturedProblem separable_problem(std::string id, SeparableData s, double alpha, Bounds bounds) {
  bounds.validate();
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  ManufacturedProblem p;
  p.id = std::move(id);
  p.alpha = alpha;
  p.bounds = bounds;
  p.exact_state = [s](const Point2& x, double t) { return s.profile(x) * state_profile(t); };
  p.exact_costate = [s](const Point2& x, double t) { return s.profile(x) * s.costate_time(t); };
  p.exact_control = [s, alpha, bounds](const Point2& x, double t) {
    return box_project(-s.profile(x) * s.costate_time(t) / alpha, bounds);
  };

  auto& d = p.data;
  d.final_time = 1.0;
  d.measure.atoms = {{0.5, 1.0}};
  d.measure.atom_profile = [s](const Point2& x, double) { return s.profile(x); };
  d.measure.density = [](double) { return 1.0; };
  d.measure.density_profile = [s, u = p.exact_control](const Point2& x, double t) {
    return s.profile(x) * state_profile_rate(t) + s.minus_laplacian(x) * state_profile(t) - u(x, t);
  };
  d.desired_state = [s](const Point2& x, double t) {
    return s.profile(x) * (state_profile(t) + s.costate_time_rate(t)) - s.minus_laplacian(x) * s.costate_time(t);
  };
  d.initial_state = [](const Point2&) { return 0.0; };
  return p;
}

// s (1 - s) (s - 1/2) and its second derivative.
double cubic(double s) { return s * (1.0 - s) * (s - 0.5); }
double cubic_dd(double s) { return 3.0 - 6.0 * s; }

constexpr double kConsistentScale = 200.0;

}  // namespace

ManufacturedProblem lshape_measure_problem(double alpha, Bounds bounds) {
  return separable_problem("lshape-measure",
                           {radial_sin, radial_minus_laplacian, [](double t) { return t; }, [](double) { return 1.0; }},
                           alpha, bounds);
}

ManufacturedProblem lshape_consistent_problem(double alpha, Bounds bounds) {
  SeparableData s;
  s.profile = [](const Point2& x) { return kConsistentScale * cubic(x.x()) * cubic(x.y()); };
  s.minus_laplacian = [](const Point2& x) {
    return -kConsistentScale * (cubic_dd(x.x()) * cubic(x.y()) + cubic(x.x()) * cubic_dd(x.y()));
  };
  s.costate_time = [](double t) { return 1.0 - t; };
  s.costate_time_rate = [](double) { return -1.0; };
  return separable_problem("lshape-consistent", std::move(s), alpha, bounds);
}

ControlProblem smooth_tracking_problem() {
  ControlProblem p;
  p.final_time = 1.0;
  p.desired_state = [](const Point2& x, double t) {
    return std::sin(pi * x.x()) * std::sin(pi * x.y()) * (1.0 + t) - 0.5 * t * t;
  };
  p.initial_state = [](const Point2& x) { return x.x() * x.y(); };
  return p;
}

ManufacturedProblem problem_by_id(const std::string& id, double alpha, Bounds bounds) {
  if (id == "lshape-measure") return lshape_measure_problem(alpha, bounds);
  if (id == "lshape-consistent") return lshape_consistent_problem(alpha, bounds);
  throw ValidationError("unknown problem '" + id + "'");
}

std::vector<NodalField> state_on_intervals(const Trajectory& y) {
  return {y.levels.begin() + 1, y.levels.end()};
}

std::vector<NodalField> costate_on_intervals(const Trajectory& z) {
  return {z.levels.begin(), z.levels.end() - 1};
}

double l2l2_error(const Mesh& m, const TimeGrid& grid, std::span<const NodalField> per_interval,
                  const SpaceTimeFunction& exact, const QuadratureRule& q) {
  if (static_cast<int>(per_interval.size()) != grid.steps()) throw ValidationError("l2l2_error: need one field per interval");
  const auto& gauss = gauss_legendre(2);
  const double half = 0.5 * grid.step();
  double sum = 0.0;
  for (int i = 1; i <= grid.steps(); ++i) {
    const auto& v = per_interval[static_cast<std::size_t>(i - 1)];
    if (v.size() != m.num_vertices()) throw ValidationError("l2l2_error: field size mismatch");
    const double mid = 0.5 * (grid.time(i - 1) + grid.time(i));
    for (Index t = 0; t < m.num_triangles(); ++t) {
      const auto& tri = m.triangle(t);
      const auto pts = quadrature_points(m, t, q);
      double local = 0.0;
      for (std::size_t k = 0; k < q.size(); ++k) {
        const double vh = p1_at(v, tri, q.points[k]);
        for (std::size_t g = 0; g < gauss.nodes.size(); ++g) {
          local += q.weights[k] * gauss.weights[g] * std::pow(vh - exact(pts[k], mid + half * gauss.nodes[g]), 2);
        }
      }
      sum += half * m.area(t) * local;
    }
  }
  return std::sqrt(sum);
}

double l2l2_error(const Mesh& m, const TimeGrid& grid, const ControlField& u, const SpaceTimeFunction& exact,
                  const QuadratureRule& q) {
  if (u.rows() != grid.steps() || u.cols() != m.num_triangles()) throw ValidationError("l2l2_error: control shape mismatch");
  const auto& gauss = gauss_legendre(2);
  const double half = 0.5 * grid.step();
  double sum = 0.0;
  for (int i = 1; i <= grid.steps(); ++i) {
    const double mid = 0.5 * (grid.time(i - 1) + grid.time(i));
    for (Index t = 0; t < m.num_triangles(); ++t) {
      const auto pts = quadrature_points(m, t, q);
      double local = 0.0;
      for (std::size_t k = 0; k < q.size(); ++k) {
        for (std::size_t g = 0; g < gauss.nodes.size(); ++g) {
          local += q.weights[k] * gauss.weights[g] * std::pow(u(i - 1, t) - exact(pts[k], mid + half * gauss.nodes[g]), 2);
        }
      }
      sum += half * m.area(t) * local;
    }
  }
  return std::sqrt(sum);
}

double final_time_error(const Mesh& m, const NodalField& y_final, const SpaceTimeFunction& exact, double final_time,
                        const QuadratureRule& q) {
  if (y_final.size() != m.num_vertices()) throw ValidationError("final_time_error: field size mismatch");
  double sum = 0.0;
  for (Index t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangle(t);
    const auto pts = quadrature_points(m, t, q);
    double local = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
      local += q.weights[k] * std::pow(p1_at(y_final, tri, q.points[k]) - exact(pts[k], final_time), 2);
    }
    sum += m.area(t) * local;
  }
  return std::sqrt(sum);
}

double eoc(double e1, double e2, double h1, double h2) {
  if (!(e1 > 0.0 && e2 > 0.0 && h1 > 0.0 && h2 > 0.0)) throw DomainError("eoc needs positive errors and mesh sizes");
  if (h1 == h2) throw DomainError("eoc is undefined for equal mesh sizes");
  return std::log(e1 / e2) / std::log(h1 / h2);
}

int time_steps_for(double h, double final_time) {
  int n = static_cast<int>(std::ceil(final_time / (h * h) - 1e-9));
  n = std::max(n, 2);
  return n % 2 == 0 ? n : n + 1;
}

ConvergenceRow solve_level(const ManufacturedProblem& problem, int n, const OptimizerConfig& cfg) {
  Mesh mesh = build_lshape_mesh(n);
  ConvergenceRow row;
  row.level = n;
  row.h = mesh.h();
  row.dof = mesh.num_interior_vertices();
  row.steps = time_steps_for(mesh.h(), problem.data.final_time);
  const TimeGrid grid(problem.data.final_time, row.steps);
  const DiscreteControlProblem discrete(problem.data, std::move(mesh), grid);
  const auto sol = projected_gradient_solve(discrete, cfg);
  const auto& m = discrete.mesh();
  row.err_y = l2l2_error(m, grid, state_on_intervals(sol.y), problem.exact_state);
  row.err_z = l2l2_error(m, grid, costate_on_intervals(sol.z), problem.exact_costate);
  row.err_u = l2l2_error(m, grid, sol.u, problem.exact_control);
  row.err_y_final = final_time_error(m, sol.y[grid.steps()], problem.exact_state, grid.final_time());
  row.iterations = sol.report.iterations;
  row.kkt = sol.report.kkt_residual;
  row.converged = sol.report.converged;
  return row;
}

ConvergenceReport run_convergence_study(const StudyConfig& cfg) {
  cfg.optimizer.validate();
  if (cfg.levels.empty()) throw ValidationError("study needs at least one level");
  for (std::size_t l = 0; l < cfg.levels.size(); ++l) {
    const int n = cfg.levels[l];
    if (n < 2 || n % 2 != 0) throw ValidationError("study levels must be even and positive, got " + std::to_string(n));
    if (l > 0 && n <= cfg.levels[l - 1]) {
      throw ValidationError("study levels must be strictly increasing (rates need distinct mesh sizes)");
    }
  }
  const auto problem = problem_by_id(cfg.problem, cfg.optimizer.alpha, cfg.optimizer.bounds);

  auto attempt = [&](int n) {
    try {
      return solve_level(problem, n, cfg.optimizer);
    } catch (const std::exception& e) {
      ConvergenceRow row;
      row.level = n;
      row.h = std::sqrt(2.0) / n;
      row.steps = time_steps_for(row.h, problem.data.final_time);
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.err_y = row.err_z = row.err_u = row.err_y_final = nan;
      row.failure = e.what();
      return row;
    }
  };

  ConvergenceReport report;
  report.rows.resize(cfg.levels.size());
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(cfg.threads, cfg.levels.size()));
  for (std::size_t start = 0; start < cfg.levels.size(); start += workers) {
    std::vector<std::future<ConvergenceRow>> batch;
    for (std::size_t l = start; l < std::min(start + workers, cfg.levels.size()); ++l) {
      batch.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred, attempt, cfg.levels[l]));
    }
    for (std::size_t b = 0; b < batch.size(); ++b) report.rows[start + b] = batch[b].get();
  }

  for (std::size_t l = 1; l < report.rows.size(); ++l) {
    auto& cur = report.rows[l];
    const auto& prev = report.rows[l - 1];
    if (!cur.failure.empty() || !prev.failure.empty()) continue;
    auto rate = [&](double e1, double e2) -> std::optional<double> {
      if (!(e1 > 0.0 && e2 > 0.0)) return std::nullopt;
      return eoc(e1, e2, prev.h, cur.h);
    };
    cur.rate_y = rate(prev.err_y, cur.err_y);
    cur.rate_z = rate(prev.err_z, cur.err_z);
    cur.rate_u = rate(prev.err_u, cur.err_u);
    cur.rate_y_final = rate(prev.err_y_final, cur.err_y_final);
  }
  return report;
}

bool ConvergenceReport::complete() const {
  return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.failure.empty(); });
}

std::string ConvergenceReport::to_csv() const {
  std::ostringstream os;
  os << "level,h,dof,N,err_y,err_z,err_u,rate_y,rate_z,rate_u\n";
  for (const auto& r : rows) {
    os << r.level << ',' << format6(r.h) << ',' << r.dof << ',' << r.steps << ',' << format6(r.err_y) << ','
       << format6(r.err_z) << ',' << format6(r.err_u) << ',' << format6(r.rate_y) << ',' << format6(r.rate_z) << ','
       << format6(r.rate_u) << '\n';
  }
  return os.str();
}

std::string ConvergenceReport::final_time_csv() const {
  std::ostringstream os;
  os << "level,h,dof,N,err_y_T,rate_y_T\n";
  for (const auto& r : rows) {
    os << r.level << ',' << format6(r.h) << ',' << r.dof << ',' << r.steps << ',' << format6(r.err_y_final) << ','
       << format6(r.rate_y_final) << '\n';
  }
  return os.str();
}

double gradient_fd_check(const ControlProblem& problem, int n, int steps, double alpha, const GradientCheckOptions& opts,
                         const std::optional<ControlField>& at, const Bounds& bounds) {
  if (opts.num_components < 1) throw InvalidParameter("gradient check needs at least one component");
  if (!(opts.eps > 0.0)) throw InvalidParameter("finite-difference step must be positive");
  const DiscreteControlProblem p(problem, build_lshape_mesh(n), TimeGrid(problem.final_time, steps));
  const auto& m = p.mesh();
  std::mt19937_64 rng(opts.seed);

  ControlField u = p.zero_control();
  if (at) {
    u = *at;
  } else {
    std::uniform_real_distribution<double> value(bounds.lower, bounds.upper);
    for (Index i = 0; i < u.size(); ++i) u.data()[i] = value(rng);
  }
  const ControlField g = reduced_gradient(m, u, p.costate(p.state(u)), alpha);

  std::uniform_int_distribution<int> interval(0, steps - 1);
  std::uniform_int_distribution<Index> cell(0, m.num_triangles() - 1);
  const double k = p.grid().step();
  double worst = 0.0;
  for (int c = 0; c < opts.num_components; ++c) {
    const int i = interval(rng);
    const Index t = cell(rng);
    ControlField plus = u;
    ControlField minus = u;
    plus(i, t) += opts.eps;
    minus(i, t) -= opts.eps;
    const double fd = (reduced_cost(p, plus, alpha) - reduced_cost(p, minus, alpha)) / (2.0 * opts.eps);
    const double analytic = k * m.area(t) * g(i, t);
    const double scale = std::max({std::abs(fd), std::abs(analytic), 1e-14});
    worst = std::max(worst, std::abs(fd - analytic) / scale);
  }
  return worst;
}

std::string convergence_svg(const ConvergenceReport& report) {
  constexpr double width = 480, height = 360, left = 60, right = 20, top = 20, bottom = 50;
  struct Series {
    const char* name;
    const char* colour;
    double ConvergenceRow::*err;
  };
  const Series series[] = {{"y", "#1f77b4", &ConvergenceRow::err_y},
                           {"z", "#d62728", &ConvergenceRow::err_z},
                           {"u", "#2ca02c", &ConvergenceRow::err_u}};

  double hmin = std::numeric_limits<double>::infinity(), hmax = 0.0;
  double emin = std::numeric_limits<double>::infinity(), emax = 0.0;
  for (const auto& r : report.rows) {
    if (!r.failure.empty()) continue;
    hmin = std::min(hmin, r.h);
    hmax = std::max(hmax, r.h);
    for (const auto& s : series) {
      if (r.*s.err > 0.0) {
        emin = std::min(emin, r.*s.err);
        emax = std::max(emax, r.*s.err);
      }
    }
  }
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!(hmax > 0.0) || !(emax > 0.0)) {
    os << "</svg>\n";
    return os.str();
  }
  const double lx0 = std::floor(std::log10(hmin)), lx1 = std::ceil(std::log10(hmax));
  const double ly0 = std::floor(std::log10(emin)), ly1 = std::ceil(std::log10(emax));
  auto px = [&](double h) { return left + (std::log10(h) - lx0) / std::max(lx1 - lx0, 1.0) * (width - left - right); };
  auto py = [&](double e) {
    return height - bottom - (std::log10(e) - ly0) / std::max(ly1 - ly0, 1.0) * (height - top - bottom);
  };
  char buf[160];
  os << "<g stroke=\"black\" fill=\"none\">\n";
  std::snprintf(buf, sizeof buf, "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\"/>\n", left, top,
                width - left - right, height - top - bottom);
  os << buf << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (double d = lx0; d <= lx1; d += 1.0) {
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">1e%d</text>\n", px(std::pow(10.0, d)),
                  height - bottom + 15, static_cast<int>(d));
    os << buf;
  }
  for (double d = ly0; d <= ly1; d += 1.0) {
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">1e%d</text>\n", left - 5,
                  py(std::pow(10.0, d)) + 4, static_cast<int>(d));
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">h</text>\n",
                left + 0.5 * (width - left - right), height - 10);
  os << buf << "</g>\n";

  // Slope-1/2 guide through the first y error.
  for (const auto& r : report.rows) {
    if (!r.failure.empty() || !(r.err_y > 0.0)) continue;
    const double e_lo = r.err_y * std::sqrt(hmin / r.h);
    const double e_hi = r.err_y * std::sqrt(hmax / r.h);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n",
                  px(hmin), py(e_lo), px(hmax), py(e_hi));
    os << buf;
    break;
  }
  int legend = 0;
  for (const auto& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.colour << "\" points=\"";
    for (const auto& r : report.rows) {
      if (!r.failure.empty() || !(r.*s.err > 0.0)) continue;
      std::snprintf(buf, sizeof buf, "%.1f,%.1f ", px(r.h), py(r.*s.err));
      os << buf;
    }
    os << "\"/>\n";
    for (const auto& r : report.rows) {
      if (!r.failure.empty() || !(r.*s.err > 0.0)) continue;
      std::snprintf(buf, sizeof buf, "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"3\" fill=\"%s\"/>\n", px(r.h), py(r.*s.err),
                    s.colour);
      os << buf;
    }
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"12\" fill=\"%s\">err_%s</text>\n",
                  left + 10, top + 15 + 15.0 * legend++, s.colour, s.name);
    os << buf;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace parcon
