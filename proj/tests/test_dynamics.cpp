#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "parcon/control.hpp"
#include "parcon/dynamics.hpp"
#include "parcon/errors.hpp"

using namespace parcon;

namespace {

constexpr double pi = std::numbers::pi;

std::vector<Vector> zero_loads(const Mesh& m, int n) { return std::vector<Vector>(n, Vector::Zero(m.num_vertices())); }

std::vector<Vector> random_loads(const Mesh& m, int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  std::vector<Vector> out;
  for (int i = 0; i < n; ++i) {
    Vector v(m.num_vertices());
    for (Index j = 0; j < v.size(); ++j) v[j] = nd(rng);
    out.push_back(v);
  }
  return out;
}

ControlField random_control(const Mesh& m, int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ud(-1, 1);
  ControlField u(n, m.num_triangles());
  for (Index i = 0; i < u.size(); ++i) u.data()[i] = ud(rng);
  return u;
}

double max_rel(const std::vector<Vector>& got, const std::vector<Vector>& want) {
  double scale = 0.0, diff = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) {
    scale = std::max(scale, want[i].cwiseAbs().maxCoeff());
    diff = std::max(diff, (got[i] - want[i]).cwiseAbs().maxCoeff());
  }
  return scale > 0.0 ? diff / scale : diff;
}

}  // namespace

TEST(PkAverage, Examples) {
  const TimeGrid g4(1.0, 4);
  EXPECT_NEAR(pk_average([](double) { return 3.5; }, g4, 2), 3.5, 1e-15);
  const TimeGrid fine(1.0, 10);
  EXPECT_NEAR(pk_average([](double t) { return t; }, fine, 1), 0.05, 1e-15);
  EXPECT_NEAR(pk_average([](double t) { return t * t; }, g4, 2), (0.125 - 0.015625) / 0.75, 1e-15);
}

TEST(PkAverage, SpaceTime) {
  const TimeGrid g(2.0, 4);
  const auto avg = pk_average([](const Point2& x, double t) { return x.x() * t * t * t; }, g, 3);
  EXPECT_NEAR(avg(Point2(2.0, 0.0)), 2.0 * (std::pow(1.5, 4) - 1.0) / 4.0 / 0.5, 1e-14);
}

TEST(StateSolve, ZeroDataGivesZero) {
  const Mesh m = build_lshape_mesh(8);
  const TimeGrid grid(1.0, 6);
  const ParabolicOperator op(m, grid);
  const auto y = solve_state(op, zero_loads(m, 6), ControlField::Zero(6, m.num_triangles()), Vector::Zero(m.num_vertices()));
  ASSERT_EQ(y.steps(), 6);
  for (const auto& level : y.levels) EXPECT_TRUE(level.isZero(0.0));
}

TEST(StateSolve, SingleInteriorNodeByHand) {
  const Mesh m = build_unit_square_mesh(2);
  const TimeGrid grid(1.0, 4);
  const ParabolicOperator op(m, grid);
  const auto y = solve_state(op, zero_loads(m, 4), ControlField::Ones(4, m.num_triangles()), Vector::Zero(m.num_vertices()));
  Index centre = -1;
  for (Index i = 0; i < m.num_vertices(); ++i)
    if (!m.is_boundary(i)) centre = i;
  EXPECT_NEAR(y[1][centre], 0.25 / (0.125 / 0.25 + 4.0), 1e-12);
  // Second step: (M/k + K) y2 = M/k y1 + 0.25.
  EXPECT_NEAR(y[2][centre], (0.5 * y[1][centre] + 0.25) / 4.5, 1e-12);
}

TEST(StateSolve, MatchesDenseOracleOnSmallMeshes) {
  std::mt19937_64 rng(5);
  const std::vector<Mesh> meshes{build_lshape_mesh(4), build_lshape_mesh(6), build_unit_square_mesh(4),
                                 build_unit_square_mesh(6)};
  for (const auto& m : meshes) {
    ASSERT_LE(m.num_interior_vertices(), 30);
    for (int n : {1, 3, 8}) {
      const TimeGrid grid(0.7, n);
      const auto src = random_loads(m, n, rng);
      const auto u = random_control(m, n, rng);
      const Vector y0 = random_loads(m, 1, rng)[0];
      const auto y = solve_state(ParabolicOperator(m, grid), src, u, y0);
      EXPECT_LE(max_rel(y.levels, oracle::dense_state(m, grid, src, u, y0)), 1e-10);
    }
  }
}

TEST(CostateSolve, MatchesDenseOracleOnSmallMeshes) {
  std::mt19937_64 rng(9);
  for (const auto& m : {build_lshape_mesh(4), build_lshape_mesh(6), build_unit_square_mesh(6)}) {
    for (int n : {2, 8}) {
      const TimeGrid grid(1.0, n);
      const ParabolicOperator op(m, grid);
      const auto y = solve_state(op, random_loads(m, n, rng), random_control(m, n, rng), Vector::Zero(m.num_vertices()));
      const auto target = random_loads(m, n, rng);
      const auto z = solve_costate(op, y, target);
      EXPECT_TRUE(z[n].isZero(0.0));
      EXPECT_LE(max_rel(z.levels, oracle::dense_costate(m, grid, y.levels, target)), 1e-10);
    }
  }
}

TEST(CostateSolve, VanishesWhenStateMatchesTarget) {
  const Mesh m = build_lshape_mesh(8);
  const TimeGrid grid(1.0, 4);
  const SpaceTimeFunction yd = [](const Point2& x, double t) { return std::sin(pi * x.x()) * (1.0 + t * t) + x.y(); };
  Trajectory y;
  y.levels.push_back(Vector::Zero(m.num_vertices()));
  for (int i = 1; i <= 4; ++i) y.levels.push_back(l2_project_interior(m, pk_average(yd, grid, i)));
  const auto z = solve_costate(m, grid, y, yd);
  for (const auto& level : z.levels) EXPECT_LE(level.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(CostateSolve, ZeroDataGivesZero) {
  const Mesh m = build_lshape_mesh(4);
  const TimeGrid grid(1.0, 4);
  Trajectory y{std::vector<NodalField>(5, NodalField::Zero(m.num_vertices()))};
  const auto z = solve_costate(m, grid, y, [](const Point2&, double) { return 0.0; });
  for (const auto& level : z.levels) EXPECT_TRUE(level.isZero(0.0));
}

TEST(Dynamics, DiscreteAdjointIdentity) {
  // sum_i k (B v^i, z^{i-1}) = sum_i k (M y^i - b_i, dy^i), dy = S v.
  std::mt19937_64 rng(17);
  const Mesh m = build_lshape_mesh(8);
  const TimeGrid grid(1.0, 12);
  const ParabolicOperator op(m, grid);
  const auto y = solve_state(op, random_loads(m, 12, rng), random_control(m, 12, rng), Vector::Zero(m.num_vertices()));
  const auto target = random_loads(m, 12, rng);
  const auto z = solve_costate(op, y, target);
  const auto v = random_control(m, 12, rng);
  const auto dy = solve_state(op, zero_loads(m, 12), v, Vector::Zero(m.num_vertices()));
  double lhs = 0.0, rhs = 0.0;
  for (int i = 1; i <= 12; ++i) {
    lhs += grid.step() * assemble_cellwise_load(m, v.row(i - 1).transpose()).dot(z[i - 1]);
    rhs += grid.step() * (op.mass() * y[i] - target[i - 1]).dot(dy[i]);
  }
  EXPECT_NEAR(lhs, rhs, 1e-9 * std::abs(rhs));
}

TEST(Dynamics, TimeReversalOfCostateIsState) {
  std::mt19937_64 rng(23);
  const Mesh m = build_lshape_mesh(8);
  const int n = 10;
  const TimeGrid grid(1.0, n);
  const ParabolicOperator op(m, grid);
  const auto y = solve_state(op, random_loads(m, n, rng), random_control(m, n, rng), Vector::Zero(m.num_vertices()));
  const auto target = random_loads(m, n, rng);
  const auto z = solve_costate(op, y, target);
  std::vector<Vector> reversed;
  for (int j = 1; j <= n; ++j) reversed.push_back(op.mass() * y[n - j + 1] - target[n - j]);
  const auto w = solve_state(op, reversed, ControlField::Zero(n, m.num_triangles()), Vector::Zero(m.num_vertices()));
  for (int j = 0; j <= n; ++j) EXPECT_LE((w[j] - z[n - j]).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + z[n - j].cwiseAbs().maxCoeff()));
}

TEST(Dynamics, UnconditionallyStable) {
  const Mesh m = build_lshape_mesh(8);
  const SpatialFunction f = [](const Point2& x) { return std::sin(pi * x.x()) + x.y(); };
  double reference = 0.0;
  for (int n : {2, 4, 8, 16, 32, 64, 128, 256}) {
    const TimeGrid grid(1.0, n);
    const ParabolicOperator op(m, grid);
    const auto src = zero_loads(m, n);
    const auto y = solve_state(op, src, ControlField::Constant(n, m.num_triangles(), 0.5), l2_project_interior(m, f));
    const double norm = std::sqrt(y[n].dot(op.mass() * y[n]));
    EXPECT_TRUE(std::isfinite(norm));
    if (n == 2) reference = norm;
    EXPECT_LE(norm, 2.0 * reference + 1.0);
  }
}

TEST(Dynamics, ConjugateGradientStepperAgreesWithCholesky) {
  std::mt19937_64 rng(31);
  const Mesh m = build_lshape_mesh(8);
  const TimeGrid grid(1.0, 6);
  const auto src = random_loads(m, 6, rng);
  const auto u = random_control(m, 6, rng);
  const Vector y0 = Vector::Zero(m.num_vertices());
  const auto a = solve_state(ParabolicOperator(m, grid), src, u, y0);
  const auto b = solve_state(ParabolicOperator(m, grid, StepSolver::kConjugateGradient), src, u, y0);
  EXPECT_LE(max_rel(b.levels, a.levels), 1e-10);
}

TEST(Dynamics, ShapeChecks) {
  const Mesh m = build_lshape_mesh(4);
  const TimeGrid grid(1.0, 4);
  const ParabolicOperator op(m, grid);
  EXPECT_THROW(solve_state(op, zero_loads(m, 3), ControlField::Zero(4, m.num_triangles()), Vector::Zero(m.num_vertices())),
               ValidationError);
  EXPECT_THROW(solve_state(op, zero_loads(m, 4), ControlField::Zero(4, 3), Vector::Zero(m.num_vertices())), ValidationError);
}

TEST(Dynamics, MeasureDrivenStateJumpsAtAtom) {
  const Mesh m = build_lshape_mesh(8);
  const TimeGrid grid(1.0, 4);
  const TimeMeasure mu{{{0.5, 1.0}}, [](const Point2&, double) { return 1.0; }, {}, {}};
  const auto y = solve_state(m, grid, mu, ControlField::Zero(4, m.num_triangles()), Vector::Zero(m.num_vertices()));
  EXPECT_TRUE(y[1].isZero(0.0));
  EXPECT_GT(y[2].maxCoeff(), 0.0);
  EXPECT_LT(y[3].maxCoeff(), y[2].maxCoeff());
}

TEST(TrajectoryCsv, Layout) {
  const Mesh m = build_lshape_mesh(2);
  Trajectory t{{NodalField::Zero(8), NodalField::Ones(8)}};
  std::ostringstream os;
  write_trajectory_csv(os, m, t);
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "level,vertex_index,x,y,value");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 16);
  EXPECT_NE(s.find("\n1,7,"), std::string::npos);
}
