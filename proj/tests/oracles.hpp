#pragma once

// Test-only reference implementations. They share no code path with the
// library's assembly or solvers beyond the mesh container.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "parcon/dynamics.hpp"

namespace parcon::oracle {

// Stiffness from the cotangent formula: K_ij = -(cot a + cot b)/2 over the
// angles opposite edge ij.
inline Eigen::MatrixXd dense_stiffness(const Mesh& m) {
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(m.num_vertices(), m.num_vertices());
  for (const auto& t : m.triangles()) {
    for (int e = 0; e < 3; ++e) {
      const Index i = t[(e + 1) % 3];
      const Index j = t[(e + 2) % 3];
      const Point2 u = m.vertex(i) - m.vertex(t[e]);
      const Point2 v = m.vertex(j) - m.vertex(t[e]);
      const double cot = u.dot(v) / std::abs(u.x() * v.y() - u.y() * v.x());
      k(i, j) -= 0.5 * cot;
      k(j, i) -= 0.5 * cot;
      k(i, i) += 0.5 * cot;
      k(j, j) += 0.5 * cot;
    }
  }
  return k;
}

// Mass by exact integration of barycentric monomials:
// int l_i l_j = |K| (1 + delta_ij) / 12.
inline Eigen::MatrixXd dense_mass(const Mesh& m) {
  Eigen::MatrixXd mm = Eigen::MatrixXd::Zero(m.num_vertices(), m.num_vertices());
  for (Index t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangle(t);
    const double a = m.area(t);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) mm(tri[i], tri[j]) += a * (i == j ? 2.0 : 1.0) / 12.0;
  }
  return mm;
}

// Maps a per-triangle constant to its load vector.
inline Eigen::MatrixXd dense_cell_load(const Mesh& m) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m.num_vertices(), m.num_triangles());
  for (Index t = 0; t < m.num_triangles(); ++t)
    for (Index v : m.triangle(t).v) b(v, t) += m.area(t) / 3.0;
  return b;
}

inline Eigen::MatrixXd select(const Eigen::MatrixXd& a, const std::vector<Index>& rows, const std::vector<Index>& cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) out(r, c) = a(rows[r], cols[c]);
  return out;
}

inline std::vector<Index> interior(const Mesh& m) {
  std::vector<Index> out;
  for (Index i = 0; i < m.num_vertices(); ++i)
    if (!m.is_boundary(i)) out.push_back(i);
  return out;
}

// Backward Euler for the state by dense LU on the interior block.
inline std::vector<Eigen::VectorXd> dense_state(const Mesh& m, const TimeGrid& grid, const std::vector<Eigen::VectorXd>& source,
                                                const ControlField& u, const Eigen::VectorXd& y0) {
  const auto in = interior(m);
  const double k = grid.step();
  const Eigen::MatrixXd mass = dense_mass(m);
  const Eigen::MatrixXd a = select(mass / k + dense_stiffness(m), in, in);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const Eigen::MatrixXd b = dense_cell_load(m);
  std::vector<Eigen::VectorXd> y{Eigen::VectorXd::Zero(m.num_vertices())};
  for (std::size_t r = 0; r < in.size(); ++r) y[0][in[r]] = y0[in[r]];
  for (int i = 1; i <= grid.steps(); ++i) {
    const Eigen::VectorXd full = mass / k * y.back() + source[i - 1] + b * u.row(i - 1).transpose();
    Eigen::VectorXd rhs(in.size());
    for (std::size_t r = 0; r < in.size(); ++r) rhs[r] = full[in[r]];
    const Eigen::VectorXd x = lu.solve(rhs);
    Eigen::VectorXd next = Eigen::VectorXd::Zero(m.num_vertices());
    for (std::size_t r = 0; r < in.size(); ++r) next[in[r]] = x[r];
    y.push_back(next);
  }
  return y;
}

inline std::vector<Eigen::VectorXd> dense_costate(const Mesh& m, const TimeGrid& grid, const std::vector<Eigen::VectorXd>& y,
                                                  const std::vector<Eigen::VectorXd>& target) {
  const auto in = interior(m);
  const double k = grid.step();
  const Eigen::MatrixXd mass = dense_mass(m);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(select(mass / k + dense_stiffness(m), in, in));
  std::vector<Eigen::VectorXd> z(grid.steps() + 1, Eigen::VectorXd::Zero(m.num_vertices()));
  for (int i = grid.steps(); i >= 1; --i) {
    const Eigen::VectorXd full = mass / k * z[i] + mass * y[i] - target[i - 1];
    Eigen::VectorXd rhs(in.size());
    for (std::size_t r = 0; r < in.size(); ++r) rhs[r] = full[in[r]];
    const Eigen::VectorXd x = lu.solve(rhs);
    for (std::size_t r = 0; r < in.size(); ++r) z[i - 1][in[r]] = x[r];
  }
  return z;
}

// Composite midpoint-refined quadrature: each triangle is split `depth` times
// by red refinement and integrated with the centroid rule.
template <class F>
double fine_integral(const Point2& a, const Point2& b, const Point2& c, F&& f, int depth) {
  if (depth == 0) {
    const double area = 0.5 * std::abs((b - a).x() * (c - a).y() - (c - a).x() * (b - a).y());
    return area * f((a + b + c) / 3.0);
  }
  const Point2 ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
  return fine_integral(a, ab, ca, f, depth - 1) + fine_integral(ab, b, bc, f, depth - 1) +
         fine_integral(ca, bc, c, f, depth - 1) + fine_integral(ab, bc, ca, f, depth - 1);
}

}  // namespace parcon::oracle
