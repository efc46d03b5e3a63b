#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "parcon/mesh.hpp"
#include "parcon/quadrature.hpp"

namespace parcon {

/// Compressed-row storage; columns are sorted within each row.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using Vector = Eigen::VectorXd;
/// P1 coefficients, one per mesh vertex.
using NodalField = Eigen::VectorXd;

using SpatialFunction = std::function<double(const Point2&)>;
using GradientFunction = std::function<Eigen::Vector2d(const Point2&)>;

inline constexpr double kDegenerateArea = 1e-14;

// ---------------------------------------------------------------------------
// Element kernels

/// Gradients of the three barycentric coordinates, one per column.
template <class Scalar>
Eigen::Matrix<Scalar, 2, 3> barycentric_gradients(const Eigen::Matrix<Scalar, 2, 1>& p0,
                                                  const Eigen::Matrix<Scalar, 2, 1>& p1,
                                                  const Eigen::Matrix<Scalar, 2, 1>& p2) {
  const Scalar twice_area = (p1 - p0).x() * (p2 - p0).y() - (p2 - p0).x() * (p1 - p0).y();
  Eigen::Matrix<Scalar, 2, 3> g;
  g << p1.y() - p2.y(), p2.y() - p0.y(), p0.y() - p1.y(),  //
      p2.x() - p1.x(), p0.x() - p2.x(), p1.x() - p0.x();
  return g / twice_area;
}

/// Local P1 stiffness matrix; symmetric bit for bit.
template <class Scalar>
Eigen::Matrix<Scalar, 3, 3> local_stiffness(const Eigen::Matrix<Scalar, 2, 1>& p0,
                                            const Eigen::Matrix<Scalar, 2, 1>& p1,
                                            const Eigen::Matrix<Scalar, 2, 1>& p2) {
  const Scalar area = Scalar(0.5) * ((p1 - p0).x() * (p2 - p0).y() - (p2 - p0).x() * (p1 - p0).y());
  const auto g = barycentric_gradients(p0, p1, p2);
  Eigen::Matrix<Scalar, 3, 3> k;
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) k(i, j) = k(j, i) = area * g.col(i).dot(g.col(j));
  }
  return k;
}

/// Local P1 mass matrix |K|/12 * (1 + delta_ij).
template <class Scalar>
Eigen::Matrix<Scalar, 3, 3> local_mass(const Eigen::Matrix<Scalar, 2, 1>& p0,
                                       const Eigen::Matrix<Scalar, 2, 1>& p1,
                                       const Eigen::Matrix<Scalar, 2, 1>& p2) {
  const Scalar area = Scalar(0.5) * ((p1 - p0).x() * (p2 - p0).y() - (p2 - p0).x() * (p1 - p0).y());
  Eigen::Matrix<Scalar, 3, 3> m = Eigen::Matrix<Scalar, 3, 3>::Constant(area / Scalar(12));
  m.diagonal().array() = area / Scalar(6);
  return m;
}

// ---------------------------------------------------------------------------
// Assembly

struct AssemblyOptions {
  /// Worker threads for the element loop. The result does not depend on it.
  unsigned threads = 1;
};

SparseMatrix assemble_stiffness(const Mesh& m, AssemblyOptions opts = {});
SparseMatrix assemble_mass(const Mesh& m, AssemblyOptions opts = {});

/// (f, phi_i) for every vertex i.
Vector assemble_load(const Mesh& m, const SpatialFunction& f, const QuadratureRule& q = degree2_rule());

/// (u, phi_i) for u constant on each triangle: u_K |K| / 3 per vertex.
Vector assemble_cellwise_load(const Mesh& m, const Eigen::Ref<const Vector>& cell_values);

/// Physical coordinates of the quadrature points of triangle t.
std::vector<Point2> quadrature_points(const Mesh& m, Index t, const QuadratureRule& q);

// ---------------------------------------------------------------------------
// Boundary conditions and solvers

/// Vertices not on the boundary, in increasing order.
std::vector<Index> free_vertices(const Mesh& m);

struct ReducedSystem {
  SparseMatrix matrix;
  Vector rhs;
  /// Reduced index -> mesh vertex.
  std::vector<Index> free;
};

/// Homogeneous Dirichlet conditions by deleting boundary rows and columns.
ReducedSystem apply_dirichlet(const SparseMatrix& a, const Vector& b, const Mesh& m);
SparseMatrix restrict_to(const SparseMatrix& a, const std::vector<Index>& free);
Vector restrict_to(const Vector& v, const std::vector<Index>& free);
/// Scatters reduced values into a full vertex vector, zero elsewhere.
Vector extend_by_zero(const Vector& reduced, const std::vector<Index>& free, Index n);

struct CgOptions {
  double rel_tol = 1e-10;
  bool jacobi = true;
};

/// Conjugate gradients for SPD systems; returns x with
/// ||b - A x|| <= rel_tol ||b||. Throws SolverError after 10 n iterations.
Vector cg_solve(const SparseMatrix& a, const Vector& b, CgOptions opts = {});
inline Vector cg_solve(const SparseMatrix& a, const Vector& b, double rel_tol) {
  return cg_solve(a, b, CgOptions{rel_tol, true});
}

// ---------------------------------------------------------------------------
// Projections

inline constexpr double kProjectionTolerance = 1e-12;

/// L2 projection onto the full P1 space.
NodalField l2_project(const Mesh& m, const SpatialFunction& f, const QuadratureRule& q = degree5_rule());
/// L2 projection onto P1 functions vanishing on the boundary.
NodalField l2_project_interior(const Mesh& m, const SpatialFunction& f,
                               const QuadratureRule& q = degree5_rule());

/// Target of a Ritz projection: an H1_0 function with its gradient or its
/// Laplacian in closed form.
struct H1Function {
  SpatialFunction value;
  GradientFunction gradient;
  SpatialFunction laplacian;
};

/// Energy projection: A(p - f, w) = 0 for all w in the P1 space with zero
/// boundary values. Uses the gradient if present, else (-Laplacian f, w).
NodalField ritz_project(const Mesh& m, const H1Function& f, const QuadratureRule& q = degree5_rule());
/// Energy projection of a P1 field.
NodalField ritz_project(const Mesh& m, const NodalField& v);

// ---------------------------------------------------------------------------
// Evaluation and export

/// Value of a P1 field at an arbitrary point of the mesh (linear search).
double evaluate(const Mesh& m, const NodalField& v, const Point2& p);

void write_matrix_market(std::ostream& os, const SparseMatrix& a);

}  // namespace parcon
