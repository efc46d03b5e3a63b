#include "parcon/fem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <thread>

#include <Eigen/IterativeLinearSolvers>

#include "parcon/errors.hpp"

namespace parcon {

namespace {

using Triplet = Eigen::Triplet<double, int>;
using LocalKernel = Eigen::Matrix3d (*)(const Eigen::Vector2d&, const Eigen::Vector2d&, const Eigen::Vector2d&);

void check_area(const Mesh& m, Index t) {
  if (m.area(t) <= kDegenerateArea) {
    throw ValidationError("degenerate triangle " + std::to_string(t) + " (area " + std::to_string(m.area(t)) + ")");
  }
}

void element_triplets(const Mesh& m, Index begin, Index end, LocalKernel kernel, std::vector<Triplet>& out) {
  out.reserve(static_cast<std::size_t>(9 * (end - begin)));
  for (Index t = begin; t < end; ++t) {
    check_area(m, t);
    const auto& tri = m.triangle(t);
    const Eigen::Matrix3d local = kernel(m.vertex(tri[0]), m.vertex(tri[1]), m.vertex(tri[2]));
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) out.emplace_back(tri[i], tri[j], local(i, j));
    }
  }
}

// Element ranges are merged in order, so the triplet sequence and hence the
// summation order of every entry is independent of the thread count.
SparseMatrix assemble(const Mesh& m, LocalKernel kernel, AssemblyOptions opts) {
  const Index nt = m.num_triangles();
  const unsigned workers = std::clamp<unsigned>(opts.threads, 1u, static_cast<unsigned>(std::max<Index>(nt, 1)));
  std::vector<std::vector<Triplet>> chunks(workers);
  std::vector<std::exception_ptr> errors(workers);
  auto run = [&](unsigned w) {
    const Index begin = static_cast<Index>(static_cast<long>(nt) * w / workers);
    const Index end = static_cast<Index>(static_cast<long>(nt) * (w + 1) / workers);
    try {
      element_triplets(m, begin, end, kernel, chunks[w]);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<Triplet> all;
  for (auto& c : chunks) all.insert(all.end(), c.begin(), c.end());
  SparseMatrix a(m.num_vertices(), m.num_vertices());
  a.setFromTriplets(all.begin(), all.end());
  a.makeCompressed();
  return a;
}

Eigen::Matrix3d stiffness_kernel(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  return local_stiffness<double>(a, b, c);
}
Eigen::Matrix3d mass_kernel(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  return local_mass<double>(a, b, c);
}

}  // namespace

SparseMatrix assemble_stiffness(const Mesh& m, AssemblyOptions opts) { return assemble(m, stiffness_kernel, opts); }

SparseMatrix assemble_mass(const Mesh& m, AssemblyOptions opts) { return assemble(m, mass_kernel, opts); }

std::vector<Point2> quadrature_points(const Mesh& m, Index t, const QuadratureRule& q) {
  const auto& tri = m.triangle(t);
  std::vector<Point2> pts;
  pts.reserve(q.size());
  for (const auto& lambda : q.points) {
    pts.push_back(lambda[0] * m.vertex(tri[0]) + lambda[1] * m.vertex(tri[1]) + lambda[2] * m.vertex(tri[2]));
  }
  return pts;
}

Vector assemble_load(const Mesh& m, const SpatialFunction& f, const QuadratureRule& q) {
  Vector b = Vector::Zero(m.num_vertices());
  for (Index t = 0; t < m.num_triangles(); ++t) {
    check_area(m, t);
    const auto& tri = m.triangle(t);
    const double area = m.area(t);
    const auto pts = quadrature_points(m, t, q);
    Eigen::Vector3d local = Eigen::Vector3d::Zero();
    for (std::size_t k = 0; k < q.size(); ++k) local += (q.weights[k] * f(pts[k])) * q.points[k];
    for (int i = 0; i < 3; ++i) b[tri[i]] += area * local[i];
  }
  return b;
}

Vector assemble_cellwise_load(const Mesh& m, const Eigen::Ref<const Vector>& cell_values) {
  if (cell_values.size() != m.num_triangles()) throw ValidationError("cell value count does not match triangle count");
  Vector b = Vector::Zero(m.num_vertices());
  for (Index t = 0; t < m.num_triangles(); ++t) {
    const double share = cell_values[t] * m.area(t) / 3.0;
    for (Index v : m.triangle(t).v) b[v] += share;
  }
  return b;
}

std::vector<Index> free_vertices(const Mesh& m) {
  std::vector<Index> free;
  for (Index i = 0; i < m.num_vertices(); ++i) {
    if (!m.is_boundary(i)) free.push_back(i);
  }
  return free;
}

SparseMatrix restrict_to(const SparseMatrix& a, const std::vector<Index>& free) {
  std::vector<Index> position(static_cast<std::size_t>(a.rows()), -1);
  for (std::size_t r = 0; r < free.size(); ++r) position[static_cast<std::size_t>(free[r])] = static_cast<Index>(r);
  std::vector<Triplet> triplets;
  for (std::size_t r = 0; r < free.size(); ++r) {
    for (SparseMatrix::InnerIterator it(a, free[r]); it; ++it) {
      const Index c = position[static_cast<std::size_t>(it.col())];
      if (c >= 0) triplets.emplace_back(static_cast<Index>(r), c, it.value());
    }
  }
  const auto n = static_cast<Index>(free.size());
  SparseMatrix out(n, n);
  out.setFromTriplets(triplets.begin(), triplets.end());
  out.makeCompressed();
  return out;
}

Vector restrict_to(const Vector& v, const std::vector<Index>& free) {
  Vector out(static_cast<Index>(free.size()));
  for (std::size_t r = 0; r < free.size(); ++r) out[static_cast<Index>(r)] = v[free[r]];
  return out;
}

Vector extend_by_zero(const Vector& reduced, const std::vector<Index>& free, Index n) {
  Vector out = Vector::Zero(n);
  for (std::size_t r = 0; r < free.size(); ++r) out[free[r]] = reduced[static_cast<Index>(r)];
  return out;
}

ReducedSystem apply_dirichlet(const SparseMatrix& a, const Vector& b, const Mesh& m) {
  if (a.rows() != m.num_vertices() || a.cols() != m.num_vertices() || b.size() != m.num_vertices()) {
    throw ValidationError("system size does not match the mesh");
  }
  ReducedSystem sys;
  sys.free = free_vertices(m);
  sys.matrix = restrict_to(a, sys.free);
  sys.rhs = restrict_to(b, sys.free);
  return sys;
}

Vector cg_solve(const SparseMatrix& a, const Vector& b, CgOptions opts) {
  if (a.rows() != a.cols() || a.rows() != b.size()) throw ValidationError("cg_solve: dimension mismatch");
  if (!(opts.rel_tol > 0.0 && opts.rel_tol < 1.0)) throw InvalidParameter("cg_solve: rel_tol must lie in (0, 1)");
  const Index n = static_cast<Index>(b.size());
  const double bnorm = b.norm();
  if (n == 0 || bnorm == 0.0) return Vector::Zero(n);

  const Index cap = 10 * n;
  Vector x;
  Index used = 0;
  auto residual = [&] { return (b - a * x).norm() / bnorm; };
  auto run = [&](auto& solver) {
    solver.setTolerance(opts.rel_tol);
    solver.setMaxIterations(cap);
    solver.compute(a);
    x = solver.solve(b);
    used = static_cast<Index>(solver.iterations());
    // The recurrence residual can drift from the true one; polish if needed.
    while (residual() > opts.rel_tol && used < cap) {
      solver.setMaxIterations(cap - used);
      x = solver.solveWithGuess(b, x);
      if (solver.iterations() == 0) break;
      used += static_cast<Index>(solver.iterations());
    }
  };
  if (opts.jacobi) {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
    run(cg);
  } else {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::IdentityPreconditioner> cg;
    run(cg);
  }
  const double r = residual();
  if (!std::isfinite(r) || r > opts.rel_tol) {
    throw SolverError("conjugate gradients did not converge in " + std::to_string(used) + " iterations", r);
  }
  return x;
}

NodalField l2_project(const Mesh& m, const SpatialFunction& f, const QuadratureRule& q) {
  return cg_solve(assemble_mass(m), assemble_load(m, f, q), kProjectionTolerance);
}

NodalField l2_project_interior(const Mesh& m, const SpatialFunction& f, const QuadratureRule& q) {
  const auto sys = apply_dirichlet(assemble_mass(m), assemble_load(m, f, q), m);
  return extend_by_zero(cg_solve(sys.matrix, sys.rhs, kProjectionTolerance), sys.free, m.num_vertices());
}

NodalField ritz_project(const Mesh& m, const H1Function& f, const QuadratureRule& q) {
  Vector rhs;
  if (f.gradient) {
    rhs = Vector::Zero(m.num_vertices());
    for (Index t = 0; t < m.num_triangles(); ++t) {
      check_area(m, t);
      const auto& tri = m.triangle(t);
      const auto g = barycentric_gradients<double>(m.vertex(tri[0]), m.vertex(tri[1]), m.vertex(tri[2]));
      const auto pts = quadrature_points(m, t, q);
      Eigen::Vector2d mean_grad = Eigen::Vector2d::Zero();
      for (std::size_t k = 0; k < q.size(); ++k) mean_grad += q.weights[k] * f.gradient(pts[k]);
      const Eigen::Vector3d local = m.area(t) * (g.transpose() * mean_grad);
      for (int i = 0; i < 3; ++i) rhs[tri[i]] += local[i];
    }
  } else if (f.laplacian) {
    rhs = -assemble_load(m, f.laplacian, q);
  } else {
    throw InvalidParameter("ritz_project needs the gradient or the Laplacian of the target");
  }
  const auto sys = apply_dirichlet(assemble_stiffness(m), rhs, m);
  return extend_by_zero(cg_solve(sys.matrix, sys.rhs, kProjectionTolerance), sys.free, m.num_vertices());
}

NodalField ritz_project(const Mesh& m, const NodalField& v) {
  if (v.size() != m.num_vertices()) throw ValidationError("field size does not match the mesh");
  const SparseMatrix k = assemble_stiffness(m);
  const auto sys = apply_dirichlet(k, k * v, m);
  return extend_by_zero(cg_solve(sys.matrix, sys.rhs, kProjectionTolerance), sys.free, m.num_vertices());
}

double evaluate(const Mesh& m, const NodalField& v, const Point2& p) {
  constexpr double tol = 1e-12;
  for (Index t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangle(t);
    const auto& a = m.vertex(tri[0]);
    const auto& b = m.vertex(tri[1]);
    const auto& c = m.vertex(tri[2]);
    const double area = signed_area(a, b, c);
    const Eigen::Vector3d lambda(signed_area(p, b, c) / area, signed_area(a, p, c) / area,
                                 signed_area(a, b, p) / area);
    if (lambda.minCoeff() >= -tol) return lambda[0] * v[tri[0]] + lambda[1] * v[tri[1]] + lambda[2] * v[tri[2]];
  }
  throw DomainError("point outside the mesh");
}

void write_matrix_market(std::ostream& os, const SparseMatrix& a) {
  os << "%%MatrixMarket matrix coordinate real general\n" << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
  char buf[80];
  for (Index r = 0; r < a.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(a, r); it; ++it) {
      std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", static_cast<long>(it.row()) + 1, static_cast<long>(it.col()) + 1, it.value());
      os << buf;
    }
  }
}

}  // namespace parcon
