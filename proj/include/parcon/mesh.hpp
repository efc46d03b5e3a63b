#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace parcon {

using Index = int;
using Point2 = Eigen::Vector2d;

struct Triangle {
  std::array<Index, 3> v;

  Index operator[](int i) const { return v[static_cast<std::size_t>(i)]; }
};

/// Simple polygon given by its vertices in counter-clockwise order.
class Polygon {
 public:
  explicit Polygon(std::vector<Point2> corners);

  const std::vector<Point2>& corners() const { return corners_; }
  double area() const;
  double distance_to_boundary(const Point2& p) const;
  bool contains(const Point2& p) const;  // strict interior or boundary

 private:
  std::vector<Point2> corners_;
};

/// (0,1)^2 minus [0.5,1]^2.
Polygon lshape_polygon();
Polygon unit_square_polygon();

/// Conforming triangulation with geometric boundary classification.
class Mesh {
 public:
  Mesh() = default;
  /// Validates and takes ownership. Boundary flags are computed against
  /// `domain` when given, otherwise taken from `boundary_flags`.
  Mesh(std::vector<Point2> vertices, std::vector<Triangle> triangles,
       std::vector<bool> boundary_flags, std::optional<Polygon> domain = std::nullopt);

  Index num_vertices() const { return static_cast<Index>(vertices_.size()); }
  Index num_triangles() const { return static_cast<Index>(triangles_.size()); }
  Index num_interior_vertices() const;

  const std::vector<Point2>& vertices() const { return vertices_; }
  const Point2& vertex(Index i) const { return vertices_[static_cast<std::size_t>(i)]; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const Triangle& triangle(Index t) const { return triangles_[static_cast<std::size_t>(t)]; }
  const std::vector<bool>& boundary_flags() const { return boundary_; }
  bool is_boundary(Index i) const { return boundary_[static_cast<std::size_t>(i)]; }
  const std::optional<Polygon>& domain() const { return domain_; }

  /// Longest edge over all triangles.
  double h() const { return h_; }
  double area(Index t) const;
  Point2 centroid(Index t) const;
  double total_area() const;

 private:
  void validate() const;

  std::vector<Point2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<bool> boundary_;
  std::optional<Polygon> domain_;
  double h_ = 0.0;
};

inline constexpr double kBoundaryTolerance = 1e-12;

double signed_area(const Point2& a, const Point2& b, const Point2& c);

/// Structured grid of squares of side 1/n over an axis-aligned polygon whose
/// corners lie on the grid; each square is cut by its lower-left to
/// upper-right diagonal.
Mesh build_grid_mesh(const Polygon& domain, int n);

/// L-shaped domain with grid spacing 1/n; n must be even so that the
/// re-entrant corner (0.5, 0.5) is a vertex. h = sqrt(2)/n.
Mesh build_lshape_mesh(int n);
Mesh build_unit_square_mesh(int n);

/// Red refinement: every triangle is split into four through its edge
/// midpoints.
Mesh refine_uniform(const Mesh& m);

std::string to_text(const Mesh& m);
void write_mesh(std::ostream& os, const Mesh& m);

struct ParsedMesh {
  Mesh mesh;
  std::vector<std::string> warnings;
};

/// Reads the `mesh-v1` format. Throws ParseError on malformed text and
/// ValidationError on a non-conforming or inconsistent mesh. Clockwise
/// triangles are reoriented and reported in `warnings`.
ParsedMesh parse_mesh(std::string_view text);

/// Vertex coordinates and triangles in a numbering-independent canonical form
/// (sorted), for comparing meshes up to renumbering.
std::vector<std::array<double, 6>> canonical_triangles(const Mesh& m);

}  // namespace parcon
