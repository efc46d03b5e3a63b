#include "parcon/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <utility>

#include "parcon/errors.hpp"

namespace parcon {

namespace {

using Edge = std::pair<Index, Index>;

Edge make_edge(Index a, Index b) { return a < b ? Edge{a, b} : Edge{b, a}; }

double segment_distance(const Point2& p, const Point2& a, const Point2& b) {
  const Point2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double s = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return (p - (a + s * ab)).norm();
}

std::map<Edge, int> edge_multiplicity(const std::vector<Triangle>& triangles) {
  std::map<Edge, int> count;
  for (const auto& t : triangles) {
    for (int e = 0; e < 3; ++e) ++count[make_edge(t[e], t[(e + 1) % 3])];
  }
  return count;
}

}  // namespace

double signed_area(const Point2& a, const Point2& b, const Point2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

// ---------------------------------------------------------------------------
// Polygon

Polygon::Polygon(std::vector<Point2> corners) : corners_(std::move(corners)) {
  if (corners_.size() < 3) throw InvalidParameter("polygon needs at least three corners");
  if (area() <= 0.0) throw InvalidParameter("polygon corners must be counter-clockwise");
}

double Polygon::area() const {
  double a = 0.0;
  for (std::size_t i = 0; i < corners_.size(); ++i) {
    const auto& p = corners_[i];
    const auto& q = corners_[(i + 1) % corners_.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

double Polygon::distance_to_boundary(const Point2& p) const {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < corners_.size(); ++i) {
    d = std::min(d, segment_distance(p, corners_[i], corners_[(i + 1) % corners_.size()]));
  }
  return d;
}

bool Polygon::contains(const Point2& p) const {
  if (distance_to_boundary(p) <= kBoundaryTolerance) return true;
  bool inside = false;
  for (std::size_t i = 0, j = corners_.size() - 1; i < corners_.size(); j = i++) {
    const auto& a = corners_[i];
    const auto& b = corners_[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x()) {
      inside = !inside;
    }
  }
  return inside;
}

Polygon lshape_polygon() {
  return Polygon({{0.0, 0.0}, {1.0, 0.0}, {1.0, 0.5}, {0.5, 0.5}, {0.5, 1.0}, {0.0, 1.0}});
}

Polygon unit_square_polygon() { return Polygon({{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}}); }

// ---------------------------------------------------------------------------
// Mesh

Mesh::Mesh(std::vector<Point2> vertices, std::vector<Triangle> triangles,
           std::vector<bool> boundary_flags, std::optional<Polygon> domain)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      boundary_(std::move(boundary_flags)),
      domain_(std::move(domain)) {
  if (domain_) {
    boundary_.assign(vertices_.size(), false);
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
      boundary_[i] = domain_->distance_to_boundary(vertices_[i]) <= kBoundaryTolerance;
    }
  }
  validate();
  for (const auto& t : triangles_) {
    for (int e = 0; e < 3; ++e) {
      h_ = std::max(h_, (vertex(t[e]) - vertex(t[(e + 1) % 3])).norm());
    }
  }
}

void Mesh::validate() const {
  const auto nv = vertices_.size();
  if (boundary_.size() != nv) throw ValidationError("boundary flag count does not match vertex count");
  std::vector<bool> used(nv, false);
  for (std::size_t k = 0; k < triangles_.size(); ++k) {
    const auto& t = triangles_[k];
    for (Index v : t.v) {
      if (v < 0 || static_cast<std::size_t>(v) >= nv) {
        throw ValidationError("triangle " + std::to_string(k) + " references missing vertex " +
                              std::to_string(v));
      }
      used[static_cast<std::size_t>(v)] = true;
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw ValidationError("triangle " + std::to_string(k) + " has repeated vertices");
    }
    if (signed_area(vertex(t[0]), vertex(t[1]), vertex(t[2])) <= 0.0) {
      throw ValidationError("triangle " + std::to_string(k) + " is not counter-clockwise");
    }
  }
  for (std::size_t i = 0; i < nv; ++i) {
    if (!used[i]) throw ValidationError("vertex " + std::to_string(i) + " is not used by any triangle");
  }

  // An edge belongs to one triangle (boundary) or two (interior). A hanging
  // node shows up as a vertex lying inside a one-sided edge.
  for (const auto& [edge, count] : edge_multiplicity(triangles_)) {
    if (count > 2) throw ValidationError("edge shared by more than two triangles");
    if (count == 2) continue;
    const auto& a = vertex(edge.first);
    const auto& b = vertex(edge.second);
    if (!is_boundary(edge.first) || !is_boundary(edge.second)) {
      throw ValidationError("boundary edge (" + std::to_string(edge.first) + "," +
                            std::to_string(edge.second) + ") has a non-boundary endpoint");
    }
    const Point2 lo = a.cwiseMin(b).array() - kBoundaryTolerance;
    const Point2 hi = a.cwiseMax(b).array() + kBoundaryTolerance;
    for (std::size_t i = 0; i < nv; ++i) {
      const auto& p = vertices_[i];
      if (static_cast<Index>(i) == edge.first || static_cast<Index>(i) == edge.second) continue;
      if ((p.array() < lo.array()).any() || (p.array() > hi.array()).any()) continue;
      if (segment_distance(p, a, b) <= kBoundaryTolerance) {
        throw ValidationError("hanging vertex " + std::to_string(i) + " on edge (" +
                              std::to_string(edge.first) + "," + std::to_string(edge.second) + ")");
      }
    }
  }
}

Index Mesh::num_interior_vertices() const {
  return static_cast<Index>(std::count(boundary_.begin(), boundary_.end(), false));
}

double Mesh::area(Index t) const {
  const auto& tri = triangle(t);
  return signed_area(vertex(tri[0]), vertex(tri[1]), vertex(tri[2]));
}

Point2 Mesh::centroid(Index t) const {
  const auto& tri = triangle(t);
  return (vertex(tri[0]) + vertex(tri[1]) + vertex(tri[2])) / 3.0;
}

double Mesh::total_area() const {
  double a = 0.0;
  for (Index t = 0; t < num_triangles(); ++t) a += area(t);
  return a;
}

// ---------------------------------------------------------------------------
// Builders

Mesh build_grid_mesh(const Polygon& domain, int n) {
  if (n < 1) throw InvalidParameter("grid subdivisions must be positive, got " + std::to_string(n));
  const double spacing = 1.0 / n;
  Eigen::Vector2d lo = domain.corners().front();
  Eigen::Vector2d hi = lo;
  for (const auto& c : domain.corners()) {
    lo = lo.cwiseMin(c);
    hi = hi.cwiseMax(c);
  }
  const int i0 = static_cast<int>(std::lround(lo.x() * n));
  const int j0 = static_cast<int>(std::lround(lo.y() * n));
  const int i1 = static_cast<int>(std::lround(hi.x() * n));
  const int j1 = static_cast<int>(std::lround(hi.y() * n));

  auto grid_point = [&](int i, int j) { return Point2(i * spacing, j * spacing); };

  std::map<std::pair<int, int>, Index> id;
  std::vector<Point2> vertices;
  auto vertex_id = [&](int i, int j) {
    auto [it, inserted] = id.try_emplace({i, j}, static_cast<Index>(vertices.size()));
    if (inserted) vertices.push_back(grid_point(i, j));
    return it->second;
  };

  // Visit squares row by row so vertex numbering is lexicographic in (y, x).
  std::vector<std::pair<int, int>> squares;
  for (int j = j0; j < j1; ++j) {
    for (int i = i0; i < i1; ++i) {
      const Point2 centre = grid_point(i, j) + Point2::Constant(0.5 * spacing);
      if (domain.contains(centre) && domain.distance_to_boundary(centre) > kBoundaryTolerance) {
        squares.emplace_back(i, j);
      }
    }
  }
  std::sort(squares.begin(), squares.end(),
            [](const auto& a, const auto& b) { return std::pair(a.second, a.first) < std::pair(b.second, b.first); });
  std::vector<std::pair<int, int>> corner_keys;
  for (auto [i, j] : squares) {
    for (auto c : {std::pair(i, j), std::pair(i + 1, j), std::pair(i, j + 1), std::pair(i + 1, j + 1)}) {
      corner_keys.push_back(c);
    }
  }
  std::sort(corner_keys.begin(), corner_keys.end(),
            [](const auto& a, const auto& b) { return std::pair(a.second, a.first) < std::pair(b.second, b.first); });
  for (auto [i, j] : corner_keys) vertex_id(i, j);

  std::vector<Triangle> triangles;
  triangles.reserve(2 * squares.size());
  for (auto [i, j] : squares) {
    const Index ll = vertex_id(i, j);
    const Index lr = vertex_id(i + 1, j);
    const Index ur = vertex_id(i + 1, j + 1);
    const Index ul = vertex_id(i, j + 1);
    triangles.push_back({{ll, lr, ur}});
    triangles.push_back({{ll, ur, ul}});
  }

  double covered = static_cast<double>(squares.size()) * spacing * spacing;
  if (std::abs(covered - domain.area()) > 1e-12) {
    throw InvalidParameter("polygon is not resolved by a grid of spacing 1/" + std::to_string(n));
  }
  return Mesh(std::move(vertices), std::move(triangles), {}, domain);
}

Mesh build_lshape_mesh(int n) {
  if (n < 2 || n % 2 != 0) {
    throw InvalidParameter("L-shape mesh needs an even positive n so that 0.5 is a grid line, got " +
                           std::to_string(n));
  }
  return build_grid_mesh(lshape_polygon(), n);
}

Mesh build_unit_square_mesh(int n) { return build_grid_mesh(unit_square_polygon(), n); }

Mesh refine_uniform(const Mesh& m) {
  std::vector<Point2> vertices = m.vertices();
  std::vector<bool> flags = m.boundary_flags();
  const auto multiplicity = edge_multiplicity(m.triangles());
  std::map<Edge, Index> midpoint;
  auto mid = [&](Index a, Index b) {
    const Edge e = make_edge(a, b);
    auto [it, inserted] = midpoint.try_emplace(e, static_cast<Index>(vertices.size()));
    if (inserted) {
      vertices.push_back(0.5 * (m.vertex(a) + m.vertex(b)));
      flags.push_back(multiplicity.at(e) == 1);
    }
    return it->second;
  };

  std::vector<Triangle> triangles;
  triangles.reserve(4 * m.triangles().size());
  for (const auto& t : m.triangles()) {
    const Index m01 = mid(t[0], t[1]);
    const Index m12 = mid(t[1], t[2]);
    const Index m20 = mid(t[2], t[0]);
    triangles.push_back({{t[0], m01, m20}});
    triangles.push_back({{m01, t[1], m12}});
    triangles.push_back({{m20, m12, t[2]}});
    triangles.push_back({{m01, m12, m20}});
  }
  return Mesh(std::move(vertices), std::move(triangles), std::move(flags), m.domain());
}

// ---------------------------------------------------------------------------
// Text format

void write_mesh(std::ostream& os, const Mesh& m) {
  os << "mesh-v1\n" << m.num_vertices() << ' ' << m.num_triangles() << '\n';
  char buf[96];
  for (Index i = 0; i < m.num_vertices(); ++i) {
    const auto& p = m.vertex(i);
    std::snprintf(buf, sizeof buf, "%.17g %.17g %d\n", p.x(), p.y(), m.is_boundary(i) ? 1 : 0);
    os << buf;
  }
  for (const auto& t : m.triangles()) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

std::string to_text(const Mesh& m) {
  std::ostringstream os;
  write_mesh(os, m);
  return os.str();
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
T parse_number(std::string_view tok, std::size_t line) {
  T value{};
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError(line, "invalid number '" + std::string(tok) + "'");
  }
  return value;
}

}  // namespace

ParsedMesh parse_mesh(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  std::size_t cursor = 0;
  auto next = [&](std::size_t expected_tokens) {
    if (cursor >= lines.size()) throw ParseError(cursor + 1, "unexpected end of input");
    auto toks = split_ws(lines[cursor]);
    ++cursor;
    if (toks.size() != expected_tokens) {
      throw ParseError(cursor, "expected " + std::to_string(expected_tokens) + " fields, found " +
                                   std::to_string(toks.size()));
    }
    return toks;
  };

  if (next(1)[0] != "mesh-v1") throw ParseError(1, "missing 'mesh-v1' header");
  const auto counts = next(2);
  const auto nv = parse_number<long>(counts[0], 2);
  const auto nt = parse_number<long>(counts[1], 2);
  if (nv < 0 || nt < 0) throw ParseError(2, "negative counts");

  std::vector<Point2> vertices;
  std::vector<bool> flags;
  for (long i = 0; i < nv; ++i) {
    const auto toks = next(3);
    const double x = parse_number<double>(toks[0], cursor);
    const double y = parse_number<double>(toks[1], cursor);
    const int b = parse_number<int>(toks[2], cursor);
    if (b != 0 && b != 1) throw ParseError(cursor, "boundary flag must be 0 or 1");
    if (!std::isfinite(x) || !std::isfinite(y)) throw ParseError(cursor, "non-finite coordinate");
    vertices.emplace_back(x, y);
    flags.push_back(b == 1);
  }

  ParsedMesh result;
  std::vector<Triangle> triangles;
  for (long k = 0; k < nt; ++k) {
    const auto toks = next(3);
    Triangle t{{parse_number<Index>(toks[0], cursor), parse_number<Index>(toks[1], cursor),
                parse_number<Index>(toks[2], cursor)}};
    const bool in_range = std::all_of(t.v.begin(), t.v.end(), [&](Index v) { return v >= 0 && v < nv; });
    if (in_range && signed_area(vertices[static_cast<std::size_t>(t[0])], vertices[static_cast<std::size_t>(t[1])],
                                vertices[static_cast<std::size_t>(t[2])]) < 0.0) {
      std::swap(t.v[1], t.v[2]);
      result.warnings.push_back("line " + std::to_string(cursor) + ": triangle " + std::to_string(k) +
                                " was clockwise and has been reoriented");
    }
    triangles.push_back(t);
  }
  for (; cursor < lines.size(); ++cursor) {
    if (!split_ws(lines[cursor]).empty()) throw ParseError(cursor + 1, "trailing content");
  }
  result.mesh = Mesh(std::move(vertices), std::move(triangles), std::move(flags));
  return result;
}

std::vector<std::array<double, 6>> canonical_triangles(const Mesh& m) {
  std::vector<std::array<double, 6>> out;
  out.reserve(m.triangles().size());
  for (const auto& t : m.triangles()) {
    std::array<std::pair<double, double>, 3> p;
    for (int i = 0; i < 3; ++i) p[static_cast<std::size_t>(i)] = {m.vertex(t[i]).x(), m.vertex(t[i]).y()};
    std::sort(p.begin(), p.end());
    out.push_back({p[0].first, p[0].second, p[1].first, p[1].second, p[2].first, p[2].second});
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace parcon
