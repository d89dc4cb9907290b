#include "asfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace asfem {

namespace {

using EdgeKey = std::pair<VertexIndex, VertexIndex>;

EdgeKey edge_key(VertexIndex a, VertexIndex b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
}

// Local vertex opposite the longest edge (lowest local index on ties).
int longest_edge_opposite(const std::vector<Point>& v, const std::array<VertexIndex, 3>& c) {
  int best = 0;
  double best_len = -1.0;
  for (int e = 0; e < 3; ++e) {
    const double len = (v[c[(e + 1) % 3]] - v[c[(e + 2) % 3]]).norm();
    if (len > best_len * (1.0 + 1e-12)) {
      best_len = len;
      best = e;
    }
  }
  return best;
}

}  // namespace

FaceSet compute_skeleton(const std::vector<Point>& vertices,
                         const std::vector<std::array<VertexIndex, 3>>& cells,
                         FaceOrientation orientation) {
  struct Owner {
    CellIndex cell;
    int local;
  };
  std::map<EdgeKey, std::vector<Owner>> owners;
  for (CellIndex K = 0; K < static_cast<CellIndex>(cells.size()); ++K) {
    for (int e = 0; e < 3; ++e) {
      const auto key = edge_key(cells[K][(e + 1) % 3], cells[K][(e + 2) % 3]);
      auto& list = owners[key];
      list.push_back({K, e});
      if (list.size() > 2) {
        throw std::runtime_error("compute_skeleton: non-manifold edge (" +
                                 std::to_string(key.first) + "," + std::to_string(key.second) +
                                 ") shared by more than two cells");
      }
    }
  }

  FaceSet fs;
  fs.cell_faces.assign(cells.size(), {-1, -1, -1});
  fs.faces.reserve(owners.size());
  for (const auto& [key, list] : owners) {
    Owner plus = list[0];
    Owner minus{-1, -1};
    if (list.size() == 2) {
      minus = list[1];
      const bool swap = (orientation == FaceOrientation::LowerIndexPlus) ? (minus.cell < plus.cell)
                                                                          : (minus.cell > plus.cell);
      if (swap) std::swap(plus, minus);
    }
    Face f;
    const auto& pc = cells[plus.cell];
    f.vertices = {pc[(plus.local + 1) % 3], pc[(plus.local + 2) % 3]};
    f.plus = plus.cell;
    f.plus_local = plus.local;
    f.minus = minus.cell;
    f.minus_local = minus.local;
    const Point t = vertices[f.vertices[1]] - vertices[f.vertices[0]];
    f.diameter = t.norm();
    if (!(f.diameter > 0.0)) throw std::runtime_error("compute_skeleton: zero-length edge");
    // Counterclockwise traversal of the "+" cell: outward normal is t rotated by -90 degrees.
    f.normal = Point(t.y(), -t.x()) / f.diameter;
    const int index = static_cast<int>(fs.faces.size());
    fs.cell_faces[plus.cell][plus.local] = index;
    if (minus.cell >= 0) {
      fs.cell_faces[minus.cell][minus.local] = index;
      fs.interior.push_back(index);
    } else {
      fs.boundary.push_back(index);
    }
    fs.faces.push_back(f);
  }
  return fs;
}

Mesh::Mesh(std::vector<Point> vertices, std::vector<std::array<VertexIndex, 3>> cells,
           FaceOrientation orientation)
    : vertices_(std::move(vertices)), cells_(std::move(cells)), orientation_(orientation) {
  validate_cells();
  newest_.resize(cells_.size());
  for (std::size_t K = 0; K < cells_.size(); ++K) newest_[K] = longest_edge_opposite(vertices_, cells_[K]);
  generation_.assign(cells_.size(), 0);
  parent_.resize(cells_.size());
  for (std::size_t K = 0; K < cells_.size(); ++K) parent_[K] = static_cast<CellIndex>(K);
  faces_ = compute_skeleton(vertices_, cells_, orientation_);
}

Mesh Mesh::with_history(std::vector<Point> vertices, std::vector<std::array<VertexIndex, 3>> cells,
                        std::vector<int> newest, std::vector<int> generation,
                        std::vector<CellIndex> parent, FaceOrientation orientation) {
  Mesh m;
  m.vertices_ = std::move(vertices);
  m.cells_ = std::move(cells);
  m.orientation_ = orientation;
  m.validate_cells();
  if (newest.size() != m.cells_.size() || generation.size() != m.cells_.size() ||
      parent.size() != m.cells_.size()) {
    throw std::invalid_argument("Mesh: refinement metadata size mismatch");
  }
  m.newest_ = std::move(newest);
  m.generation_ = std::move(generation);
  m.parent_ = std::move(parent);
  m.faces_ = compute_skeleton(m.vertices_, m.cells_, m.orientation_);
  return m;
}

void Mesh::validate_cells() const {
  const auto nv = static_cast<VertexIndex>(vertices_.size());
  for (std::size_t K = 0; K < cells_.size(); ++K) {
    for (VertexIndex v : cells_[K]) {
      if (v < 0 || v >= nv) throw std::invalid_argument("Mesh: cell references a missing vertex");
    }
    const auto& c = cells_[K];
    if (!(signed_area(vertices_[c[0]], vertices_[c[1]], vertices_[c[2]]) > 0.0)) {
      throw std::invalid_argument("Mesh: cell " + std::to_string(K) +
                                  " is degenerate or clockwise");
    }
  }
}

Mesh Mesh::with_orientation(FaceOrientation orientation) const {
  return with_history(vertices_, cells_, newest_, generation_, parent_, orientation);
}

std::array<Point, 3> Mesh::cell_points(CellIndex K) const {
  const auto& c = cells_[K];
  return {vertices_[c[0]], vertices_[c[1]], vertices_[c[2]]};
}

double Mesh::cell_area(CellIndex K) const {
  const auto p = cell_points(K);
  return signed_area(p[0], p[1], p[2]);
}

double Mesh::cell_diameter(CellIndex K) const {
  const auto p = cell_points(K);
  return std::max({(p[0] - p[1]).norm(), (p[1] - p[2]).norm(), (p[2] - p[0]).norm()});
}

Point Mesh::cell_centroid(CellIndex K) const {
  const auto p = cell_points(K);
  return (p[0] + p[1] + p[2]) / 3.0;
}

double Mesh::total_area() const {
  double a = 0.0;
  for (CellIndex K = 0; K < static_cast<CellIndex>(cells_.size()); ++K) a += cell_area(K);
  return a;
}

double Mesh::h_max() const {
  double h = 0.0;
  for (CellIndex K = 0; K < static_cast<CellIndex>(cells_.size()); ++K) h = std::max(h, cell_diameter(K));
  return h;
}

double Mesh::min_angle_degrees() const {
  double amin = 180.0;
  for (CellIndex K = 0; K < static_cast<CellIndex>(cells_.size()); ++K) {
    const auto p = cell_points(K);
    for (int i = 0; i < 3; ++i) {
      const Point u = p[(i + 1) % 3] - p[i];
      const Point w = p[(i + 2) % 3] - p[i];
      const double c = std::clamp(u.dot(w) / (u.norm() * w.norm()), -1.0, 1.0);
      amin = std::min(amin, std::acos(c) * 180.0 / std::numbers::pi);
    }
  }
  return amin;
}

CellIndex Mesh::locate(const Point& p, double tol) const {
  for (CellIndex K = 0; K < static_cast<CellIndex>(cells_.size()); ++K) {
    const auto q = cell_points(K);
    const double area = signed_area(q[0], q[1], q[2]);
    const double l0 = signed_area(p, q[1], q[2]) / area;
    const double l1 = signed_area(q[0], p, q[2]) / area;
    const double l2 = 1.0 - l0 - l1;
    if (l0 >= -tol && l1 >= -tol && l2 >= -tol) return K;
  }
  return -1;
}

Mesh build_structured_unit_square(int n) {
  if (n < 1) throw std::invalid_argument("build_structured_unit_square: n must be >= 1");
  std::vector<Point> v;
  v.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) v.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
  std::vector<std::array<VertexIndex, 3>> cells;
  cells.reserve(static_cast<std::size_t>(2 * n * n));
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int ll = id(i, j), lr = id(i + 1, j), ur = id(i + 1, j + 1), ul = id(i, j + 1);
      cells.push_back({ll, lr, ur});
      cells.push_back({ll, ur, ul});
    }
  }
  return Mesh(std::move(v), std::move(cells));
}

Mesh build_circular_segment(int radius_divisions) {
  const int m = radius_divisions;
  if (m < 1) throw std::invalid_argument("build_circular_segment: radius_divisions must be >= 1");
  // Ring i (i >= 1) carries 3i+1 points at angles j*(pi/2)/i, j = 0..3i.
  std::vector<Point> v;
  std::vector<std::vector<VertexIndex>> ring(m + 1);
  v.emplace_back(0.0, 0.0);
  ring[0] = {0};
  for (int i = 1; i <= m; ++i) {
    const double r = static_cast<double>(i) / m;
    for (int j = 0; j <= 3 * i; ++j) {
      Point p;
      if (j % i == 0) {
        static constexpr std::array<std::array<double, 2>, 4> axis{{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};
        const auto& a = axis[j / i];
        p = Point(r * a[0], r * a[1]);
      } else {
        const double phi = j * (std::numbers::pi / 2.0) / i;
        p = Point(r * std::cos(phi), r * std::sin(phi));
      }
      ring[i].push_back(static_cast<VertexIndex>(v.size()));
      v.push_back(p);
    }
  }
  std::vector<std::array<VertexIndex, 3>> cells;
  for (int i = 1; i <= m; ++i) {
    const auto& in = ring[i - 1];
    const auto& out = ring[i];
    const int last_in = static_cast<int>(in.size()) - 1;
    const int last_out = static_cast<int>(out.size()) - 1;
    int p = 0, q = 0;
    while (p < last_in || q < last_out) {
      // Compare angles (q+1)/i and (p+1)/(i-1) in quarter turns, exactly.
      const bool advance_outer =
          q < last_out && (p == last_in || static_cast<long>(q + 1) * (i - 1) <= static_cast<long>(p + 1) * i);
      if (advance_outer) {
        cells.push_back({in[p], out[q], out[q + 1]});
        ++q;
      } else {
        cells.push_back({in[p], out[q], in[p + 1]});
        ++p;
      }
    }
  }
  return Mesh(std::move(v), std::move(cells));
}

namespace {

class Bisector {
 public:
  Bisector(const Mesh& mesh, std::map<EdgeKey, bool> marked)
      : mesh_(mesh), vertices_(mesh.vertices()), marked_(std::move(marked)) {}

  Mesh run() {
    const auto& cells = mesh_.cells();
    for (CellIndex K = 0; K < static_cast<CellIndex>(cells.size()); ++K) {
      split(cells[K], mesh_.newest()[K], mesh_.generation()[K], K);
    }
    return Mesh::with_history(std::move(vertices_), std::move(cells_), std::move(newest_),
                              std::move(generation_), std::move(parent_), mesh_.orientation());
  }

 private:
  const Mesh& mesh_;
  std::vector<Point> vertices_;
  std::map<EdgeKey, bool> marked_;
  std::map<EdgeKey, VertexIndex> midpoint_;
  std::vector<std::array<VertexIndex, 3>> cells_;
  std::vector<int> newest_, generation_;
  std::vector<CellIndex> parent_;

  bool is_marked(VertexIndex a, VertexIndex b) const {
    auto it = marked_.find(edge_key(a, b));
    return it != marked_.end() && it->second;
  }

  VertexIndex midpoint(VertexIndex a, VertexIndex b) {
    const auto key = edge_key(a, b);
    auto it = midpoint_.find(key);
    if (it != midpoint_.end()) return it->second;
    const auto idx = static_cast<VertexIndex>(vertices_.size());
    vertices_.push_back(0.5 * (vertices_[a] + vertices_[b]));
    midpoint_.emplace(key, idx);
    return idx;
  }

  void split(const std::array<VertexIndex, 3>& c, int nv, int gen, CellIndex parent) {
    const VertexIndex top = c[nv];
    const VertexIndex a = c[(nv + 1) % 3];
    const VertexIndex b = c[(nv + 2) % 3];
    if (!is_marked(a, b)) {
      cells_.push_back(c);
      newest_.push_back(nv);
      generation_.push_back(gen);
      parent_.push_back(parent);
      return;
    }
    const VertexIndex m = midpoint(a, b);
    // (top, a, m) and (top, m, b) keep the counterclockwise order; m is newest.
    split({top, a, m}, 2, gen + 1, parent);
    split({top, m, b}, 1, gen + 1, parent);
  }
};

Mesh refine_marked_edges(const Mesh& mesh, std::map<EdgeKey, bool> marked) {
  const auto& cells = mesh.cells();
  // Closure: a cell with any marked edge must also bisect its refinement edge.
  bool changed = true;
  while (changed) {
    changed = false;
    for (CellIndex K = 0; K < static_cast<CellIndex>(cells.size()); ++K) {
      const auto& c = cells[K];
      const int nv = mesh.newest()[K];
      const auto ref = edge_key(c[(nv + 1) % 3], c[(nv + 2) % 3]);
      if (marked[ref]) continue;
      for (int e = 0; e < 3; ++e) {
        if (marked[edge_key(c[(e + 1) % 3], c[(e + 2) % 3])]) {
          marked[ref] = true;
          changed = true;
          break;
        }
      }
    }
  }
  return Bisector(mesh, std::move(marked)).run();
}

}  // namespace

Mesh bisect(const Mesh& mesh, const std::set<CellIndex>& marked) {
  if (marked.empty()) return mesh;
  std::map<EdgeKey, bool> edges;
  for (CellIndex K : marked) {
    if (K < 0 || K >= static_cast<CellIndex>(mesh.num_cells())) {
      throw std::out_of_range("bisect: marked cell index out of range");
    }
    const auto& c = mesh.cell(K);
    const int nv = mesh.newest()[K];
    edges[edge_key(c[(nv + 1) % 3], c[(nv + 2) % 3])] = true;
  }
  return refine_marked_edges(mesh, std::move(edges));
}

Mesh refine_uniform(const Mesh& mesh) {
  std::map<EdgeKey, bool> edges;
  for (const auto& c : mesh.cells())
    for (int e = 0; e < 3; ++e) edges[edge_key(c[(e + 1) % 3], c[(e + 2) % 3])] = true;
  return refine_marked_edges(mesh, std::move(edges));
}

}  // namespace asfem
