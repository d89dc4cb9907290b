#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace asfem {

using Point = Eigen::Vector2d;
using CellIndex = int;
using VertexIndex = int;

/// Which owner cell of an interior face is labelled "+".
enum class FaceOrientation { LowerIndexPlus, HigherIndexPlus };

/// One edge of the skeleton.
///
/// For interior faces the unit normal points from the "+" cell into the
/// "-" cell; for boundary faces it is the outward normal and `minus` is -1.
/// The endpoint order (`v0` -> `v1`) is counterclockwise with respect to the
/// "+" cell.
struct Face {
  std::array<VertexIndex, 2> vertices{};
  CellIndex plus = -1;
  CellIndex minus = -1;
  int plus_local = -1;   // local edge index inside the "+" cell
  int minus_local = -1;  // local edge index inside the "-" cell
  Point normal = Point::Zero();
  double diameter = 0.0;

  bool is_boundary() const { return minus < 0; }
};

struct FaceSet {
  std::vector<Face> faces;
  std::vector<int> interior;  // indices into faces
  std::vector<int> boundary;
  /// cell_faces[K][e] is the face index of local edge e of cell K.
  std::vector<std::array<int, 3>> cell_faces;

  std::size_t size() const { return faces.size(); }
  const Face& operator[](std::size_t i) const { return faces[i]; }
};

/// Conforming triangulation of a polygonal 2D domain.
///
/// Cells are counterclockwise vertex triples. Local edge e joins local
/// vertices (e+1)%3 and (e+2)%3, i.e. it is opposite local vertex e.
/// `newest[K]` is the local vertex opposite the refinement edge used by
/// newest-vertex bisection.
class Mesh {
 public:
  Mesh() = default;
  Mesh(std::vector<Point> vertices, std::vector<std::array<VertexIndex, 3>> cells,
       FaceOrientation orientation = FaceOrientation::LowerIndexPlus);

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<std::array<VertexIndex, 3>>& cells() const { return cells_; }
  const FaceSet& faces() const { return faces_; }

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_cells() const { return cells_.size(); }
  std::size_t num_faces() const { return faces_.size(); }

  const Point& vertex(VertexIndex v) const { return vertices_[v]; }
  const std::array<VertexIndex, 3>& cell(CellIndex K) const { return cells_[K]; }

  std::array<Point, 3> cell_points(CellIndex K) const;
  double cell_area(CellIndex K) const;
  double cell_diameter(CellIndex K) const;
  Point cell_centroid(CellIndex K) const;
  double total_area() const;
  double h_max() const;
  double min_angle_degrees() const;

  // Refinement bookkeeping.
  const std::vector<int>& newest() const { return newest_; }
  const std::vector<int>& generation() const { return generation_; }
  /// Index of the cell in the previous mesh this cell descends from
  /// (identity for a freshly built mesh).
  const std::vector<CellIndex>& parent() const { return parent_; }

  FaceOrientation orientation() const { return orientation_; }

  /// Same cells, skeleton rebuilt with a different "+/-" convention.
  Mesh with_orientation(FaceOrientation orientation) const;

  /// Cell containing p (closed), or -1.
  CellIndex locate(const Point& p, double tol = 1e-12) const;

  /// Mesh with explicit refinement metadata (used by bisect and IO).
  static Mesh with_history(std::vector<Point> vertices,
                           std::vector<std::array<VertexIndex, 3>> cells,
                           std::vector<int> newest, std::vector<int> generation,
                           std::vector<CellIndex> parent,
                           FaceOrientation orientation = FaceOrientation::LowerIndexPlus);

 private:
  std::vector<Point> vertices_;
  std::vector<std::array<VertexIndex, 3>> cells_;
  std::vector<int> newest_;
  std::vector<int> generation_;
  std::vector<CellIndex> parent_;
  FaceOrientation orientation_ = FaceOrientation::LowerIndexPlus;
  FaceSet faces_;

  void validate_cells() const;
};

/// Builds the face skeleton. Throws std::runtime_error on a non-manifold edge.
FaceSet compute_skeleton(const std::vector<Point>& vertices,
                         const std::vector<std::array<VertexIndex, 3>>& cells,
                         FaceOrientation orientation = FaceOrientation::LowerIndexPlus);

/// (0,1)^2 split into n x n squares, each cut along its lower-left to
/// upper-right diagonal.
Mesh build_structured_unit_square(int n);

/// Polygonal triangulation of {0 < r < 1, 0 < phi < 3pi/2}, with
/// `radius_divisions` rings. Boundary vertices lie on r = 1 or on the two rays.
Mesh build_circular_segment(int radius_divisions);

/// Newest-vertex bisection of the marked cells plus the closure needed for
/// conformity. Every marked cell is split at least once.
Mesh bisect(const Mesh& mesh, const std::set<CellIndex>& marked);

/// Splits every edge of every cell (each cell -> 4 children, h halves).
Mesh refine_uniform(const Mesh& mesh);

// ntri-mesh v1 ASCII format.
void write_mesh(std::ostream& out, const Mesh& mesh);
Mesh read_mesh(std::istream& in);
void save_mesh(const std::string& path, const Mesh& mesh);
Mesh load_mesh(const std::string& path);

}  // namespace asfem
