#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "asfem/mesh.hpp"
#include "asfem/reference.hpp"

namespace asfem {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

enum class Continuity { Continuous, Broken };
enum class Side { Plus, Minus };

/// Affine map x = origin + J * xi from the reference triangle to cell K.
struct CellGeometry {
  Point origin;
  Eigen::Matrix2d jacobian;
  Eigen::Matrix2d inverse;  // J^{-1}
  double det = 0.0;

  CellGeometry(const Mesh& mesh, CellIndex K);

  Point map(const Eigen::Vector2d& xi) const { return origin + jacobian * xi; }
  Eigen::Vector2d pull_back(const Point& x) const { return inverse * (x - origin); }
  Eigen::MatrixX2d pull_back(const Eigen::MatrixX2d& x) const;
  Eigen::MatrixX2d map(const Eigen::MatrixX2d& xi) const;
};

/// Continuous P^k or broken P^k_d space, scalar or 2-vector.
///
/// DOFs are numbered node-major with interleaved components:
/// dof = components * node + c. The local ordering inside a cell follows
/// the same rule over the reference-basis nodes.
class FunctionSpace {
 public:
  FunctionSpace(std::shared_ptr<const Mesh> mesh, int degree, Continuity continuity, int components);

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  int degree() const { return degree_; }
  Continuity continuity() const { return continuity_; }
  bool is_broken() const { return continuity_ == Continuity::Broken; }
  int components() const { return components_; }
  const ReferenceBasis& basis() const { return reference_basis(degree_); }

  int local_scalar_dim() const { return basis().dimension(); }
  int local_dim() const { return local_scalar_dim() * components_; }
  int num_nodes() const { return static_cast<int>(node_points_.size()); }
  int num_dofs() const { return num_nodes() * components_; }

  std::span<const int> cell_nodes(CellIndex K) const {
    return {cell_nodes_.data() + static_cast<std::size_t>(K) * local_scalar_dim(),
            static_cast<std::size_t>(local_scalar_dim())};
  }
  std::span<const int> cell_dofs(CellIndex K) const {
    return {cell_dofs_.data() + static_cast<std::size_t>(K) * local_dim(), static_cast<std::size_t>(local_dim())};
  }
  const std::vector<Point>& node_points() const { return node_points_; }

  bool same_mesh(const FunctionSpace& other) const { return mesh_.get() == other.mesh_.get(); }

 private:
  std::shared_ptr<const Mesh> mesh_;
  int degree_;
  Continuity continuity_;
  int components_;
  std::vector<int> cell_nodes_;
  std::vector<int> cell_dofs_;
  std::vector<Point> node_points_;
};

using SpacePtr = std::shared_ptr<const FunctionSpace>;

SpacePtr build_space(std::shared_ptr<const Mesh> mesh, int degree, Continuity continuity, int components);

/// Coefficient vector attached to a space.
struct FieldCoefficients {
  SpacePtr space;
  Vector values;

  FieldCoefficients() = default;
  FieldCoefficients(SpacePtr s, Vector v);
  explicit FieldCoefficients(SpacePtr s);
};

using ScalarFunction = std::function<double(const Point&)>;
using VectorFunction = std::function<Eigen::Vector2d(const Point&)>;

FieldCoefficients interpolate(SpacePtr space, const ScalarFunction& f);
FieldCoefficients interpolate(SpacePtr space, const VectorFunction& f);

/// Field values on cell K at reference points: result(q, c).
Eigen::MatrixXd evaluate_on_cell(const FieldCoefficients& field, CellIndex K, const Eigen::MatrixX2d& ref_points);
/// Physical gradients on cell K: grads[c](q, d) = d(field_c)/dx_d.
std::vector<Eigen::MatrixX2d> gradient_on_cell(const FieldCoefficients& field, CellIndex K,
                                               const Eigen::MatrixX2d& ref_points);
/// Point evaluation (locates the cell by search). Throws if outside.
Eigen::VectorXd evaluate_at(const FieldCoefficients& field, const Point& x);

/// Physical points on face F at edge parameters t in [0,1] (v0 -> v1).
Eigen::MatrixX2d face_points(const Mesh& mesh, int face, const Eigen::VectorXd& t);

struct FaceTrace {
  Eigen::MatrixXd values;               // (q, c)
  std::vector<Eigen::MatrixX2d> grads;  // per component, (q, d)
};

/// Trace from the requested side's owner cell. Minus on a boundary face throws.
FaceTrace face_trace(const FieldCoefficients& field, int face, Side side, const Eigen::VectorXd& t);
/// v+ - v- on interior faces, the trace on boundary faces.
Eigen::MatrixXd face_jump(const FieldCoefficients& field, int face, const Eigen::VectorXd& t);
/// (v+ + v-)/2 on interior faces, the trace on boundary faces.
Eigen::MatrixXd face_average(const FieldCoefficients& field, int face, const Eigen::VectorXd& t);

/// (1/|Omega|) * integral of a scalar field.
double mean_value(const FieldCoefficients& field);

/// Integral of each scalar basis function (length num_dofs), scalar spaces only.
Vector basis_integrals(const FunctionSpace& space);

/// Sparse operator mapping coefficients of `source` to the pointwise-equal
/// function in the broken space `target` (degree elevation allowed).
SparseMatrix embedding_matrix(const FunctionSpace& source, const FunctionSpace& target);

/// Same function represented in `target` (a broken space on the same mesh
/// with degree >= source degree and equal component count).
FieldCoefficients embed(const FieldCoefficients& field, SpacePtr target);

}  // namespace asfem
