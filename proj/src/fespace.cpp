#include "asfem/fespace.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace asfem {

CellGeometry::CellGeometry(const Mesh& mesh, CellIndex K) {
  const auto p = mesh.cell_points(K);
  origin = p[0];
  jacobian.col(0) = p[1] - p[0];
  jacobian.col(1) = p[2] - p[0];
  det = jacobian.determinant();
  inverse = jacobian.inverse();
}

Eigen::MatrixX2d CellGeometry::pull_back(const Eigen::MatrixX2d& x) const {
  Eigen::MatrixX2d xi(x.rows(), 2);
  for (Eigen::Index q = 0; q < x.rows(); ++q) xi.row(q) = (inverse * (x.row(q).transpose() - origin)).transpose();
  return xi;
}

Eigen::MatrixX2d CellGeometry::map(const Eigen::MatrixX2d& xi) const {
  Eigen::MatrixX2d x(xi.rows(), 2);
  for (Eigen::Index q = 0; q < xi.rows(); ++q) x.row(q) = (origin + jacobian * xi.row(q).transpose()).transpose();
  return x;
}

FunctionSpace::FunctionSpace(std::shared_ptr<const Mesh> mesh, int degree, Continuity continuity, int components)
    : mesh_(std::move(mesh)), degree_(degree), continuity_(continuity), components_(components) {
  if (!mesh_) throw std::invalid_argument("FunctionSpace: null mesh");
  if (degree < 0 || degree > 4) throw std::invalid_argument("FunctionSpace: degree must be in 0..4");
  if (degree == 0 && continuity == Continuity::Continuous) {
    throw std::invalid_argument("FunctionSpace: degree 0 is only available as a broken space");
  }
  if (components != 1 && components != 2) throw std::invalid_argument("FunctionSpace: components must be 1 or 2");

  const auto& basis = reference_basis(degree);
  const int dim = basis.dimension();
  const auto ncells = static_cast<CellIndex>(mesh_->num_cells());
  cell_nodes_.resize(static_cast<std::size_t>(ncells) * dim);

  if (continuity == Continuity::Broken) {
    node_points_.reserve(cell_nodes_.size());
    for (CellIndex K = 0; K < ncells; ++K) {
      const CellGeometry geo(*mesh_, K);
      for (int i = 0; i < dim; ++i) {
        cell_nodes_[static_cast<std::size_t>(K) * dim + i] = static_cast<int>(node_points_.size());
        node_points_.push_back(geo.map(basis.nodes().row(i).transpose().eval()));
      }
    }
  } else {
    // A Lagrange node is identified by its integer barycentric weights on
    // global vertex ids, which is independent of the owning cell.
    using Key = std::array<std::pair<int, int>, 3>;
    std::map<Key, int> index;
    const auto& bary = basis.barycentric();
    for (CellIndex K = 0; K < ncells; ++K) {
      const auto& c = mesh_->cell(K);
      for (int i = 0; i < dim; ++i) {
        Key key;
        for (int v = 0; v < 3; ++v) key[v] = bary(i, v) > 0 ? std::pair{c[v], bary(i, v)} : std::pair{-1, 0};
        std::sort(key.begin(), key.end());
        auto [it, inserted] = index.emplace(key, static_cast<int>(node_points_.size()));
        if (inserted) {
          Point p = Point::Zero();
          for (int v = 0; v < 3; ++v) p += bary(i, v) * mesh_->vertex(c[v]);
          node_points_.push_back(p / degree);
        }
        cell_nodes_[static_cast<std::size_t>(K) * dim + i] = it->second;
      }
    }
  }

  cell_dofs_.resize(cell_nodes_.size() * components_);
  for (std::size_t n = 0; n < cell_nodes_.size(); ++n)
    for (int c = 0; c < components_; ++c) cell_dofs_[n * components_ + c] = cell_nodes_[n] * components_ + c;
}

SpacePtr build_space(std::shared_ptr<const Mesh> mesh, int degree, Continuity continuity, int components) {
  return std::make_shared<const FunctionSpace>(std::move(mesh), degree, continuity, components);
}

FieldCoefficients::FieldCoefficients(SpacePtr s, Vector v) : space(std::move(s)), values(std::move(v)) {
  if (!space) throw std::invalid_argument("FieldCoefficients: null space");
  if (values.size() != space->num_dofs()) {
    throw std::invalid_argument("FieldCoefficients: coefficient length " + std::to_string(values.size()) +
                                " does not match " + std::to_string(space->num_dofs()) + " DOFs");
  }
}

FieldCoefficients::FieldCoefficients(SpacePtr s) : space(std::move(s)) {
  if (!space) throw std::invalid_argument("FieldCoefficients: null space");
  values = Vector::Zero(space->num_dofs());
}

FieldCoefficients interpolate(SpacePtr space, const ScalarFunction& f) {
  if (space->components() != 1) throw std::invalid_argument("interpolate: scalar function on a vector space");
  FieldCoefficients out(space);
  const auto& pts = space->node_points();
  for (std::size_t n = 0; n < pts.size(); ++n) out.values[static_cast<Eigen::Index>(n)] = f(pts[n]);
  return out;
}

FieldCoefficients interpolate(SpacePtr space, const VectorFunction& f) {
  if (space->components() != 2) throw std::invalid_argument("interpolate: vector function on a scalar space");
  FieldCoefficients out(space);
  const auto& pts = space->node_points();
  for (std::size_t n = 0; n < pts.size(); ++n) {
    const Eigen::Vector2d v = f(pts[n]);
    out.values[static_cast<Eigen::Index>(2 * n)] = v.x();
    out.values[static_cast<Eigen::Index>(2 * n + 1)] = v.y();
  }
  return out;
}

Eigen::MatrixXd evaluate_on_cell(const FieldCoefficients& field, CellIndex K, const Eigen::MatrixX2d& ref_points) {
  const auto& space = *field.space;
  const Eigen::MatrixXd phi = space.basis().values(ref_points);
  const auto dofs = space.cell_dofs(K);
  const int nc = space.components();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(ref_points.rows(), nc);
  for (int i = 0; i < phi.cols(); ++i)
    for (int c = 0; c < nc; ++c) out.col(c) += field.values[dofs[i * nc + c]] * phi.col(i);
  return out;
}

std::vector<Eigen::MatrixX2d> gradient_on_cell(const FieldCoefficients& field, CellIndex K,
                                               const Eigen::MatrixX2d& ref_points) {
  const auto& space = *field.space;
  Eigen::MatrixXd dx, dy;
  space.basis().gradients(ref_points, dx, dy);
  const CellGeometry geo(space.mesh(), K);
  const auto dofs = space.cell_dofs(K);
  const int nc = space.components();
  std::vector<Eigen::MatrixX2d> out(nc, Eigen::MatrixX2d::Zero(ref_points.rows(), 2));
  // grad_x = J^{-T} grad_xi
  const Eigen::Matrix2d jit = geo.inverse.transpose();
  for (int i = 0; i < dx.cols(); ++i) {
    for (int c = 0; c < nc; ++c) {
      const double coef = field.values[dofs[i * nc + c]];
      if (coef == 0.0) continue;
      out[c].col(0) += coef * (jit(0, 0) * dx.col(i) + jit(0, 1) * dy.col(i));
      out[c].col(1) += coef * (jit(1, 0) * dx.col(i) + jit(1, 1) * dy.col(i));
    }
  }
  return out;
}

Eigen::VectorXd evaluate_at(const FieldCoefficients& field, const Point& x) {
  const auto& mesh = field.space->mesh();
  const CellIndex K = mesh.locate(x);
  if (K < 0) throw std::out_of_range("evaluate_at: point outside the mesh");
  const CellGeometry geo(mesh, K);
  Eigen::MatrixX2d xi(1, 2);
  xi.row(0) = geo.pull_back(x).transpose();
  return evaluate_on_cell(field, K, xi).row(0).transpose();
}

Eigen::MatrixX2d face_points(const Mesh& mesh, int face, const Eigen::VectorXd& t) {
  const auto& f = mesh.faces()[face];
  const Point a = mesh.vertex(f.vertices[0]);
  const Point b = mesh.vertex(f.vertices[1]);
  Eigen::MatrixX2d x(t.size(), 2);
  for (Eigen::Index q = 0; q < t.size(); ++q) x.row(q) = (a + t[q] * (b - a)).transpose();
  return x;
}

FaceTrace face_trace(const FieldCoefficients& field, int face, Side side, const Eigen::VectorXd& t) {
  const auto& mesh = field.space->mesh();
  const auto& f = mesh.faces()[face];
  if (side == Side::Minus && f.is_boundary()) {
    throw std::invalid_argument("face_trace: boundary face " + std::to_string(face) + " has no '-' side");
  }
  const CellIndex K = side == Side::Plus ? f.plus : f.minus;
  const CellGeometry geo(mesh, K);
  const Eigen::MatrixX2d xi = geo.pull_back(face_points(mesh, face, t));
  return {evaluate_on_cell(field, K, xi), gradient_on_cell(field, K, xi)};
}

Eigen::MatrixXd face_jump(const FieldCoefficients& field, int face, const Eigen::VectorXd& t) {
  const auto& f = field.space->mesh().faces()[face];
  auto plus = face_trace(field, face, Side::Plus, t).values;
  if (f.is_boundary()) return plus;
  return plus - face_trace(field, face, Side::Minus, t).values;
}

Eigen::MatrixXd face_average(const FieldCoefficients& field, int face, const Eigen::VectorXd& t) {
  const auto& f = field.space->mesh().faces()[face];
  auto plus = face_trace(field, face, Side::Plus, t).values;
  if (f.is_boundary()) return plus;
  return 0.5 * (plus + face_trace(field, face, Side::Minus, t).values);
}

double mean_value(const FieldCoefficients& field) {
  const auto& space = *field.space;
  if (space.components() != 1) throw std::invalid_argument("mean_value: requires a scalar field");
  const auto& mesh = space.mesh();
  const auto rule = triangle_quadrature(std::max(1, space.degree()));
  double integral = 0.0;
  for (CellIndex K = 0; K < static_cast<CellIndex>(mesh.num_cells()); ++K) {
    const CellGeometry geo(mesh, K);
    integral += std::abs(geo.det) * rule.weights.dot(evaluate_on_cell(field, K, rule.points).col(0));
  }
  return integral / mesh.total_area();
}

Vector basis_integrals(const FunctionSpace& space) {
  if (space.components() != 1) throw std::invalid_argument("basis_integrals: requires a scalar space");
  const auto& mesh = space.mesh();
  const auto rule = triangle_quadrature(std::max(1, space.degree()));
  const Eigen::VectorXd local = space.basis().values(rule.points).transpose() * rule.weights;
  Vector out = Vector::Zero(space.num_dofs());
  for (CellIndex K = 0; K < static_cast<CellIndex>(mesh.num_cells()); ++K) {
    const double det = std::abs(CellGeometry(mesh, K).det);
    const auto dofs = space.cell_dofs(K);
    for (std::size_t i = 0; i < dofs.size(); ++i) out[dofs[i]] += det * local[static_cast<Eigen::Index>(i)];
  }
  return out;
}

SparseMatrix embedding_matrix(const FunctionSpace& source, const FunctionSpace& target) {
  if (!source.same_mesh(target)) throw std::invalid_argument("embedding_matrix: spaces live on different meshes");
  if (!target.is_broken()) throw std::invalid_argument("embedding_matrix: target must be a broken space");
  if (target.degree() < source.degree()) {
    throw std::invalid_argument("embedding_matrix: target degree " + std::to_string(target.degree()) +
                                " below source degree " + std::to_string(source.degree()));
  }
  if (target.components() != source.components()) {
    throw std::invalid_argument("embedding_matrix: component count mismatch");
  }
  const int nc = source.components();
  const Eigen::MatrixXd local = source.basis().values(target.basis().nodes());  // (target node, source basis)
  std::vector<Eigen::Triplet<double>> trip;
  const auto& mesh = source.mesh();
  for (CellIndex K = 0; K < static_cast<CellIndex>(mesh.num_cells()); ++K) {
    const auto sd = source.cell_dofs(K);
    const auto td = target.cell_dofs(K);
    for (Eigen::Index i = 0; i < local.rows(); ++i)
      for (Eigen::Index j = 0; j < local.cols(); ++j) {
        const double v = local(i, j);
        if (std::abs(v) < 1e-15) continue;
        for (int c = 0; c < nc; ++c) trip.emplace_back(td[i * nc + c], sd[j * nc + c], v);
      }
  }
  SparseMatrix E(target.num_dofs(), source.num_dofs());
  E.setFromTriplets(trip.begin(), trip.end(), [](double a, double) { return a; });
  return E;
}

FieldCoefficients embed(const FieldCoefficients& field, SpacePtr target) {
  return {target, embedding_matrix(*field.space, *target) * field.values};
}

}  // namespace asfem
