#include "asfem/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace asfem {

void FormParameters::validate() const {
  if (!(eta > 0.0)) throw std::invalid_argument("FormParameters: eta must be > 0");
  if (!(beta >= 1.0)) throw std::invalid_argument("FormParameters: beta must be >= 1");
}

double FormParameters::penalty(double h_face) const { return eta / std::pow(h_face, beta); }

int cell_exactness(int degree) { return 2 * degree + 2; }
int edge_exactness(int degree) { return 2 * degree + 1; }

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

void require_same_mesh(const FunctionSpace& a, const FunctionSpace& b, const char* who) {
  if (!a.same_mesh(b)) throw std::invalid_argument(std::string(who) + ": spaces live on different meshes");
}

void require_components(const FunctionSpace& s, int nc, const char* who, const char* role) {
  if (s.components() != nc) {
    throw std::invalid_argument(std::string(who) + ": " + role + " space must have " + std::to_string(nc) +
                                " component(s)");
  }
}

// Scalar basis values and physical gradients at a set of points of one cell.
struct BasisEval {
  Eigen::MatrixXd phi, gx, gy;  // (q, i)
};

BasisEval eval_basis(const ReferenceBasis& basis, const CellGeometry& geo, const Eigen::MatrixX2d& xi) {
  BasisEval e;
  e.phi = basis.values(xi);
  Eigen::MatrixXd dx, dy;
  basis.gradients(xi, dx, dy);
  const Eigen::Matrix2d jit = geo.inverse.transpose();
  e.gx = jit(0, 0) * dx + jit(0, 1) * dy;
  e.gy = jit(1, 0) * dx + jit(1, 1) * dy;
  return e;
}

// Reference-level tabulation reused on every (affine) cell.
struct CellTable {
  QuadratureRule rule;
  Eigen::MatrixXd phi, dx, dy;

  CellTable(const ReferenceBasis& basis, int exactness) : rule(triangle_quadrature(exactness)) {
    phi = basis.values(rule.points);
    basis.gradients(rule.points, dx, dy);
  }

  BasisEval on(const CellGeometry& geo) const {
    const Eigen::Matrix2d jit = geo.inverse.transpose();
    return {phi, jit(0, 0) * dx + jit(0, 1) * dy, jit(1, 0) * dx + jit(1, 1) * dy};
  }
};

// One side of a face: owner cell, jump and average weights.
struct FaceSide {
  CellIndex cell;
  double jump;
  double avg;
};

std::vector<FaceSide> face_sides(const Face& f) {
  if (f.is_boundary()) return {{f.plus, 1.0, 1.0}};
  return {{f.plus, 1.0, 0.5}, {f.minus, -1.0, 0.5}};
}

BasisEval eval_on_face(const FunctionSpace& space, const Mesh& mesh, CellIndex K, const Eigen::MatrixX2d& x) {
  const CellGeometry geo(mesh, K);
  return eval_basis(space.basis(), geo, geo.pull_back(x));
}

struct FaceQuad {
  Eigen::MatrixX2d x;
  Eigen::VectorXd w;  // physical weights
};

FaceQuad face_quad(const Mesh& mesh, int face, const QuadratureRule& rule) {
  const auto& f = mesh.faces()[face];
  return {face_points(mesh, face, rule.points.col(0)), rule.weights * f.diameter};
}

void scatter(Triplets& trip, std::span<const int> rows, std::span<const int> cols, const Eigen::MatrixXd& local) {
  for (Eigen::Index i = 0; i < local.rows(); ++i)
    for (Eigen::Index j = 0; j < local.cols(); ++j)
      if (local(i, j) != 0.0) trip.emplace_back(rows[i], cols[j], local(i, j));
}

SparseForm finish(SpacePtr rows, SpacePtr cols, Triplets& trip) {
  SparseMatrix m(rows->num_dofs(), cols->num_dofs());
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  return {std::move(rows), std::move(cols), std::move(m)};
}

// Vector-vector grad:grad cell block with matching components.
void add_vector_stiffness(Eigen::MatrixXd& local, const BasisEval& t, const BasisEval& s, const Eigen::VectorXd& w) {
  const Eigen::MatrixXd k = t.gx.transpose() * w.asDiagonal() * s.gx + t.gy.transpose() * w.asDiagonal() * s.gy;
  for (Eigen::Index i = 0; i < k.rows(); ++i)
    for (Eigen::Index j = 0; j < k.cols(); ++j) {
      local(2 * i, 2 * j) += k(i, j);
      local(2 * i + 1, 2 * j + 1) += k(i, j);
    }
}

// Loops over cells and over faces; face kernels receive both sides.
template <class CellKernel, class FaceKernel>
SparseForm assemble_generic(SpacePtr test, SpacePtr trial, bool interior_only, CellKernel&& cell_kernel,
                            FaceKernel&& face_kernel) {
  const auto& mesh = test->mesh();
  const int k = std::max(test->degree(), trial->degree());
  const CellTable ttab(test->basis(), cell_exactness(k));
  const CellTable stab(trial->basis(), cell_exactness(k));
  const auto erule = edge_quadrature(edge_exactness(k));
  Triplets trip;
  Eigen::MatrixXd local;

  for (CellIndex K = 0; K < static_cast<CellIndex>(mesh.num_cells()); ++K) {
    const CellGeometry geo(mesh, K);
    const Eigen::VectorXd w = ttab.rule.weights * std::abs(geo.det);
    local.setZero(test->local_dim(), trial->local_dim());
    if (cell_kernel(local, ttab.on(geo), stab.on(geo), w)) scatter(trip, test->cell_dofs(K), trial->cell_dofs(K), local);
  }

  if constexpr (!std::is_same_v<std::decay_t<FaceKernel>, std::nullptr_t>) {
    for (int F = 0; F < static_cast<int>(mesh.num_faces()); ++F) {
      const auto& face = mesh.faces()[F];
      if (interior_only && face.is_boundary()) continue;
      const auto fq = face_quad(mesh, F, erule);
      const auto sides = face_sides(face);
      for (const auto& ts : sides) {
        const BasisEval te = eval_on_face(*test, mesh, ts.cell, fq.x);
        for (const auto& ss : sides) {
          const BasisEval se = eval_on_face(*trial, mesh, ss.cell, fq.x);
          local.setZero(test->local_dim(), trial->local_dim());
          face_kernel(local, face, ts, te, ss, se, fq.w);
          scatter(trip, test->cell_dofs(ts.cell), trial->cell_dofs(ss.cell), local);
        }
      }
    }
  }
  return finish(std::move(test), std::move(trial), trip);
}

Eigen::MatrixXd normal_derivative(const BasisEval& e, const Point& n) { return n.x() * e.gx + n.y() * e.gy; }

}  // namespace

SparseForm assemble_a(SpacePtr test, SpacePtr trial, const FormParameters& params) {
  params.validate();
  require_same_mesh(*test, *trial, "assemble_a");
  require_components(*test, 2, "assemble_a", "test");
  require_components(*trial, 2, "assemble_a", "trial");
  auto cell = [&](Eigen::MatrixXd& local, const BasisEval& t, const BasisEval& s, const Eigen::VectorXd& w) {
    add_vector_stiffness(local, t, s, w);
    return true;
  };
  auto face = [&](Eigen::MatrixXd& local, const Face& f, const FaceSide& ts, const BasisEval& t, const FaceSide& ss,
                  const BasisEval& s, const Eigen::VectorXd& w) {
    const double pen = params.penalty(f.diameter);
    const Eigen::MatrixXd dnt = normal_derivative(t, f.normal);
    const Eigen::MatrixXd dns = normal_derivative(s, f.normal);
    const Eigen::MatrixXd k = pen * ts.jump * ss.jump * (t.phi.transpose() * w.asDiagonal() * s.phi) -
                              ss.avg * ts.jump * (t.phi.transpose() * w.asDiagonal() * dns) -
                              ts.avg * ss.jump * (dnt.transpose() * w.asDiagonal() * s.phi);
    for (Eigen::Index i = 0; i < k.rows(); ++i)
      for (Eigen::Index j = 0; j < k.cols(); ++j) {
        local(2 * i, 2 * j) += k(i, j);
        local(2 * i + 1, 2 * j + 1) += k(i, j);
      }
  };
  return assemble_generic(std::move(test), std::move(trial), false, cell, face);
}

SparseForm assemble_b(SpacePtr test_velocity, SpacePtr trial_pressure) {
  require_same_mesh(*test_velocity, *trial_pressure, "assemble_b");
  require_components(*test_velocity, 2, "assemble_b", "test");
  require_components(*trial_pressure, 1, "assemble_b", "trial");
  auto cell = [](Eigen::MatrixXd& local, const BasisEval& t, const BasisEval& s, const Eigen::VectorXd& w) {
    const Eigen::MatrixXd kx = -(t.gx.transpose() * w.asDiagonal() * s.phi);
    const Eigen::MatrixXd ky = -(t.gy.transpose() * w.asDiagonal() * s.phi);
    for (Eigen::Index i = 0; i < kx.rows(); ++i) {
      local.row(2 * i) += kx.row(i);
      local.row(2 * i + 1) += ky.row(i);
    }
    return true;
  };
  auto face = [](Eigen::MatrixXd& local, const Face& f, const FaceSide& ts, const BasisEval& t, const FaceSide& ss,
                 const BasisEval& s, const Eigen::VectorXd& w) {
    const Eigen::MatrixXd k = ts.jump * ss.avg * (t.phi.transpose() * w.asDiagonal() * s.phi);
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
      local.row(2 * i) += f.normal.x() * k.row(i);
      local.row(2 * i + 1) += f.normal.y() * k.row(i);
    }
  };
  return assemble_generic(std::move(test_velocity), std::move(trial_pressure), false, cell, face);
}

SparseForm assemble_d(SpacePtr test_pressure, SpacePtr trial_velocity) {
  require_same_mesh(*test_pressure, *trial_velocity, "assemble_d");
  require_components(*test_pressure, 1, "assemble_d", "test");
  require_components(*trial_velocity, 2, "assemble_d", "trial");
  auto cell = [](Eigen::MatrixXd& local, const BasisEval& t, const BasisEval& s, const Eigen::VectorXd& w) {
    const Eigen::MatrixXd kx = t.gx.transpose() * w.asDiagonal() * s.phi;
    const Eigen::MatrixXd ky = t.gy.transpose() * w.asDiagonal() * s.phi;
    for (Eigen::Index j = 0; j < kx.cols(); ++j) {
      local.col(2 * j) += kx.col(j);
      local.col(2 * j + 1) += ky.col(j);
    }
    return true;
  };
  auto face = [](Eigen::MatrixXd& local, const Face& f, const FaceSide& ts, const BasisEval& t, const FaceSide& ss,
                 const BasisEval& s, const Eigen::VectorXd& w) {
    const Eigen::MatrixXd k = -ts.jump * ss.avg * (t.phi.transpose() * w.asDiagonal() * s.phi);
    for (Eigen::Index j = 0; j < k.cols(); ++j) {
      local.col(2 * j) += f.normal.x() * k.col(j);
      local.col(2 * j + 1) += f.normal.y() * k.col(j);
    }
  };
  return assemble_generic(std::move(test_pressure), std::move(trial_velocity), true, cell, face);
}

SparseForm assemble_s(SpacePtr test_pressure, SpacePtr trial_pressure) {
  require_same_mesh(*test_pressure, *trial_pressure, "assemble_s");
  require_components(*test_pressure, 1, "assemble_s", "test");
  require_components(*trial_pressure, 1, "assemble_s", "trial");
  auto cell = [](Eigen::MatrixXd&, const BasisEval&, const BasisEval&, const Eigen::VectorXd&) { return false; };
  auto face = [](Eigen::MatrixXd& local, const Face& f, const FaceSide& ts, const BasisEval& t, const FaceSide& ss,
                 const BasisEval& s, const Eigen::VectorXd& w) {
    local += f.diameter * ts.jump * ss.jump * (t.phi.transpose() * w.asDiagonal() * s.phi);
  };
  return assemble_generic(std::move(test_pressure), std::move(trial_pressure), true, cell, face);
}

SparseForm assemble_gram_velocity(SpacePtr test, const FormParameters& params) {
  params.validate();
  require_components(*test, 2, "assemble_gram_velocity", "test");
  auto cell = [](Eigen::MatrixXd& local, const BasisEval& t, const BasisEval& s, const Eigen::VectorXd& w) {
    add_vector_stiffness(local, t, s, w);
    return true;
  };
  auto face = [&](Eigen::MatrixXd& local, const Face& f, const FaceSide& ts, const BasisEval& t, const FaceSide& ss,
                  const BasisEval& s, const Eigen::VectorXd& w) {
    const Eigen::MatrixXd k =
        params.penalty(f.diameter) * ts.jump * ss.jump * (t.phi.transpose() * w.asDiagonal() * s.phi);
    for (Eigen::Index i = 0; i < k.rows(); ++i)
      for (Eigen::Index j = 0; j < k.cols(); ++j) {
        local(2 * i, 2 * j) += k(i, j);
        local(2 * i + 1, 2 * j + 1) += k(i, j);
      }
  };
  return assemble_generic(test, test, false, cell, face);
}

SparseForm assemble_gram_pressure(SpacePtr test) {
  require_components(*test, 1, "assemble_gram_pressure", "test");
  auto cell = [](Eigen::MatrixXd& local, const BasisEval& t, const BasisEval& s, const Eigen::VectorXd& w) {
    local += t.phi.transpose() * w.asDiagonal() * s.phi;
    return true;
  };
  auto face = [](Eigen::MatrixXd& local, const Face& f, const FaceSide& ts, const BasisEval& t, const FaceSide& ss,
                 const BasisEval& s, const Eigen::VectorXd& w) {
    local += f.diameter * ts.jump * ss.jump * (t.phi.transpose() * w.asDiagonal() * s.phi);
  };
  return assemble_generic(test, test, true, cell, face);
}

SparseForm assemble_mass(SpacePtr space) {
  require_components(*space, 1, "assemble_mass", "test");
  auto cell = [](Eigen::MatrixXd& local, const BasisEval& t, const BasisEval& s, const Eigen::VectorXd& w) {
    local += t.phi.transpose() * w.asDiagonal() * s.phi;
    return true;
  };
  return assemble_generic(space, space, true, cell, nullptr);
}

Vector assemble_rhs(SpacePtr test_velocity, const ProblemData& data, const FormParameters& params) {
  params.validate();
  require_components(*test_velocity, 2, "assemble_rhs", "test");
  const auto& space = *test_velocity;
  const auto& mesh = space.mesh();
  const int k = space.degree();
  // Data terms are not polynomial; integrate them a few degrees above the forms.
  const CellTable tab(space.basis(), std::min(kMaxQuadratureDegree, cell_exactness(k) + 4));
  const auto erule = edge_quadrature(std::min(kMaxQuadratureDegree, edge_exactness(k) + 8));
  Vector rhs = Vector::Zero(space.num_dofs());

  if (data.forcing) {
    for (CellIndex K = 0; K < static_cast<CellIndex>(mesh.num_cells()); ++K) {
      const CellGeometry geo(mesh, K);
      const Eigen::MatrixX2d x = geo.map(Eigen::MatrixX2d(tab.rule.points));
      Eigen::MatrixX2d f(x.rows(), 2);
      for (Eigen::Index q = 0; q < x.rows(); ++q) f.row(q) = data.forcing(x.row(q).transpose()).transpose();
      if (f.isZero(0.0)) continue;
      const Eigen::VectorXd w = tab.rule.weights * std::abs(geo.det);
      const auto dofs = space.cell_dofs(K);
      for (Eigen::Index i = 0; i < tab.phi.cols(); ++i)
        for (int c = 0; c < 2; ++c) rhs[dofs[2 * i + c]] += (w.array() * f.col(c).array() * tab.phi.col(i).array()).sum();
    }
  }

  if (data.dirichlet) {
    for (int F : mesh.faces().boundary) {
      const auto& face = mesh.faces()[F];
      const auto fq = face_quad(mesh, F, erule);
      Eigen::MatrixX2d g(fq.x.rows(), 2);
      for (Eigen::Index q = 0; q < fq.x.rows(); ++q) g.row(q) = data.dirichlet(fq.x.row(q).transpose()).transpose();
      if (g.isZero(0.0)) continue;
      const BasisEval e = eval_on_face(space, mesh, face.plus, fq.x);
      const Eigen::MatrixXd dn = normal_derivative(e, face.normal);
      const double pen = params.penalty(face.diameter);
      const auto dofs = space.cell_dofs(face.plus);
      for (Eigen::Index i = 0; i < e.phi.cols(); ++i)
        for (int c = 0; c < 2; ++c)
          rhs[dofs[2 * i + c]] +=
              (fq.w.array() * g.col(c).array() * (pen * e.phi.col(i).array() - dn.col(i).array())).sum();
    }
  }
  return rhs;
}

Vector assemble_pressure_rhs(SpacePtr test_pressure, const ProblemData& data) {
  require_components(*test_pressure, 1, "assemble_pressure_rhs", "test");
  const auto& space = *test_pressure;
  const auto& mesh = space.mesh();
  Vector rhs = Vector::Zero(space.num_dofs());
  if (!data.dirichlet) return rhs;
  const auto erule = edge_quadrature(std::min(kMaxQuadratureDegree, edge_exactness(space.degree()) + 8));
  for (int F : mesh.faces().boundary) {
    const auto& face = mesh.faces()[F];
    const auto fq = face_quad(mesh, F, erule);
    Eigen::VectorXd gn(fq.x.rows());
    for (Eigen::Index q = 0; q < fq.x.rows(); ++q) gn[q] = data.dirichlet(fq.x.row(q).transpose()).dot(face.normal);
    if (gn.isZero(0.0)) continue;
    const BasisEval e = eval_on_face(space, mesh, face.plus, fq.x);
    const auto dofs = space.cell_dofs(face.plus);
    for (Eigen::Index i = 0; i < e.phi.cols(); ++i) rhs[dofs[i]] += (fq.w.array() * gn.array() * e.phi.col(i).array()).sum();
  }
  return rhs;
}

}  // namespace asfem
