#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

namespace asfem {

/// Quadrature rule on the reference triangle {(0,0),(1,0),(0,1)} (points
/// stored as rows) or on the unit interval [0,1] (single column).
struct QuadratureRule {
  Eigen::MatrixXd points;
  Eigen::VectorXd weights;
  int exactness = 0;

  Eigen::Index size() const { return weights.size(); }
};

inline constexpr int kMaxQuadratureDegree = 24;

/// Gauss-Legendre rule with n points on [0,1].
QuadratureRule gauss_legendre(int n);

/// Rule exact for polynomials of total degree <= exactness on the reference
/// triangle (collapsed-coordinate Gauss product). Supported range 1..24.
QuadratureRule triangle_quadrature(int exactness);

/// Gauss-Legendre rule on [0,1] exact to the requested degree. Range 1..24.
QuadratureRule edge_quadrature(int exactness);

/// Equispaced Lagrange basis of degree 0..4 on the reference triangle.
///
/// Node order: vertices, then edge-interior nodes edge by edge (edge e is
/// opposite vertex e, traversed from vertex (e+1)%3 to (e+2)%3), then
/// interior nodes. Degree 0 has a single node at the barycenter.
class ReferenceBasis {
 public:
  explicit ReferenceBasis(int degree);

  int degree() const { return degree_; }
  int dimension() const { return static_cast<int>(nodes_.rows()); }

  /// Node coordinates (rows).
  const Eigen::MatrixX2d& nodes() const { return nodes_; }
  /// Integer barycentric weights of each node (sum = degree), columns
  /// aligned with the reference vertices.
  const Eigen::MatrixX3i& barycentric() const { return bary_; }

  /// Values at points (rows of `points`): result(q, i) = phi_i(x_q).
  Eigen::MatrixXd values(const Eigen::MatrixX2d& points) const;
  /// Reference gradients: dx(q, i), dy(q, i).
  void gradients(const Eigen::MatrixX2d& points, Eigen::MatrixXd& dx, Eigen::MatrixXd& dy) const;

 private:
  int degree_;
  Eigen::MatrixX2d nodes_;
  Eigen::MatrixX3i bary_;
  Eigen::MatrixXd coeffs_;  // monomial coefficients, column i = basis i
  std::vector<std::pair<int, int>> exponents_;
};

/// Cached basis per degree 0..4.
const ReferenceBasis& reference_basis(int degree);

}  // namespace asfem
