#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>

#include "asfem/reference.hpp"

namespace asfem {

namespace {

void check_degree(int exactness, const char* who) {
  if (exactness < 1 || exactness > kMaxQuadratureDegree) {
    throw std::invalid_argument(std::string(who) + ": unsupported exactness " + std::to_string(exactness) +
                                " (supported range 1.." + std::to_string(kMaxQuadratureDegree) + ")");
  }
}

// P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  if (n == 1) p0 = 1.0;
  return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

}  // namespace

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  QuadratureRule rule;
  rule.points.resize(n, 1);
  rule.weights.resize(n);
  rule.exactness = 2 * n - 1;
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pn = 0.0, dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      std::tie(pn, dp) = legendre(n, x);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    std::tie(pn, dp) = legendre(n, x);
    // Map [-1,1] -> [0,1].
    rule.points(i, 0) = 0.5 * (1.0 - x);
    rule.weights(i) = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

QuadratureRule edge_quadrature(int exactness) {
  check_degree(exactness, "edge_quadrature");
  auto rule = gauss_legendre((exactness + 2) / 2);
  rule.exactness = exactness;
  return rule;
}

QuadratureRule triangle_quadrature(int exactness) {
  check_degree(exactness, "triangle_quadrature");
  // x = s, y = t (1 - s), Jacobian (1 - s); the s-integrand has degree exactness + 1.
  const auto gs = gauss_legendre((exactness + 3) / 2);
  const auto gt = gauss_legendre((exactness + 2) / 2);
  QuadratureRule rule;
  const Eigen::Index n = gs.size() * gt.size();
  rule.points.resize(n, 2);
  rule.weights.resize(n);
  rule.exactness = exactness;
  Eigen::Index q = 0;
  for (Eigen::Index i = 0; i < gs.size(); ++i) {
    const double s = gs.points(i, 0);
    for (Eigen::Index j = 0; j < gt.size(); ++j, ++q) {
      const double t = gt.points(j, 0);
      rule.points(q, 0) = s;
      rule.points(q, 1) = t * (1.0 - s);
      rule.weights(q) = gs.weights(i) * gt.weights(j) * (1.0 - s);
    }
  }
  return rule;
}

}  // namespace asfem
