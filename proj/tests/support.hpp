#pragma once

#include <random>

#include <Eigen/Dense>

#include "asfem/adapt.hpp"

namespace asfem::testing {

/// Structured square with interior vertices jittered by up to `amount` * h.
inline Mesh jittered_square(int n, unsigned seed, double amount = 0.2) {
  const Mesh base = build_structured_unit_square(n);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-amount / n, amount / n);
  std::vector<Point> v = base.vertices();
  for (auto& p : v) {
    const bool boundary = p.x() == 0.0 || p.x() == 1.0 || p.y() == 0.0 || p.y() == 1.0;
    if (!boundary) p += Point(u(rng), u(rng));
  }
  return Mesh(v, base.cells());
}

/// Jittered square followed by a few random bisections.
inline Mesh random_mesh(unsigned seed) {
  Mesh m = jittered_square(2 + static_cast<int>(seed % 2), seed);
  std::mt19937 rng(seed + 17);
  for (int round = 0; round < 2; ++round) {
    std::uniform_int_distribution<CellIndex> pick(0, static_cast<CellIndex>(m.num_cells()) - 1);
    m = bisect(m, {pick(rng), pick(rng)});
  }
  return m;
}

inline std::shared_ptr<const Mesh> share(Mesh m) { return std::make_shared<const Mesh>(std::move(m)); }

inline Eigen::MatrixXd dense(const SparseMatrix& m) { return Eigen::MatrixXd(m); }

inline double max_abs(const SparseMatrix& m) {
  return m.nonZeros() ? Eigen::MatrixXd(m).cwiseAbs().maxCoeff() : 0.0;
}

inline Vector random_vector(Eigen::Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

/// Exact integral of x^a y^b over the reference triangle: a! b! / (a+b+2)!.
inline double monomial_integral(int a, int b) {
  return std::tgamma(a + 1.0) * std::tgamma(b + 1.0) / std::tgamma(a + b + 3.0);
}

}  // namespace asfem::testing
