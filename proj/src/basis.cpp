#include <array>
#include <cmath>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>

#include "asfem/reference.hpp"

namespace asfem {

ReferenceBasis::ReferenceBasis(int degree) : degree_(degree) {
  if (degree < 0 || degree > 4) {
    throw std::invalid_argument("ReferenceBasis: degree " + std::to_string(degree) + " not in 0..4");
  }
  const int k = degree;
  const int dim = (k + 1) * (k + 2) / 2;
  nodes_.resize(dim, 2);
  bary_.resize(dim, 3);

  if (k == 0) {
    nodes_.row(0) << 1.0 / 3.0, 1.0 / 3.0;
    bary_.row(0) << 0, 0, 0;
  } else {
    int n = 0;
    auto add = [&](int l0, int l1, int l2) {
      bary_.row(n) << l0, l1, l2;
      nodes_.row(n) << static_cast<double>(l1) / k, static_cast<double>(l2) / k;
      ++n;
    };
    for (int v = 0; v < 3; ++v) {
      std::array<int, 3> l{0, 0, 0};
      l[v] = k;
      add(l[0], l[1], l[2]);
    }
    for (int e = 0; e < 3; ++e) {
      const int a = (e + 1) % 3, b = (e + 2) % 3;
      for (int j = 1; j < k; ++j) {
        std::array<int, 3> l{0, 0, 0};
        l[a] = k - j;
        l[b] = j;
        add(l[0], l[1], l[2]);
      }
    }
    for (int l2 = 1; l2 < k; ++l2)
      for (int l1 = 1; l1 + l2 < k; ++l1) add(k - l1 - l2, l1, l2);
  }

  for (int total = 0; total <= k; ++total)
    for (int q = 0; q <= total; ++q) exponents_.emplace_back(total - q, q);

  Eigen::MatrixXd vandermonde(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int m = 0; m < dim; ++m)
      vandermonde(i, m) = std::pow(nodes_(i, 0), exponents_[m].first) * std::pow(nodes_(i, 1), exponents_[m].second);
  coeffs_ = vandermonde.inverse();
}

Eigen::MatrixXd ReferenceBasis::values(const Eigen::MatrixX2d& points) const {
  const Eigen::Index nq = points.rows();
  const int dim = dimension();
  Eigen::MatrixXd mono(nq, dim);
  for (Eigen::Index q = 0; q < nq; ++q)
    for (int m = 0; m < dim; ++m)
      mono(q, m) = std::pow(points(q, 0), exponents_[m].first) * std::pow(points(q, 1), exponents_[m].second);
  return mono * coeffs_;
}

void ReferenceBasis::gradients(const Eigen::MatrixX2d& points, Eigen::MatrixXd& dx, Eigen::MatrixXd& dy) const {
  const Eigen::Index nq = points.rows();
  const int dim = dimension();
  Eigen::MatrixXd mx = Eigen::MatrixXd::Zero(nq, dim), my = Eigen::MatrixXd::Zero(nq, dim);
  for (Eigen::Index q = 0; q < nq; ++q) {
    const double x = points(q, 0), y = points(q, 1);
    for (int m = 0; m < dim; ++m) {
      const auto [a, b] = exponents_[m];
      if (a > 0) mx(q, m) = a * std::pow(x, a - 1) * std::pow(y, b);
      if (b > 0) my(q, m) = b * std::pow(x, a) * std::pow(y, b - 1);
    }
  }
  dx = mx * coeffs_;
  dy = my * coeffs_;
}

const ReferenceBasis& reference_basis(int degree) {
  static std::array<std::unique_ptr<ReferenceBasis>, 5> cache;
  static std::once_flag flags[5];
  if (degree < 0 || degree > 4) {
    throw std::invalid_argument("reference_basis: degree " + std::to_string(degree) + " not in 0..4");
  }
  std::call_once(flags[degree], [degree] { cache[degree] = std::make_unique<ReferenceBasis>(degree); });
  return *cache[degree];
}

}  // namespace asfem
