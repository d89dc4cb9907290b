#include "asfem/bench.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace asfem {

namespace {

using std::exp;
using std::pow;

Eigen::Vector2d case1_velocity(const Point& X) {
  const double x = X.x(), y = X.y(), ex = exp(x);
  return {2.0 * ex * (x - 1) * (x - 1) * x * x * (y * y - y) * (2 * y - 1),
          -ex * (x - 1) * x * (x * x + 3 * x - 2) * (y - 1) * (y - 1) * y * y};
}

Eigen::Matrix2d case1_gradient(const Point& X) {
  const double x = X.x(), y = X.y(), ex = exp(x);
  const double q = x * x + 3 * x - 2;
  Eigen::Matrix2d g;
  g(0, 0) = 2 * x * y * (x - 1) * (y - 1) * (2 * y - 1) * q * ex;
  g(0, 1) = 2 * x * x * (x - 1) * (x - 1) * (6 * y * y - 6 * y + 1) * ex;
  g(1, 0) = -y * y * (y - 1) * (y - 1) * (pow(x, 4) + 6 * pow(x, 3) + x * x - 8 * x + 2) * ex;
  g(1, 1) = -g(0, 0);
  return g;
}

double case1_pressure(const Point& X) {
  const double x = X.x(), y = X.y(), Y = y * y - y;
  return -424.0 + 156.0 * std::numbers::e +
         Y * (-456.0 + exp(x) * (456.0 + x * x * (228.0 - 5.0 * Y) + 2.0 * x * (-228.0 + Y) +
                                 2.0 * pow(x, 3) * (-36.0 + Y) + pow(x, 4) * (12.0 + Y)));
}

Eigen::Vector2d case1_forcing(const Point& X) {
  const double x = X.x(), y = X.y(), ex = exp(x);
  const double x2 = x * x, x3 = x2 * x, x4 = x3 * x, y2 = y * y, y3 = y2 * y, y4 = y3 * y;
  const double fx = ex * (x4 * y4 - 6 * x4 * y3 + 19 * x4 * y2 - 38 * x4 * y + 12 * x4 + 6 * x3 * y4 -
                          36 * x3 * y3 + 18 * x3 * y2 + 60 * x3 * y - 24 * x3 + x2 * y4 - 6 * x2 * y3 +
                          19 * x2 * y2 - 38 * x2 * y + 12 * x2 - 8 * x * y4 + 48 * x * y3 - 56 * x * y2 +
                          16 * x * y + 2 * y4 - 12 * y3 + 14 * y2 - 4 * y);
  const double fy = ex * (x4 * y4 + 2 * x4 * y3 + 7 * x4 * y2 + 14 * x4 * y - 10 * x4 + 10 * x3 * y4 -
                          12 * x3 * y3 + 22 * x3 * y2 - 164 * x3 * y + 76 * x3 + 19 * x2 * y4 - 58 * x2 * y3 -
                          11 * x2 * y2 + 506 * x2 * y - 238 * x2 - 6 * x * y4 + 20 * x * y3 + 6 * x * y2 -
                          932 * x * y + 460 * x - 6 * y4 + 12 * y3 - 6 * y2 + 912 * y - 456) -
                    912 * y + 456;
  return {fx, fy};
}

double polar_angle(const Point& X) {
  double phi = std::atan2(X.y(), X.x());
  if (phi < 0.0) phi += 2.0 * std::numbers::pi;
  return phi;
}

// Angular profile U(phi) with u = r^alpha U(phi), and its derivative.
std::pair<Eigen::Vector2d, Eigen::Vector2d> sector_profile(double phi) {
  const double a1 = 1.0 + sector::alpha;
  const auto [p0, p1, p2, p3] = sector::psi(phi);
  (void)p3;
  const double s = std::sin(phi), c = std::cos(phi);
  const Eigen::Vector2d U(a1 * s * p0 + c * p1, s * p1 - a1 * c * p0);
  const Eigen::Vector2d dU(a1 * (c * p0 + s * p1) - s * p1 + c * p2, c * p1 + s * p2 - a1 * (c * p1 - s * p0));
  return {U, dU};
}

Eigen::Vector2d case2_velocity(const Point& X) {
  const double r = X.norm();
  if (r == 0.0) return Eigen::Vector2d::Zero();
  return std::pow(r, sector::alpha) * sector_profile(polar_angle(X)).first;
}

Eigen::Matrix2d case2_gradient(const Point& X) {
  const double r = X.norm();
  if (r == 0.0) throw std::domain_error("case2: velocity gradient is singular at the origin");
  const double phi = polar_angle(X);
  const auto [U, dU] = sector_profile(phi);
  const double ra = std::pow(r, sector::alpha - 1.0);
  const Eigen::Vector2d du_dr = sector::alpha * ra * U;  // d/dr
  const Eigen::Vector2d du_dphi_over_r = ra * dU;        // (1/r) d/dphi
  const double s = std::sin(phi), c = std::cos(phi);
  Eigen::Matrix2d g;
  g.col(0) = c * du_dr - s * du_dphi_over_r;
  g.col(1) = s * du_dr + c * du_dphi_over_r;
  return g;
}

double case2_pressure(const Point& X) {
  const double r = X.norm();
  if (r == 0.0) throw std::domain_error("case2: pressure is singular at the origin");
  const double a1 = 1.0 + sector::alpha;
  const auto d = sector::psi(polar_angle(X));
  return -std::pow(r, sector::alpha - 1.0) * (a1 * a1 * d[1] + d[3]) / (1.0 - sector::alpha);
}

Eigen::Vector2d lid_velocity(const Point& X) {
  constexpr double eps = 1.0 / 64.0;
  if (std::abs(X.y() - 1.0) > 1e-12) return Eigen::Vector2d::Zero();
  const double x = X.x();
  return {std::clamp(std::min(x, 1.0 - x) / eps, 0.0, 1.0), 0.0};
}

Eigen::Vector2d zero_vector(const Point&) { return Eigen::Vector2d::Zero(); }

struct NormParts {
  double u_L2_sq = 0.0, p_L2_sq = 0.0, grad_sq = 0.0, u_jump_sq = 0.0, p_jump_sq = 0.0;
  double triple() const { return std::sqrt(grad_sq + u_jump_sq + p_L2_sq + p_jump_sq); }
};

// Norms of (exact - discrete); a null exact means the exact fields are zero.
NormParts difference_norms(const FieldCoefficients& u_h, const FieldCoefficients& p_h, const ExactSolution* exact,
                           const VectorFunction& boundary, double p_shift, const FormParameters& params, int extra) {
  const Mesh& mesh = u_h.space->mesh();
  if (!p_h.space->same_mesh(*u_h.space)) throw std::invalid_argument("error norms: fields on different meshes");
  if (u_h.space->components() != 2 || p_h.space->components() != 1) {
    throw std::invalid_argument("error norms: expected a vector velocity and a scalar pressure");
  }
  const int k = std::max(u_h.space->degree(), p_h.space->degree());
  const auto crule = triangle_quadrature(std::min(kMaxQuadratureDegree, cell_exactness(k) + extra));
  const auto erule = edge_quadrature(std::min(kMaxQuadratureDegree, edge_exactness(k) + extra));
  const Eigen::MatrixX2d ref = crule.points;
  const Eigen::VectorXd t = erule.points.col(0);

  NormParts parts;
  for (CellIndex K = 0; K < static_cast<CellIndex>(mesh.num_cells()); ++K) {
    const CellGeometry geo(mesh, K);
    const Eigen::MatrixX2d x = geo.map(ref);
    const Eigen::MatrixXd uv = evaluate_on_cell(u_h, K, ref);
    const auto ug = gradient_on_cell(u_h, K, ref);
    const Eigen::MatrixXd pv = evaluate_on_cell(p_h, K, ref);
    for (Eigen::Index q = 0; q < ref.rows(); ++q) {
      const double w = crule.weights[q] * std::abs(geo.det);
      Eigen::Vector2d du = -uv.row(q).transpose();
      Eigen::Matrix2d dg;
      dg.row(0) = -ug[0].row(q);
      dg.row(1) = -ug[1].row(q);
      double dp = -pv(q, 0);
      if (exact) {
        const Point xq = x.row(q).transpose();
        du += exact->velocity(xq);
        dg += exact->velocity_gradient(xq);
        dp += exact->pressure(xq) - p_shift;
      }
      parts.u_L2_sq += w * du.squaredNorm();
      parts.grad_sq += w * dg.squaredNorm();
      parts.p_L2_sq += w * dp * dp;
    }
  }

  const auto& faces = mesh.faces();
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& face = faces[f];
    const double h = face.diameter;
    const Eigen::MatrixXd uj = face_jump(u_h, static_cast<int>(f), t);
    if (face.is_boundary()) {
      const Eigen::MatrixX2d x = face_points(mesh, static_cast<int>(f), t);
      double acc = 0.0;
      for (Eigen::Index q = 0; q < t.size(); ++q) {
        Eigen::Vector2d d = -uj.row(q).transpose();
        if (boundary) d += boundary(x.row(q).transpose());
        acc += erule.weights[q] * d.squaredNorm();
      }
      parts.u_jump_sq += params.penalty(h) * h * acc;
    } else {
      const Eigen::MatrixXd pj = face_jump(p_h, static_cast<int>(f), t);
      double au = 0.0, ap = 0.0;
      for (Eigen::Index q = 0; q < t.size(); ++q) {
        au += erule.weights[q] * uj.row(q).squaredNorm();
        ap += erule.weights[q] * pj(q, 0) * pj(q, 0);
      }
      parts.u_jump_sq += params.penalty(h) * h * au;
      parts.p_jump_sq += h * h * ap;
    }
  }
  return parts;
}

}  // namespace

std::array<double, 4> sector::psi(double phi) {
  const double a = 1.0 + alpha, b = alpha - 1.0, c = std::cos(alpha * omega);
  std::array<double, 4> d{};
  for (int n = 0; n < 4; ++n) {
    const double shift = 0.5 * n * std::numbers::pi;
    d[n] = std::pow(a, n) * (c / a * std::sin(a * phi + shift) - std::cos(a * phi + shift)) +
           std::pow(b, n) * (-c / b * std::sin(b * phi + shift) + std::cos(b * phi + shift));
  }
  return d;
}

BenchmarkCase case1() {
  BenchmarkCase c;
  c.id = "case1";
  c.data = {case1_forcing, zero_vector};
  c.exact = ExactSolution{case1_velocity, case1_gradient, case1_pressure};
  c.domain = build_structured_unit_square;
  c.default_resolution = 4;
  c.default_theta = 0.5;
  return c;
}

BenchmarkCase case2() {
  BenchmarkCase c;
  c.id = "case2";
  c.data = {zero_vector, case2_velocity};
  c.exact = ExactSolution{case2_velocity, case2_gradient, case2_pressure};
  c.domain = build_circular_segment;
  c.default_resolution = 4;
  c.default_theta = 0.5;
  c.remove_pressure_mean = true;
  return c;
}

BenchmarkCase case3() {
  BenchmarkCase c;
  c.id = "case3";
  c.data = {zero_vector, lid_velocity};
  c.domain = build_structured_unit_square;
  c.default_resolution = 4;
  c.default_theta = 0.25;
  return c;
}

BenchmarkCase make_case(const std::string& id) {
  if (id == "case1") return case1();
  if (id == "case2") return case2();
  if (id == "case3") return case3();
  throw std::invalid_argument("unknown case '" + id + "' (expected case1, case2 or case3)");
}

double integrate(const Mesh& mesh, const ScalarFunction& f, int exactness) {
  const auto rule = triangle_quadrature(exactness);
  const Eigen::MatrixX2d ref = rule.points;
  double total = 0.0;
  for (CellIndex K = 0; K < static_cast<CellIndex>(mesh.num_cells()); ++K) {
    const CellGeometry geo(mesh, K);
    const Eigen::MatrixX2d x = geo.map(ref);
    double acc = 0.0;
    for (Eigen::Index q = 0; q < ref.rows(); ++q) acc += rule.weights[q] * f(x.row(q).transpose());
    total += acc * std::abs(geo.det);
  }
  return total;
}

ErrorNorms error_norms(const FieldCoefficients& u_h, const FieldCoefficients& p_h, const BenchmarkCase& bcase,
                       const FormParameters& params) {
  if (!bcase.has_exact()) throw std::invalid_argument("error_norms: " + bcase.id + " has no exact solution");
  const Mesh& mesh = u_h.space->mesh();
  const int k = std::max(u_h.space->degree(), p_h.space->degree());
  const int extra = 6;
  double shift = 0.0;
  if (bcase.remove_pressure_mean) {
    shift = integrate(mesh, bcase.exact->pressure, std::min(kMaxQuadratureDegree, cell_exactness(k) + extra)) /
            mesh.total_area();
  }
  const auto parts = difference_norms(u_h, p_h, &*bcase.exact, bcase.data.dirichlet, shift, params, extra);
  return {std::sqrt(parts.u_L2_sq), std::sqrt(parts.p_L2_sq), parts.triple()};
}

double triple_norm_by_quadrature(const FieldCoefficients& u_h, const FieldCoefficients& p_h,
                                 const FormParameters& params) {
  return difference_norms(u_h, p_h, nullptr, nullptr, 0.0, params, 2).triple();
}

std::optional<double> eoc(double e0, double e1, double h0, double h1) {
  if (!(e0 > 0.0) || !(e1 > 0.0) || !(h0 > 0.0) || !(h1 > 0.0) || h0 == h1) return std::nullopt;
  return std::log(e0 / e1) / std::log(h0 / h1);
}

void compute_eoc(std::vector<ConvergenceRecord>& records, EocMeasure measure) {
  auto size = [measure](const ConvergenceRecord& r) {
    return measure == EocMeasure::MeshSize ? r.h_max : 1.0 / std::sqrt(static_cast<double>(r.ndof_total));
  };
  auto rate = [&](const std::optional<double>& a, const std::optional<double>& b, double h0, double h1) {
    return (a && b) ? eoc(*a, *b, h0, h1) : std::nullopt;
  };
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& r = records[i];
    r.eoc_u = r.eoc_p = r.eoc_triple = std::nullopt;
    if (i == 0) continue;
    const auto& prev = records[i - 1];
    const double h0 = size(prev), h1 = size(r);
    r.eoc_u = rate(prev.err_u_L2, r.err_u_L2, h0, h1);
    r.eoc_p = rate(prev.err_p_L2, r.err_p_L2, h0, h1);
    r.eoc_triple = rate(prev.err_triple, r.err_triple, h0, h1);
  }
}

}  // namespace asfem
