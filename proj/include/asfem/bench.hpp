#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "asfem/assembly.hpp"

namespace asfem {

using TensorFunction = std::function<Eigen::Matrix2d(const Point&)>;

/// Exact velocity, its gradient (entry (i, j) = d u_i / d x_j) and pressure.
struct ExactSolution {
  VectorFunction velocity;
  TensorFunction velocity_gradient;
  ScalarFunction pressure;
};

struct BenchmarkCase {
  std::string id;
  ProblemData data;
  std::optional<ExactSolution> exact;
  /// Initial mesh from a resolution parameter (squares per side, or sector rings).
  std::function<Mesh(int)> domain;
  int default_resolution = 4;
  double default_theta = 0.5;
  /// The exact pressure is only defined up to a constant on the polygonal domain.
  bool remove_pressure_mean = false;

  bool has_exact() const { return exact.has_value(); }
  Mesh initial_mesh(int resolution) const { return domain(resolution); }
};

/// Manufactured smooth solution on the unit square.
BenchmarkCase case1();
/// Singular solution on the 3pi/2 sector with reentrant corner at the origin.
BenchmarkCase case2();
/// Lid-driven cavity with a ramped lid profile.
BenchmarkCase case3();
/// Lookup by id ("case1", "case2", "case3"). Throws std::invalid_argument.
BenchmarkCase make_case(const std::string& id);

namespace sector {
inline constexpr double alpha = 856399.0 / 1572864.0;
inline constexpr double omega = 1.5 * 3.14159265358979323846;
/// psi and its first three derivatives at phi.
std::array<double, 4> psi(double phi);
}  // namespace sector

struct ErrorNorms {
  double u_L2 = 0.0;
  double p_L2 = 0.0;
  double triple = 0.0;
};

/// L2 errors and |||(u - u_h, p - p_h)||| against the exact fields, by cell
/// and face quadrature two or more degrees above the assembly rules.
/// Throws std::invalid_argument when the case has no exact solution.
ErrorNorms error_norms(const FieldCoefficients& u_h, const FieldCoefficients& p_h, const BenchmarkCase& bcase,
                       const FormParameters& params);

/// |||(u_h, p_h)||| of discrete fields by direct quadrature (no Gram matrices).
/// Boundary faces use the trace of u_h.
double triple_norm_by_quadrature(const FieldCoefficients& u_h, const FieldCoefficients& p_h,
                                 const FormParameters& params);

/// Integral of a scalar function over the mesh with the given exactness.
double integrate(const Mesh& mesh, const ScalarFunction& f, int exactness);

struct ConvergenceRecord {
  int level = 0;
  int ndof_u = 0;
  int ndof_p = 0;
  int ndof_test = 0;
  int ndof_total = 0;
  double h_max = 0.0;
  std::optional<double> err_u_L2, err_p_L2, err_triple;
  double est_triple = 0.0;
  std::optional<double> eoc_u, eoc_p, eoc_triple;
  std::optional<int> marked_cells;
  std::optional<int> solver_iters;
};

enum class EocMeasure { MeshSize, Dofs };

/// log(e0/e1) / log(h0/h1); absent for non-positive errors or equal sizes.
std::optional<double> eoc(double e0, double e1, double h0, double h1);

/// Fills the eoc_* columns from consecutive records. With Dofs, h is
/// replaced by ndof_total^{-1/2}.
void compute_eoc(std::vector<ConvergenceRecord>& records, EocMeasure measure);

}  // namespace asfem
