#pragma once

#include "asfem/fespace.hpp"

namespace asfem {

/// Penalty eta, super-penalization exponent beta, viscosity nu.
struct FormParameters {
  double eta = 40.0;
  double beta = 1.0;
  double nu = 1.0;

  /// eta = 10 (k+1)^2.
  static double default_eta(int degree) { return 10.0 * (degree + 1) * (degree + 1); }
  static FormParameters for_degree(int degree, double beta = 1.0) { return {default_eta(degree), beta, 1.0}; }

  void validate() const;
  double penalty(double h_face) const;
};

/// Assembled matrix with entry (i, j) = form(trial_j, test_i).
struct SparseForm {
  SpacePtr rows;
  SpacePtr cols;
  SparseMatrix matrix;
};

/// Forcing and Dirichlet data of a Stokes problem.
struct ProblemData {
  VectorFunction forcing;
  VectorFunction dirichlet;
};

/// Quadrature exactness used for bilinear forms: 2k+2 on cells, 2k+1 on edges.
int cell_exactness(int degree);
int edge_exactness(int degree);

// Symmetric interior penalty form with super-penalized jumps over all faces.
SparseForm assemble_a(SpacePtr test, SpacePtr trial, const FormParameters& params);
// -int q div_h v + sum_F int [v].n {q}, all faces.
SparseForm assemble_b(SpacePtr test_velocity, SpacePtr trial_pressure);
// int v . grad_h q - sum_{F interior} int {v}.n [q]. Rows are pressure tests.
SparseForm assemble_d(SpacePtr test_pressure, SpacePtr trial_velocity);
// sum_{F interior} h_F int [q][r].
SparseForm assemble_s(SpacePtr test_pressure, SpacePtr trial_pressure);
// Inner product of |||v|||_v: broken H1 seminorm plus eta/h^beta jump seminorm.
SparseForm assemble_gram_velocity(SpacePtr test, const FormParameters& params);
// Inner product of L2 plus h_F-weighted interior pressure jumps.
SparseForm assemble_gram_pressure(SpacePtr test);
// L2 mass matrix of a scalar space.
SparseForm assemble_mass(SpacePtr space);

/// l_h(v) = int f.v - int_{dOmega} u0.(grad v) n + sum_{F boundary} eta/h^beta int u0.v
Vector assemble_rhs(SpacePtr test_velocity, const ProblemData& data, const FormParameters& params);
/// sum_{F boundary} int q u0.n, the Dirichlet flux seen by the pressure test space.
Vector assemble_pressure_rhs(SpacePtr test_pressure, const ProblemData& data);

}  // namespace asfem
