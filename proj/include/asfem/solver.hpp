#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "asfem/assembly.hpp"

namespace asfem {

/// Velocity/pressure space pair.
struct SpacePair {
  SpacePtr velocity;
  SpacePtr pressure;
};

struct SolverDiagnostics {
  int outer_iterations = 0;
  int inner_iterations = 0;
  double residual = 0.0;  // relative residual of the full block system
  bool converged = false;
  std::vector<double> history;  // relative residual after each outer iteration
  std::vector<int> inner_history;
  std::string message;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, SolverDiagnostics diag)
      : std::runtime_error(what), diagnostics_(std::move(diag)) {}
  const SolverDiagnostics& diagnostics() const { return diagnostics_; }

 private:
  SolverDiagnostics diagnostics_;
};

/// Blocks of the residual-minimization saddle problem
///
///   [ Gu  0   A   B   0 ] [e_u]   [l_u]
///   [ 0   Gp  D  -S   0 ] [e_p]   [l_p]
///   [ A'  D'  0   0   0 ] [ u ] = [ 0 ]
///   [ B' -S'  0   0   m ] [ p ]   [ 0 ]
///   [ 0   0   0   m'  0 ] [ l ]   [ 0 ]
///
/// S is the pressure-jump stabilization between the pressure test space and
/// the trial pressure space; it vanishes for continuous trial pressures.
struct BlockSystem {
  SpacePair test;
  SpacePair trial;
  SparseMatrix Gu, Gp, A, B, D, S;
  Vector mean_row;  // integral of each trial pressure basis function
  Vector l_u, l_p;
  SparseMatrix embed_u, embed_p;  // trial -> test coefficient maps

  int n_eu() const { return static_cast<int>(Gu.rows()); }
  int n_ep() const { return static_cast<int>(Gp.rows()); }
  int n_u() const { return static_cast<int>(A.cols()); }
  int n_p() const { return static_cast<int>(B.cols()); }
  int size() const { return n_eu() + n_ep() + n_u() + n_p() + 1; }

  SparseMatrix global_matrix() const;
  Vector global_rhs() const;

  /// N s = [A u + B p; D u - S p]
  Vector apply_N(const Vector& u, const Vector& p) const;
  /// N' e = [A' e_u + D' e_p; B' e_u - S' e_p]
  Vector apply_Nt(const Vector& e_u, const Vector& e_p) const;
};

struct SaddleSolution {
  Vector e_u, e_p, u, p;
  double multiplier = 0.0;
  SolverDiagnostics diagnostics;

  Vector stacked() const;
};

/// Builds the block system from pre-assembled forms. Throws on dimension mismatch.
BlockSystem build_block_system(const SpacePair& test, const SpacePair& trial, const SparseForm& Gu,
                               const SparseForm& Gp, const SparseForm& A, const SparseForm& B, const SparseForm& D,
                               const std::optional<SparseForm>& S, const Vector& l_u, const Vector& l_p);

/// Assembles every block for the given spaces and data.
BlockSystem assemble_block_system(const SpacePair& test, const SpacePair& trial, const ProblemData& data,
                                  const FormParameters& params);

/// Sparse LDL' of the regularized quasi-definite matrix [G N; N' -eps I] with
/// iterative refinement against the exact global matrix. Throws SolverError when
/// the factorization fails or refinement stalls above 1e-10.
SaddleSolution solve_direct(const BlockSystem& system);

struct FixedPointOptions {
  double tol = 1e-9;
  int max_iter = 200;
  double inner_tol = 1e-12;
  int inner_max_iter = 20000;
  /// Trial coefficients used as the starting point (previous level).
  std::optional<Vector> initial_u, initial_p;
};

/// Fixed-point iteration with the splitting G = F - E, F the exact sparse
/// Cholesky factor of G, and the Schur complement S = N' F^{-1} N solved by
/// PCG with the block preconditioner diag(K, Q_Mp). Throws SolverError when
/// max_iter is exceeded.
SaddleSolution solve_fixed_point(const BlockSystem& system, const FixedPointOptions& options = {});

/// Independently assembled and solved DG problem on broken equal-order
/// spaces: [A B; D -S] with the zero-mean pressure constraint.
struct DgSolution {
  Vector u, p;
  double multiplier = 0.0;
};
DgSolution solve_dg_reference(const SpacePair& spaces, const ProblemData& data, const FormParameters& params);

/// |||(v, q)|||^2 using the test Gram blocks.
double triple_norm_sq(const BlockSystem& system, const Vector& v_test, const Vector& q_test);
double triple_norm(const BlockSystem& system, const Vector& v_test, const Vector& q_test);
/// Triple norm of a trial-space pair, through the embedding.
double trial_triple_norm(const BlockSystem& system, const Vector& u_trial, const Vector& p_trial);

/// Global relative residual ||M x - b|| / ||b|| (absolute when b = 0).
double relative_residual(const BlockSystem& system, const SaddleSolution& sol);

/// max over trial basis of |n*((e_u, e_p), (z, r))| / |||(e_u, e_p)|||.
double orthogonality_defect(const BlockSystem& system, const SaddleSolution& sol);

/// Coordinate-format dump with a MatrixMarket header, 1-based indices.
void write_matrix_market(std::ostream& out, const SparseMatrix& m);

}  // namespace asfem
