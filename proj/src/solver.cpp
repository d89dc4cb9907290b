#include "asfem/solver.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/CholmodSupport>
#include <Eigen/UmfPackSupport>

namespace asfem {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;
using Cholesky = Eigen::CholmodDecomposition<SparseMatrix, Eigen::Lower>;

class Factor : public Cholesky {
 public:
  long failed_column() const { return m_cholmodFactor ? static_cast<long>(m_cholmodFactor->minor) : -1; }
};

void append_block(Triplets& trip, const SparseMatrix& m, int row0, int col0, double scale = 1.0,
                  bool transpose = false) {
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      const int r = static_cast<int>(transpose ? it.col() : it.row());
      const int c = static_cast<int>(transpose ? it.row() : it.col());
      trip.emplace_back(row0 + r, col0 + c, scale * it.value());
    }
}

void check_dims(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("build_block_system: dimension mismatch in " + what);
}

void factorize(Cholesky& chol, const SparseMatrix& m, const char* what) {
  chol.compute(m);
  if (chol.info() != Eigen::Success) {
    throw SolverError(std::string("Cholesky factorization of ") + what + " failed (not SPD)", {});
  }
}

}  // namespace

SparseMatrix BlockSystem::global_matrix() const {
  const int o_ep = n_eu(), o_u = o_ep + n_ep(), o_p = o_u + n_u(), o_l = o_p + n_p();
  Triplets trip;
  trip.reserve(static_cast<std::size_t>(Gu.nonZeros() + Gp.nonZeros() +
                                        2 * (A.nonZeros() + B.nonZeros() + D.nonZeros() + S.nonZeros()) +
                                        2 * mean_row.size()));
  append_block(trip, Gu, 0, 0);
  append_block(trip, Gp, o_ep, o_ep);
  append_block(trip, A, 0, o_u);
  append_block(trip, B, 0, o_p);
  append_block(trip, D, o_ep, o_u);
  append_block(trip, S, o_ep, o_p, -1.0);
  append_block(trip, A, o_u, 0, 1.0, true);
  append_block(trip, D, o_u, o_ep, 1.0, true);
  append_block(trip, B, o_p, 0, 1.0, true);
  append_block(trip, S, o_p, o_ep, -1.0, true);
  for (int j = 0; j < n_p(); ++j) {
    trip.emplace_back(o_p + j, o_l, mean_row[j]);
    trip.emplace_back(o_l, o_p + j, mean_row[j]);
  }
  SparseMatrix M(size(), size());
  M.setFromTriplets(trip.begin(), trip.end());
  M.makeCompressed();
  return M;
}

Vector BlockSystem::global_rhs() const {
  Vector b = Vector::Zero(size());
  b.head(n_eu()) = l_u;
  b.segment(n_eu(), n_ep()) = l_p;
  return b;
}

Vector BlockSystem::apply_N(const Vector& u, const Vector& p) const {
  Vector out(n_eu() + n_ep());
  out.head(n_eu()) = A * u + B * p;
  out.tail(n_ep()) = D * u - S * p;
  return out;
}

Vector BlockSystem::apply_Nt(const Vector& e_u, const Vector& e_p) const {
  Vector out(n_u() + n_p());
  out.head(n_u()) = A.transpose() * e_u + D.transpose() * e_p;
  out.tail(n_p()) = B.transpose() * e_u - S.transpose() * e_p;
  return out;
}

Vector SaddleSolution::stacked() const {
  Vector x(e_u.size() + e_p.size() + u.size() + p.size() + 1);
  x << e_u, e_p, u, p, multiplier;
  return x;
}

BlockSystem build_block_system(const SpacePair& test, const SpacePair& trial, const SparseForm& Gu,
                               const SparseForm& Gp, const SparseForm& A, const SparseForm& B, const SparseForm& D,
                               const std::optional<SparseForm>& S, const Vector& l_u, const Vector& l_p) {
  const int nv = test.velocity->num_dofs(), nq = test.pressure->num_dofs();
  const int nu = trial.velocity->num_dofs(), np = trial.pressure->num_dofs();
  for (const auto* s : {&test.pressure, &trial.velocity, &trial.pressure}) {
    if (!(*s)->same_mesh(*test.velocity)) throw std::invalid_argument("build_block_system: spaces on different meshes");
  }
  check_dims(Gu.matrix.rows() == nv && Gu.matrix.cols() == nv, "G_u");
  check_dims(Gp.matrix.rows() == nq && Gp.matrix.cols() == nq, "G_p");
  check_dims(A.matrix.rows() == nv && A.matrix.cols() == nu, "A");
  check_dims(B.matrix.rows() == nv && B.matrix.cols() == np, "B");
  check_dims(D.matrix.rows() == nq && D.matrix.cols() == nu, "D");
  check_dims(l_u.size() == nv, "l_u");
  check_dims(l_p.size() == nq, "l_p");
  if (S) check_dims(S->matrix.rows() == nq && S->matrix.cols() == np, "S");

  BlockSystem sys;
  sys.test = test;
  sys.trial = trial;
  sys.Gu = Gu.matrix;
  sys.Gp = Gp.matrix;
  sys.A = A.matrix;
  sys.B = B.matrix;
  sys.D = D.matrix;
  sys.S = S ? S->matrix : SparseMatrix(nq, np);
  sys.mean_row = basis_integrals(*trial.pressure);
  sys.l_u = l_u;
  sys.l_p = l_p;
  sys.embed_u = embedding_matrix(*trial.velocity, *test.velocity);
  sys.embed_p = embedding_matrix(*trial.pressure, *test.pressure);
  return sys;
}

BlockSystem assemble_block_system(const SpacePair& test, const SpacePair& trial, const ProblemData& data,
                                  const FormParameters& params) {
  std::optional<SparseForm> S;
  // Continuous trial pressures have no interior jumps, so s_h vanishes identically.
  if (trial.pressure->is_broken()) S = assemble_s(test.pressure, trial.pressure);
  return build_block_system(test, trial, assemble_gram_velocity(test.velocity, params),
                            assemble_gram_pressure(test.pressure), assemble_a(test.velocity, trial.velocity, params),
                            assemble_b(test.velocity, trial.pressure), assemble_d(test.pressure, trial.velocity), S,
                            assemble_rhs(test.velocity, data, params), assemble_pressure_rhs(test.pressure, data));
}

namespace {

double rel(double num, double den) { return den > 0.0 ? num / den : num; }

}  // namespace

SaddleSolution solve_direct(const BlockSystem& system) {
  // Factor [G N; N' -eps I] (quasi-definite, so LDL' needs no pivoting) after a
  // symmetric diagonal scaling, and refine against the exact matrix. The mean
  // constraint is restored afterwards: constant trial pressures span the kernel of N.
  const int ne = system.n_eu() + system.n_ep();
  const int n = ne + system.n_u() + system.n_p();
  const SparseMatrix M = system.global_matrix();
  const SparseMatrix K = M.topLeftCorner(n, n);
  const Vector b = system.global_rhs();
  const Vector bk = b.head(n);

  Vector scale(n);
  for (int i = 0; i < ne; ++i) scale[i] = 1.0 / std::sqrt(std::max(K.coeff(i, i), 1e-300));
  Vector colsq = Vector::Zero(n);
  for (int j = ne; j < n; ++j)
    for (SparseMatrix::InnerIterator it(K, j); it; ++it)
      if (it.row() < ne) colsq[j] += std::pow(it.value() * scale[it.row()], 2);
  for (int j = ne; j < n; ++j) scale[j] = colsq[j] > 0.0 ? 1.0 / std::sqrt(colsq[j]) : 1.0;
  const auto D = scale.asDiagonal();

  SparseMatrix Kr = D * K * D;
  SparseMatrix reg(n, n);
  reg.reserve(Eigen::VectorXi::Constant(n, 1));
  for (int i = ne; i < n; ++i) reg.insert(i, i) = -1e-13;
  Kr += reg;

  SolverDiagnostics diag;
  Factor ldl;
  ldl.setMode(Eigen::CholmodLDLt);
  ldl.compute(Kr);
  if (ldl.info() != Eigen::Success) {
    diag.message = "zero pivot at column " + std::to_string(ldl.failed_column());
    throw SolverError("solve_direct: LDL' factorization failed: " + diag.message, diag);
  }
  const double bnorm = bk.norm();
  Vector x = Vector::Zero(n);
  double res = 1.0;
  for (int it = 0; it < 30; ++it) {
    const Vector r = bk - K * x;
    const double prev = res;
    res = rel(r.norm(), bnorm);
    diag.history.push_back(res);
    if (res <= 1e-13 || (it >= 3 && res > 0.5 * prev)) break;
    x += D * ldl.solve(D * r);
    diag.outer_iterations = it + 1;
  }
  if (!std::isfinite(res) || res > 1e-10) {
    diag.residual = res;
    diag.message = "iterative refinement stalled at relative residual " + std::to_string(res) +
                   " (system singular or ill-conditioned)";
    throw SolverError("solve_direct: " + diag.message, diag);
  }
  SaddleSolution sol;
  sol.e_u = x.head(system.n_eu());
  sol.e_p = x.segment(system.n_eu(), system.n_ep());
  sol.u = x.segment(ne, system.n_u());
  sol.p = x.tail(system.n_p());
  sol.p.array() -= system.mean_row.dot(sol.p) / system.mean_row.sum();
  const Vector bt = system.B.transpose() * sol.e_u - system.S.transpose() * sol.e_p;
  sol.multiplier = -system.mean_row.dot(bt) / system.mean_row.squaredNorm();
  diag.residual = rel((M * sol.stacked() - b).norm(), b.norm());
  diag.converged = true;
  sol.diagnostics = diag;
  return sol;
}

namespace {

// Applies the Schur complement N' F^{-1} N and the block preconditioner.
class SchurOperator {
 public:
  SchurOperator(const BlockSystem& sys, const Cholesky& fu, const Cholesky& fp, const Cholesky& k, Vector q_diag)
      : sys_(sys), fu_(fu), fp_(fp), k_(k), q_diag_(std::move(q_diag)) {}

  Vector apply(const Vector& s) const {
    const Vector ns = sys_.apply_N(s.head(sys_.n_u()), s.tail(sys_.n_p()));
    const Vector yu = fu_.solve(ns.head(sys_.n_eu()));
    const Vector yp = fp_.solve(ns.tail(sys_.n_ep()));
    return sys_.apply_Nt(yu, yp);
  }

  Vector precondition(const Vector& r) const {
    Vector z(r.size());
    z.head(sys_.n_u()) = k_.solve(r.head(sys_.n_u()));
    z.tail(sys_.n_p()) = r.tail(sys_.n_p()).cwiseQuotient(q_diag_);
    return z;
  }

 private:
  const BlockSystem& sys_;
  const Cholesky& fu_;
  const Cholesky& fp_;
  const Cholesky& k_;
  Vector q_diag_;
};

// Preconditioned CG; returns iterations used. x holds the initial guess.
int pcg(const SchurOperator& op, const Vector& rhs, Vector& x, double tol, int max_iter, bool& converged) {
  const double bnorm = rhs.norm();
  converged = false;
  if (bnorm == 0.0) {
    x.setZero();
    converged = true;
    return 0;
  }
  Vector r = rhs - op.apply(x);
  if (r.norm() <= tol * bnorm) {
    converged = true;
    return 0;
  }
  Vector z = op.precondition(r);
  Vector d = z;
  double rz = r.dot(z);
  for (int it = 1; it <= max_iter; ++it) {
    const Vector ad = op.apply(d);
    const double dad = d.dot(ad);
    if (!(dad > 0.0)) return it;
    const double alpha = rz / dad;
    x += alpha * d;
    r -= alpha * ad;
    if (r.norm() <= tol * bnorm) {
      converged = true;
      return it;
    }
    z = op.precondition(r);
    const double rz_new = r.dot(z);
    d = z + (rz_new / rz) * d;
    rz = rz_new;
  }
  return max_iter;
}

}  // namespace

SaddleSolution solve_fixed_point(const BlockSystem& system, const FixedPointOptions& options) {
  Cholesky fu, fp, kchol;
  factorize(fu, system.Gu, "G_u");
  factorize(fp, system.Gp, "G_p");
  // Velocity preconditioner: the velocity Gram restricted to the trial space.
  const SparseMatrix K = system.embed_u.transpose() * system.Gu * system.embed_u;
  factorize(kchol, K, "trial velocity stiffness");
  const Vector q_diag = assemble_mass(system.trial.pressure).matrix.diagonal();
  const SchurOperator schur(system, fu, fp, kchol, q_diag);

  const SparseMatrix M = system.global_matrix();
  const Vector b = system.global_rhs();
  const double bnorm = b.norm();

  SaddleSolution sol;
  sol.e_u = Vector::Zero(system.n_eu());
  sol.e_p = Vector::Zero(system.n_ep());
  sol.u = options.initial_u.value_or(Vector::Zero(system.n_u()));
  sol.p = options.initial_p.value_or(Vector::Zero(system.n_p()));
  if (sol.u.size() != system.n_u() || sol.p.size() != system.n_p()) {
    throw std::invalid_argument("solve_fixed_point: initial guess has the wrong size");
  }
  const double mass = system.mean_row.sum();
  auto& diag = sol.diagnostics;

  for (int it = 1; it <= options.max_iter; ++it) {
    // Defect of [G N; N' 0] at the current iterate.
    const Vector ns = system.apply_N(sol.u, sol.p);
    Vector r_e(system.n_eu() + system.n_ep());
    r_e.head(system.n_eu()) = system.l_u - system.Gu * sol.e_u;
    r_e.tail(system.n_ep()) = system.l_p - system.Gp * sol.e_p;
    r_e -= ns;
    const Vector r_s = -system.apply_Nt(sol.e_u, sol.e_p);

    // s-update: S ds = N' F^{-1} r_e - r_s ; e-update: de = F^{-1}(r_e - N ds).
    const Vector fre_u = fu.solve(r_e.head(system.n_eu()));
    const Vector fre_p = fp.solve(r_e.tail(system.n_ep()));
    const Vector schur_rhs = system.apply_Nt(fre_u, fre_p) - r_s;
    Vector ds = Vector::Zero(system.n_u() + system.n_p());
    bool inner_ok = false;
    const int inner = pcg(schur, schur_rhs, ds, options.inner_tol, options.inner_max_iter, inner_ok);
    diag.inner_iterations += inner;
    diag.inner_history.push_back(inner);

    const Vector nds = system.apply_N(ds.head(system.n_u()), ds.tail(system.n_p()));
    sol.u += ds.head(system.n_u());
    sol.p += ds.tail(system.n_p());
    sol.e_u += fu.solve(Vector(r_e.head(system.n_eu()) - nds.head(system.n_eu())));
    sol.e_p += fp.solve(Vector(r_e.tail(system.n_ep()) - nds.tail(system.n_ep())));

    // Constant trial pressures lie in the kernel of N; pin the mean.
    sol.p.array() -= system.mean_row.dot(sol.p) / mass;
    const Vector bt = system.B.transpose() * sol.e_u - system.S.transpose() * sol.e_p;
    sol.multiplier = -system.mean_row.dot(bt) / system.mean_row.squaredNorm();

    const double res = rel((M * sol.stacked() - b).norm(), bnorm);
    diag.history.push_back(res);
    diag.outer_iterations = it;
    diag.residual = res;
    if (res <= options.tol) {
      diag.converged = true;
      return sol;
    }
    if (!std::isfinite(res)) break;
    if (!inner_ok && inner >= options.inner_max_iter) diag.message = "inner PCG hit its iteration cap";
  }
  std::ostringstream msg;
  msg << "solve_fixed_point: no convergence after " << diag.outer_iterations << " iterations, residual "
      << diag.residual;
  if (!diag.message.empty()) msg << " (" << diag.message << ")";
  diag.message = msg.str();
  throw SolverError(msg.str(), diag);
}

DgSolution solve_dg_reference(const SpacePair& spaces, const ProblemData& data, const FormParameters& params) {
  if (!spaces.velocity->is_broken() || !spaces.pressure->is_broken()) {
    throw std::invalid_argument("solve_dg_reference: spaces must be broken");
  }
  const SparseMatrix A = assemble_a(spaces.velocity, spaces.velocity, params).matrix;
  const SparseMatrix B = assemble_b(spaces.velocity, spaces.pressure).matrix;
  const SparseMatrix D = assemble_d(spaces.pressure, spaces.velocity).matrix;
  const SparseMatrix S = assemble_s(spaces.pressure, spaces.pressure).matrix;
  const Vector m = basis_integrals(*spaces.pressure);
  const int nu = static_cast<int>(A.rows()), np = static_cast<int>(S.rows());
  Triplets trip;
  append_block(trip, A, 0, 0);
  append_block(trip, B, 0, nu);
  append_block(trip, D, nu, 0);
  append_block(trip, S, nu, nu, -1.0);
  for (int j = 0; j < np; ++j) {
    trip.emplace_back(nu + j, nu + np, m[j]);
    trip.emplace_back(nu + np, nu + j, m[j]);
  }
  SparseMatrix M(nu + np + 1, nu + np + 1);
  M.setFromTriplets(trip.begin(), trip.end());
  M.makeCompressed();
  Vector b = Vector::Zero(nu + np + 1);
  b.head(nu) = assemble_rhs(spaces.velocity, data, params);
  b.segment(nu, np) = assemble_pressure_rhs(spaces.pressure, data);
  Eigen::UmfPackLU<SparseMatrix> lu;
  lu.compute(M);
  if (lu.info() != Eigen::Success) {
    SolverDiagnostics diag;
    diag.message = "matrix is numerically singular";
    throw SolverError("solve_dg_reference: LU factorization failed: " + diag.message, diag);
  }
  Vector x = lu.solve(b);
  x += lu.solve(Vector(b - M * x));
  return {x.head(nu), x.segment(nu, np), x[nu + np]};
}

double triple_norm_sq(const BlockSystem& system, const Vector& v_test, const Vector& q_test) {
  return v_test.dot(system.Gu * v_test) + q_test.dot(system.Gp * q_test);
}

double triple_norm(const BlockSystem& system, const Vector& v_test, const Vector& q_test) {
  return std::sqrt(std::max(0.0, triple_norm_sq(system, v_test, q_test)));
}

double trial_triple_norm(const BlockSystem& system, const Vector& u_trial, const Vector& p_trial) {
  return triple_norm(system, system.embed_u * u_trial, system.embed_p * p_trial);
}

double relative_residual(const BlockSystem& system, const SaddleSolution& sol) {
  const Vector b = system.global_rhs();
  return rel((system.global_matrix() * sol.stacked() - b).norm(), b.norm());
}

double orthogonality_defect(const BlockSystem& system, const SaddleSolution& sol) {
  const Vector nt = system.apply_Nt(sol.e_u, sol.e_p);
  const double en = triple_norm(system, sol.e_u, sol.e_p);
  const double worst = nt.size() ? nt.cwiseAbs().maxCoeff() : 0.0;
  return en > 0.0 ? worst / en : worst;
}

void write_matrix_market(std::ostream& out, const SparseMatrix& m) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

}  // namespace asfem
