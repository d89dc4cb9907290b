#include "asfem/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <regex>
#include <stdexcept>

namespace asfem {

IndicatorField compute_indicators(const FieldCoefficients& e_u, const FieldCoefficients& e_p,
                                  const FormParameters& params) {
  const Mesh& mesh = e_u.space->mesh();
  const int k = std::max(e_u.space->degree(), e_p.space->degree());
  const auto crule = triangle_quadrature(cell_exactness(k));
  const auto erule = edge_quadrature(edge_exactness(k));
  const Eigen::MatrixX2d ref = crule.points;
  const Eigen::VectorXd t = erule.points.col(0);

  Vector sq = Vector::Zero(static_cast<Eigen::Index>(mesh.num_cells()));
  for (CellIndex K = 0; K < static_cast<CellIndex>(mesh.num_cells()); ++K) {
    const double det = std::abs(CellGeometry(mesh, K).det);
    const auto g = gradient_on_cell(e_u, K, ref);
    const Eigen::MatrixXd p = evaluate_on_cell(e_p, K, ref);
    double acc = 0.0;
    for (Eigen::Index q = 0; q < ref.rows(); ++q) {
      acc += crule.weights[q] * (g[0].row(q).squaredNorm() + g[1].row(q).squaredNorm() + p(q, 0) * p(q, 0));
    }
    sq[K] += det * acc;
  }
  const auto& faces = mesh.faces();
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& face = faces[f];
    const double h = face.diameter;
    const Eigen::MatrixXd uj = face_jump(e_u, static_cast<int>(f), t);
    double u_acc = 0.0;
    for (Eigen::Index q = 0; q < t.size(); ++q) u_acc += erule.weights[q] * uj.row(q).squaredNorm();
    double value = params.penalty(h) * h * u_acc;
    if (face.is_boundary()) {
      sq[face.plus] += value;
      continue;
    }
    const Eigen::MatrixXd pj = face_jump(e_p, static_cast<int>(f), t);
    double p_acc = 0.0;
    for (Eigen::Index q = 0; q < t.size(); ++q) p_acc += erule.weights[q] * pj(q, 0) * pj(q, 0);
    value += h * h * p_acc;
    sq[face.plus] += 0.5 * value;
    sq[face.minus] += 0.5 * value;
  }
  IndicatorField out;
  out.values = sq.cwiseMax(0.0).cwiseSqrt();
  out.total = std::sqrt(std::max(0.0, sq.sum()));
  return out;
}

IndicatorField compute_indicators(const BlockSystem& system, const SaddleSolution& solution,
                                  const FormParameters& params) {
  return compute_indicators(FieldCoefficients(system.test.velocity, solution.e_u),
                            FieldCoefficients(system.test.pressure, solution.e_p), params);
}

std::set<CellIndex> dorfler_mark(const Vector& indicators, double theta, DorflerMode mode) {
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("dorfler_mark: theta must lie in (0, 1]");
  const auto n = static_cast<CellIndex>(indicators.size());
  std::vector<CellIndex> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](CellIndex a, CellIndex b) { return indicators[a] > indicators[b]; });
  auto weight = [&](CellIndex K) {
    const double e = std::max(0.0, indicators[K]);
    return mode == DorflerMode::Squared ? e * e : e;
  };
  double total = 0.0;
  for (CellIndex K = 0; K < n; ++K) total += weight(K);
  std::set<CellIndex> marked;
  if (!(total > 0.0)) return marked;
  const double target = (mode == DorflerMode::Squared ? theta * theta : theta) * total;
  double sum = 0.0;
  for (CellIndex K : order) {
    if (weight(K) <= 0.0) break;
    marked.insert(K);
    sum += weight(K);
    if (sum >= target) break;
  }
  return marked;
}

std::string Discretization::label() const {
  if (discontinuous) return "DG" + std::to_string(velocity_degree);
  return "P" + std::to_string(velocity_degree) + "P" + std::to_string(pressure_degree);
}

Discretization Discretization::parse(const std::string& label) {
  static const std::regex dg("DG([1-4])"), pp("P([1-4])P([0-4])");
  std::smatch m;
  if (std::regex_match(label, m, dg)) {
    const int k = std::stoi(m[1]);
    return {k, k, true};
  }
  if (std::regex_match(label, m, pp)) {
    const int k = std::stoi(m[1]), r = std::stoi(m[2]);
    if (r > k) throw std::invalid_argument("trial label " + label + ": pressure degree exceeds velocity degree");
    return {k, r, false};
  }
  throw std::invalid_argument("invalid trial label '" + label + "' (expected DGk or PkPr with 1<=k<=4, r<=k)");
}

SpacePair Discretization::trial_spaces(std::shared_ptr<const Mesh> mesh) const {
  if (discontinuous) return test_spaces(std::move(mesh));
  const auto p_cont = pressure_degree == 0 ? Continuity::Broken : Continuity::Continuous;
  return {build_space(mesh, velocity_degree, Continuity::Continuous, 2),
          build_space(mesh, pressure_degree, p_cont, 1)};
}

SpacePair Discretization::test_spaces(std::shared_ptr<const Mesh> mesh) const {
  return {build_space(mesh, test_degree(), Continuity::Broken, 2),
          build_space(mesh, test_degree(), Continuity::Broken, 1)};
}

FieldCoefficients transfer(const FieldCoefficients& field, SpacePtr target) {
  const Mesh& source = field.space->mesh();
  const Mesh& mesh = target->mesh();
  if (target->components() != field.space->components()) {
    throw std::invalid_argument("transfer: component count mismatch");
  }
  const bool same = field.space->same_mesh(*target);
  const auto& parent = mesh.parent();
  const Eigen::MatrixX2d nodes = target->basis().nodes();
  const int comps = target->components();
  FieldCoefficients out(target);
  for (CellIndex K = 0; K < static_cast<CellIndex>(mesh.num_cells()); ++K) {
    const CellIndex P = same ? K : parent[K];
    if (P < 0 || P >= static_cast<CellIndex>(source.num_cells())) {
      throw std::invalid_argument("transfer: target mesh is not a refinement of the source mesh");
    }
    const Eigen::MatrixX2d x = CellGeometry(mesh, K).map(nodes);
    const Eigen::MatrixXd vals = evaluate_on_cell(field, P, CellGeometry(source, P).pull_back(x));
    const auto dofs = target->cell_dofs(K);
    for (Eigen::Index i = 0; i < nodes.rows(); ++i)
      for (int c = 0; c < comps; ++c) out.values[dofs[comps * i + c]] = vals(i, c);
  }
  return out;
}

LoopResult adaptive_loop(const BenchmarkCase& bcase, const LoopConfig& config, const Mesh& initial) {
  config.params.validate();
  if (config.levels < 1) throw std::invalid_argument("adaptive_loop: need at least one level");
  if (config.refinement == Refinement::Adaptive && !(config.theta > 0.0 && config.theta <= 1.0)) {
    throw std::invalid_argument("adaptive_loop: theta must lie in (0, 1]");
  }
  LoopResult result;
  auto mesh = std::make_shared<const Mesh>(initial);
  std::optional<FieldCoefficients> prev_u, prev_p;

  for (int level = 0; level < config.levels; ++level) {
    const SpacePair trial = config.discretization.trial_spaces(mesh);
    const SpacePair test = config.discretization.test_spaces(mesh);
    const BlockSystem system = assemble_block_system(test, trial, bcase.data, config.params);

    SaddleSolution sol;
    try {
      if (config.solver == SolverKind::Direct) {
        sol = solve_direct(system);
      } else {
        FixedPointOptions opts = config.fixed_point;
        if (config.warm_start && prev_u) {
          opts.initial_u = transfer(*prev_u, trial.velocity).values;
          opts.initial_p = transfer(*prev_p, trial.pressure).values;
        }
        sol = solve_fixed_point(system, opts);
      }
    } catch (const SolverError& e) {
      result.failure = "level " + std::to_string(level) + ": " + e.what();
      break;
    }

    const IndicatorField ind = compute_indicators(system, sol, config.params);
    const FieldCoefficients u_h(trial.velocity, sol.u), p_h(trial.pressure, sol.p);

    ConvergenceRecord rec;
    rec.level = level;
    rec.ndof_u = system.n_u();
    rec.ndof_p = system.n_p();
    rec.ndof_test = system.n_eu() + system.n_ep();
    rec.ndof_total = rec.ndof_u + rec.ndof_p + rec.ndof_test;
    rec.h_max = mesh->h_max();
    if (bcase.has_exact()) {
      const ErrorNorms err = error_norms(u_h, p_h, bcase, config.params);
      rec.err_u_L2 = err.u_L2;
      rec.err_p_L2 = err.p_L2;
      rec.err_triple = err.triple;
    }
    rec.est_triple = ind.total;
    if (config.solver == SolverKind::FixedPoint) rec.solver_iters = sol.diagnostics.inner_iterations;

    const bool last = level + 1 == config.levels;
    std::set<CellIndex> marked;
    if (!last && config.refinement == Refinement::Adaptive) {
      marked = dorfler_mark(ind.values, config.theta, config.mode);
      rec.marked_cells = static_cast<int>(marked.size());
    }
    result.records.push_back(rec);

    if (config.on_level) {
      LevelResult lr;
      lr.level = level;
      lr.mesh = mesh;
      lr.system = &system;
      lr.solution = &sol;
      lr.indicators = &ind;
      lr.marked = marked;
      lr.record = rec;
      config.on_level(lr);
    }
    if (last) break;
    if (config.refinement == Refinement::Adaptive && marked.empty()) break;  // estimator vanished

    prev_u = u_h;
    prev_p = p_h;
    mesh = std::make_shared<const Mesh>(config.refinement == Refinement::Uniform ? refine_uniform(*mesh)
                                                                                 : bisect(*mesh, marked));
  }
  compute_eoc(result.records,
              config.refinement == Refinement::Uniform ? EocMeasure::MeshSize : EocMeasure::Dofs);
  result.completed = result.failure.empty();
  return result;
}

}  // namespace asfem
