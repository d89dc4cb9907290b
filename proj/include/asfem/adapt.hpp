#pragma once

#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "asfem/bench.hpp"
#include "asfem/solver.hpp"

namespace asfem {

/// Per-cell indicators E_K and the global total |||(e_u, e_p)|||.
struct IndicatorField {
  Vector values;
  double total = 0.0;
};

/// E_K^2 = cell gradient and mass terms of (e_u, e_p) plus half of each
/// interior face's jump terms and all of each boundary face's terms.
IndicatorField compute_indicators(const FieldCoefficients& e_u, const FieldCoefficients& e_p,
                                  const FormParameters& params);
IndicatorField compute_indicators(const BlockSystem& system, const SaddleSolution& solution,
                                  const FormParameters& params);

enum class DorflerMode { Squared, Linear };

/// Smallest set of largest indicators whose cumulated squares reach
/// theta^2 of the total (Linear: plain values against theta times the sum).
/// Ties are broken by cell index.
std::set<CellIndex> dorfler_mark(const Vector& indicators, double theta, DorflerMode mode = DorflerMode::Squared);

/// Trial space pair label: DGk (broken, trial = test) or PkPr (continuous
/// velocity of degree k, pressure of degree r <= k, broken when r = 0).
struct Discretization {
  int velocity_degree = 1;
  int pressure_degree = 1;
  bool discontinuous = false;

  int test_degree() const { return velocity_degree; }
  std::string label() const;
  static Discretization parse(const std::string& label);

  SpacePair trial_spaces(std::shared_ptr<const Mesh> mesh) const;
  SpacePair test_spaces(std::shared_ptr<const Mesh> mesh) const;
};

enum class Refinement { Uniform, Adaptive };
enum class SolverKind { Direct, FixedPoint };

struct LevelResult {
  int level = 0;
  std::shared_ptr<const Mesh> mesh;
  const BlockSystem* system = nullptr;
  const SaddleSolution* solution = nullptr;
  const IndicatorField* indicators = nullptr;
  std::set<CellIndex> marked;
  ConvergenceRecord record;
};

struct LoopConfig {
  Discretization discretization;
  FormParameters params;
  Refinement refinement = Refinement::Adaptive;
  double theta = 0.5;
  DorflerMode mode = DorflerMode::Squared;
  int levels = 4;
  SolverKind solver = SolverKind::Direct;
  FixedPointOptions fixed_point;
  /// Seed the iterative solver with the previous level's solution.
  bool warm_start = true;
  std::function<void(const LevelResult&)> on_level;
};

struct LoopResult {
  std::vector<ConvergenceRecord> records;
  bool completed = false;
  std::string failure;
};

/// Nodal transfer of a field onto a space over a refined mesh, using the
/// parent map of the refined mesh.
FieldCoefficients transfer(const FieldCoefficients& field, SpacePtr target);

/// Solve, estimate, mark and refine for config.levels levels starting at
/// `initial`. A solver failure stops the loop and keeps the earlier records.
LoopResult adaptive_loop(const BenchmarkCase& bcase, const LoopConfig& config, const Mesh& initial);

}  // namespace asfem
