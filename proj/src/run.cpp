#include "asfem/run.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace asfem {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("invalid number for " + key + ": '" + v + "'");
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("invalid integer for " + key + ": '" + v + "'");
  return out;
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

std::string cell(const std::optional<double>& v) { return v ? number(*v) : ""; }
std::string cell(const std::optional<int>& v) { return v ? std::to_string(*v) : ""; }

std::string with_level(const std::string& prefix, int level, const char* ext) {
  return prefix + "_level" + std::to_string(level) + ext;
}

}  // namespace

void apply_setting(RunConfig& c, const std::string& raw_key, const std::string& raw_value) {
  std::string key = trim(raw_key);
  std::replace(key.begin(), key.end(), '-', '_');
  const std::string v = unquote(trim(raw_value));
  if (key == "case") {
    c.case_id = v;
  } else if (key == "trial") {
    c.trial = v;
  } else if (key == "beta") {
    c.beta = to_double(key, v);
  } else if (key == "eta") {
    if (v == "auto") c.eta.reset();
    else c.eta = to_double(key, v);
  } else if (key == "refine") {
    if (v == "uniform") c.refinement = Refinement::Uniform;
    else if (v == "adaptive") c.refinement = Refinement::Adaptive;
    else throw ConfigError("refine must be 'uniform' or 'adaptive', got '" + v + "'");
  } else if (key == "dorfler") {
    c.theta = to_double(key, v);
  } else if (key == "dorfler_mode") {
    if (v == "squared") c.mode = DorflerMode::Squared;
    else if (v == "linear") c.mode = DorflerMode::Linear;
    else throw ConfigError("dorfler_mode must be 'squared' or 'linear', got '" + v + "'");
  } else if (key == "levels") {
    c.levels = to_int(key, v);
  } else if (key == "initial") {
    c.resolution = to_int(key, v);
  } else if (key == "mesh") {
    c.mesh_path = v;
  } else if (key == "solver") {
    if (v == "direct") c.solver = SolverKind::Direct;
    else if (v == "fixed_point" || v == "fixed-point") c.solver = SolverKind::FixedPoint;
    else throw ConfigError("solver must be 'direct' or 'fixed_point', got '" + v + "'");
  } else if (key == "tol") {
    c.tol = to_double(key, v);
  } else if (key == "inner_tol") {
    c.inner_tol = to_double(key, v);
  } else if (key == "max_iter") {
    c.max_iter = to_int(key, v);
  } else if (key == "csv") {
    c.csv_path = v;
  } else if (key == "vtk") {
    c.vtk_prefix = v;
  } else if (key == "matrix") {
    c.matrix_prefix = v;
  } else {
    throw ConfigError("unknown setting '" + raw_key + "'");
  }
}

RunConfig parse_config(std::istream& in, RunConfig base) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(base, line.substr(0, eq), line.substr(eq + 1));
  }
  return base;
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  return parse_config(in, std::move(base));
}

void validate(const RunConfig& c) {
  try {
    make_case(c.case_id);
    Discretization::parse(c.trial);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.levels < 1) throw ConfigError("levels must be at least 1");
  if (c.resolution && *c.resolution < 1) throw ConfigError("initial resolution must be at least 1");
  if (c.theta && !(*c.theta > 0.0 && *c.theta <= 1.0)) throw ConfigError("dorfler fraction must lie in (0, 1]");
  if (!(c.beta >= 1.0)) throw ConfigError("beta must be >= 1");
  if (c.eta && !(*c.eta > 0.0)) throw ConfigError("eta must be positive");
  if (!(c.tol > 0.0) || !(c.inner_tol > 0.0)) throw ConfigError("tolerances must be positive");
  if (c.max_iter < 1) throw ConfigError("max_iter must be at least 1");
}

FormParameters resolve_parameters(const RunConfig& c) {
  const Discretization disc = Discretization::parse(c.trial);
  FormParameters p = FormParameters::for_degree(disc.test_degree(), c.beta);
  if (c.eta) p.eta = *c.eta;
  return p;
}

void write_csv(std::ostream& out, const std::vector<ConvergenceRecord>& records,
               const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) out << (i ? "," : "") << kCsvColumns[i];
  out << '\n';
  for (const auto& r : records) {
    out << r.level << ',' << r.ndof_u << ',' << r.ndof_p << ',' << r.ndof_test << ',' << r.ndof_total << ','
        << number(r.h_max) << ',' << cell(r.err_u_L2) << ',' << cell(r.err_p_L2) << ',' << cell(r.err_triple) << ','
        << number(r.est_triple) << ',' << cell(r.eoc_u) << ',' << cell(r.eoc_p) << ',' << cell(r.eoc_triple) << ','
        << cell(r.marked_cells) << ',' << cell(r.solver_iters) << '\n';
  }
}

void write_vtk(std::ostream& out, const FieldCoefficients& velocity, const FieldCoefficients& pressure,
               const Vector& indicators, const std::string& title) {
  const Mesh& mesh = velocity.space->mesh();
  const auto nv = mesh.num_vertices(), nc = mesh.num_cells();
  if (static_cast<std::size_t>(indicators.size()) != nc) throw std::invalid_argument("write_vtk: indicator size");

  // Vertex values averaged over incident cells (broken fields may differ per cell).
  Eigen::MatrixX2d u = Eigen::MatrixX2d::Zero(static_cast<Eigen::Index>(nv), 2);
  Vector p = Vector::Zero(static_cast<Eigen::Index>(nv));
  Vector count = Vector::Zero(static_cast<Eigen::Index>(nv));
  Eigen::MatrixX2d corners(3, 2);
  corners << 0, 0, 1, 0, 0, 1;
  for (CellIndex K = 0; K < static_cast<CellIndex>(nc); ++K) {
    const Eigen::MatrixXd uv = evaluate_on_cell(velocity, K, corners);
    const Eigen::MatrixXd pv = evaluate_on_cell(pressure, K, corners);
    for (int i = 0; i < 3; ++i) {
      const auto v = mesh.cell(K)[i];
      u.row(v) += uv.row(i);
      p[v] += pv(i, 0);
      count[v] += 1.0;
    }
  }
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << nv << " double\n";
  out.precision(12);
  for (const auto& x : mesh.vertices()) out << x.x() << ' ' << x.y() << " 0\n";
  out << "CELLS " << nc << ' ' << 4 * nc << '\n';
  for (const auto& c : mesh.cells()) out << "3 " << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
  out << "CELL_TYPES " << nc << '\n';
  for (std::size_t K = 0; K < nc; ++K) out << "5\n";
  out << "POINT_DATA " << nv << "\nVECTORS velocity double\n";
  for (Eigen::Index v = 0; v < static_cast<Eigen::Index>(nv); ++v) {
    const double w = count[v] > 0 ? 1.0 / count[v] : 0.0;
    out << w * u(v, 0) << ' ' << w * u(v, 1) << " 0\n";
  }
  out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (Eigen::Index v = 0; v < static_cast<Eigen::Index>(nv); ++v) {
    out << (count[v] > 0 ? p[v] / count[v] : 0.0) << '\n';
  }
  out << "CELL_DATA " << nc << "\nSCALARS indicator double 1\nLOOKUP_TABLE default\n";
  for (Eigen::Index K = 0; K < indicators.size(); ++K) out << indicators[K] << '\n';
}

Study prepare_study(const RunConfig& config) {
  validate(config);
  Study st;
  st.bcase = make_case(config.case_id);
  LoopConfig& loop = st.loop;
  loop.discretization = Discretization::parse(config.trial);
  loop.params = resolve_parameters(config);
  loop.refinement = config.refinement;
  loop.theta = config.theta.value_or(st.bcase.default_theta);
  loop.mode = config.mode;
  loop.levels = config.levels;
  loop.solver = config.solver;
  loop.fixed_point.tol = config.tol;
  loop.fixed_point.inner_tol = config.inner_tol;
  loop.fixed_point.max_iter = config.max_iter;
  st.initial = config.mesh_path.empty()
                   ? st.bcase.initial_mesh(config.resolution.value_or(st.bcase.default_resolution))
                   : load_mesh(config.mesh_path);
  return st;
}

int run(const RunConfig& config, std::ostream& log) {
  Study st;
  std::ofstream csv_file;
  try {
    st = prepare_study(config);
    if (config.csv_path != "-") {
      csv_file.open(config.csv_path);
      if (!csv_file) throw ConfigError("cannot write CSV file " + config.csv_path);
    }
    for (const auto* prefix : {&config.vtk_prefix, &config.matrix_prefix}) {
      if (prefix->empty()) continue;
      const auto dir = std::filesystem::path(*prefix).parent_path();
      if (!dir.empty() && !std::filesystem::is_directory(dir)) {
        throw ConfigError("output directory does not exist: " + dir.string());
      }
    }
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  const BenchmarkCase& bcase = st.bcase;
  LoopConfig& loop = st.loop;
  std::string io_error;
  loop.on_level = [&](const LevelResult& lr) {
    log << "level " << lr.level << ": cells=" << lr.mesh->num_cells() << " ndof_total=" << lr.record.ndof_total
        << " est=" << number(lr.record.est_triple);
    if (lr.record.err_triple) log << " err=" << number(*lr.record.err_triple);
    log << '\n';
    if (!config.vtk_prefix.empty()) {
      std::ofstream out(with_level(config.vtk_prefix, lr.level, ".vtk"));
      write_vtk(out, FieldCoefficients(lr.system->trial.velocity, lr.solution->u),
                FieldCoefficients(lr.system->trial.pressure, lr.solution->p), lr.indicators->values,
                bcase.id + " " + config.trial + " level " + std::to_string(lr.level));
      if (!out) io_error = "failed writing VTK snapshot";
    }
    if (!config.matrix_prefix.empty()) {
      std::ofstream out(with_level(config.matrix_prefix, lr.level, ".mtx"));
      write_matrix_market(out, lr.system->global_matrix());
      if (!out) io_error = "failed writing matrix dump";
    }
  };

  const LoopResult result = adaptive_loop(bcase, loop, st.initial);

  std::ostringstream eta_note;
  eta_note << "eta=" << number(loop.params.eta) << (config.eta ? "" : " (auto: 10*(k+1)^2)")
           << " beta=" << number(loop.params.beta);
  std::vector<std::string> comments = {
      "case=" + bcase.id + " trial=" + loop.discretization.label() +
          " refine=" + (loop.refinement == Refinement::Uniform ? "uniform" : "adaptive") +
          " solver=" + (loop.solver == SolverKind::Direct ? "direct" : "fixed_point"),
      eta_note.str()};
  if (loop.refinement == Refinement::Adaptive) comments.push_back("dorfler=" + number(loop.theta));
  if (!result.completed) comments.push_back("incomplete: " + result.failure);
  std::ostream& csv = config.csv_path == "-" ? std::cout : csv_file;
  write_csv(csv, result.records, comments);
  csv.flush();

  if (!result.completed) {
    log << "error: " << result.failure << '\n';
    return kExitSolver;
  }
  if (!io_error.empty() || !csv) {
    log << "error: " << (io_error.empty() ? "failed writing CSV" : io_error) << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace asfem
