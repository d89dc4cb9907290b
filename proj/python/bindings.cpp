#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "asfem/run.hpp"

namespace py = pybind11;
using namespace asfem;

namespace {

RunConfig to_config(const py::dict& settings) {
  RunConfig c;
  for (const auto& [key, value] : settings) apply_setting(c, py::str(key), py::str(value));
  return c;
}

py::object maybe(const std::optional<double>& v) { return v ? py::cast(*v) : py::none(); }
py::object maybe(const std::optional<int>& v) { return v ? py::cast(*v) : py::none(); }

py::dict as_dict(const ConvergenceRecord& r) {
  py::dict d;
  d["level"] = r.level;
  d["ndof_u"] = r.ndof_u;
  d["ndof_p"] = r.ndof_p;
  d["ndof_test"] = r.ndof_test;
  d["ndof_total"] = r.ndof_total;
  d["h_max"] = r.h_max;
  d["err_u_L2"] = maybe(r.err_u_L2);
  d["err_p_L2"] = maybe(r.err_p_L2);
  d["err_triple"] = maybe(r.err_triple);
  d["est_triple"] = r.est_triple;
  d["eoc_u"] = maybe(r.eoc_u);
  d["eoc_p"] = maybe(r.eoc_p);
  d["eoc_triple"] = maybe(r.eoc_triple);
  d["marked_cells"] = maybe(r.marked_cells);
  d["solver_iters"] = maybe(r.solver_iters);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Adaptive stabilized finite elements for 2D Stokes flow.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.attr("CSV_COLUMNS") = kCsvColumns;

  m.def(
      "study",
      [](const py::dict& settings) {
        const Study st = prepare_study(to_config(settings));
        LoopResult res;
        {
          py::gil_scoped_release release;
          res = adaptive_loop(st.bcase, st.loop, st.initial);
        }
        py::list records;
        for (const auto& r : res.records) records.append(as_dict(r));
        py::dict out;
        out["records"] = records;
        out["completed"] = res.completed;
        out["failure"] = res.failure;
        return out;
      },
      py::arg("settings"));

  m.def(
      "run",
      [](const py::dict& settings) {
        const RunConfig c = to_config(settings);
        std::ostringstream log;
        int code;
        {
          py::gil_scoped_release release;
          code = run(c, log);
        }
        return py::make_tuple(code, log.str());
      },
      py::arg("settings"));

  m.def(
      "dorfler_mark",
      [](const std::vector<double>& indicators, double theta, const std::string& mode) {
        if (mode != "squared" && mode != "linear") throw ConfigError("mode must be squared or linear");
        const Vector v = Eigen::Map<const Vector>(indicators.data(), static_cast<Eigen::Index>(indicators.size()));
        const auto marked = dorfler_mark(v, theta, mode == "squared" ? DorflerMode::Squared : DorflerMode::Linear);
        return std::vector<CellIndex>(marked.begin(), marked.end());
      },
      py::arg("indicators"), py::arg("theta"), py::arg("mode") = "squared");

  m.def("eoc", &eoc, py::arg("e0"), py::arg("e1"), py::arg("h0"), py::arg("h1"));
}
