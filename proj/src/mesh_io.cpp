#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "asfem/mesh.hpp"

namespace asfem {

void write_mesh(std::ostream& out, const Mesh& mesh) {
  out << "ntri-mesh v1\n";
  out << "V " << mesh.num_vertices() << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& p : mesh.vertices()) out << p.x() << ' ' << p.y() << '\n';
  out << "C " << mesh.num_cells() << '\n';
  for (const auto& c : mesh.cells()) out << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
}

Mesh read_mesh(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("ntri-mesh v1", 0) != 0) {
    throw std::runtime_error("read_mesh: missing 'ntri-mesh v1' header");
  }
  std::string tag;
  std::size_t nv = 0, nc = 0;
  if (!(in >> tag >> nv) || tag != "V") throw std::runtime_error("read_mesh: expected 'V <count>'");
  std::vector<Point> v(nv);
  for (auto& p : v) {
    if (!(in >> p.x() >> p.y())) throw std::runtime_error("read_mesh: truncated vertex block");
  }
  if (!(in >> tag >> nc) || tag != "C") throw std::runtime_error("read_mesh: expected 'C <count>'");
  std::vector<std::array<VertexIndex, 3>> cells(nc);
  for (auto& c : cells) {
    if (!(in >> c[0] >> c[1] >> c[2])) throw std::runtime_error("read_mesh: truncated cell block");
  }
  return Mesh(std::move(v), std::move(cells));
}

void save_mesh(const std::string& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_mesh: cannot open " + path);
  write_mesh(out, mesh);
}

Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_mesh: cannot open " + path);
  return read_mesh(in);
}

}  // namespace asfem
