#include "twoscale/io.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace twoscale {

namespace {

constexpr int kVtkQuad = 9;

void write_scalars(std::ostream& os, const std::string& name, const std::vector<double>& v) {
  os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  for (double x : v) os << x << '\n';
}

std::string expect_word(std::istream& is, const char* what) {
  std::string w;
  if (!(is >> w)) throw std::runtime_error(std::string("vtk: unexpected end of input, expected ") + what);
  return w;
}

template <class T>
T read_value(std::istream& is, const char* what) {
  T v{};
  if (!(is >> v)) throw std::runtime_error(std::string("vtk: could not read ") + what);
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double to_double(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(std::string("csv: bad ") + what + " '" + s + "'");
  }
}

int to_int(const std::string& s, const char* what) {
  const double v = to_double(s, what);
  if (v != std::floor(v)) throw std::runtime_error(std::string("csv: bad ") + what + " '" + s + "'");
  return static_cast<int>(v);
}

bool is_blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

}  // namespace

void write_vtk(std::ostream& os, const DisplacementField& u, const TensorField& tensors,
               const std::vector<MicroParams>& params, const ErrorBreakdown* breakdown) {
  const Discretization& disc = u.discretization();
  const std::size_t ne = disc.num_elements();
  const std::size_t nn = disc.num_nodes();
  if (tensors.size() != ne || params.size() != ne) throw std::invalid_argument("write_vtk: field size mismatch");
  if (breakdown && breakdown->eta_volume.size() != ne) throw std::invalid_argument("write_vtk: breakdown size mismatch");

  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(12);
  os << "# vtk DataFile Version 3.0\n" << disc.scenario().name << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << nn << " double\n";
  for (std::size_t n = 0; n < nn; ++n) {
    const Vec2 p = disc.node_point(static_cast<int>(n));
    os << p.x() << ' ' << p.y() << " 0\n";
  }
  os << "CELLS " << ne << ' ' << 5 * ne << '\n';
  for (std::size_t e = 0; e < ne; ++e) {
    const auto& nodes = disc.element_nodes(e);
    os << "4 " << nodes[0] << ' ' << nodes[2] << ' ' << nodes[8] << ' ' << nodes[6] << '\n';
  }
  os << "CELL_TYPES " << ne << '\n';
  for (std::size_t e = 0; e < ne; ++e) os << kVtkQuad << '\n';

  os << "POINT_DATA " << nn << "\nVECTORS displacement double\n";
  for (std::size_t n = 0; n < nn; ++n) os << u.nodal()(2 * n) << ' ' << u.nodal()(2 * n + 1) << " 0\n";

  os << "CELL_DATA " << ne << '\n';
  write_scalars(os, "von_mises", von_mises(u, tensors));
  std::vector<double> v(ne);
  for (std::size_t e = 0; e < ne; ++e) v[e] = density(params[e]);
  write_scalars(os, "density", v);
  for (std::size_t e = 0; e < ne; ++e) v[e] = params[e].alpha;
  write_scalars(os, "alpha", v);
  for (std::size_t e = 0; e < ne; ++e) v[e] = params[e].delta1;
  write_scalars(os, "delta1", v);
  for (std::size_t e = 0; e < ne; ++e) v[e] = params[e].delta2;
  write_scalars(os, "delta2", v);
  if (breakdown) {
    write_scalars(os, "eta_edge", breakdown->eta_edge);
    write_scalars(os, "eta_volume", breakdown->eta_volume);
    write_scalars(os, "eta_model", breakdown->eta_model);
    write_scalars(os, "eta_total", breakdown->element_totals());
  }
  os.flags(flags);
  os.precision(prec);
}

VtkGrid read_vtk(std::istream& is) {
  VtkGrid g;
  std::string line;
  if (!std::getline(is, line) || line.rfind("# vtk DataFile", 0) != 0) throw std::runtime_error("vtk: missing header");
  if (!std::getline(is, line)) throw std::runtime_error("vtk: missing title");
  if (expect_word(is, "format") != "ASCII") throw std::runtime_error("vtk: only ASCII is supported");
  if (expect_word(is, "DATASET") != "DATASET" || expect_word(is, "dataset type") != "UNSTRUCTURED_GRID")
    throw std::runtime_error("vtk: expected DATASET UNSTRUCTURED_GRID");

  enum class Section { none, point, cell } section = Section::none;
  std::size_t point_count = 0, cell_count = 0;
  std::string key;
  while (is >> key) {
    if (key == "POINTS") {
      const auto n = read_value<std::size_t>(is, "point count");
      expect_word(is, "point type");
      g.points.resize(n);
      for (auto& p : g.points) {
        p.x() = read_value<double>(is, "point");
        p.y() = read_value<double>(is, "point");
        read_value<double>(is, "point");
      }
    } else if (key == "CELLS") {
      const auto n = read_value<std::size_t>(is, "cell count");
      const auto size = read_value<std::size_t>(is, "cell list size");
      std::size_t used = 0;
      g.cells.resize(n);
      for (auto& c : g.cells) {
        const auto k = read_value<std::size_t>(is, "cell size");
        c.resize(k);
        for (auto& id : c) {
          id = read_value<int>(is, "cell node");
          if (id < 0 || static_cast<std::size_t>(id) >= g.points.size())
            throw std::runtime_error("vtk: cell node out of range");
        }
        used += k + 1;
      }
      if (used != size) throw std::runtime_error("vtk: CELLS size does not match its entries");
    } else if (key == "CELL_TYPES") {
      const auto n = read_value<std::size_t>(is, "cell type count");
      if (n != g.cells.size()) throw std::runtime_error("vtk: CELL_TYPES count mismatch");
      g.cell_types.resize(n);
      for (auto& t : g.cell_types) t = read_value<int>(is, "cell type");
    } else if (key == "POINT_DATA") {
      point_count = read_value<std::size_t>(is, "point data count");
      if (point_count != g.points.size()) throw std::runtime_error("vtk: POINT_DATA count mismatch");
      section = Section::point;
    } else if (key == "CELL_DATA") {
      cell_count = read_value<std::size_t>(is, "cell data count");
      if (cell_count != g.cells.size()) throw std::runtime_error("vtk: CELL_DATA count mismatch");
      section = Section::cell;
    } else if (key == "VECTORS") {
      if (section != Section::point) throw std::runtime_error("vtk: VECTORS supported only as point data");
      const std::string name = expect_word(is, "vector name");
      expect_word(is, "vector type");
      auto& v = g.point_vectors[name];
      v.resize(point_count);
      for (auto& x : v) {
        x.x() = read_value<double>(is, "vector");
        x.y() = read_value<double>(is, "vector");
        read_value<double>(is, "vector");
      }
    } else if (key == "SCALARS") {
      if (section != Section::cell) throw std::runtime_error("vtk: SCALARS supported only as cell data");
      const std::string name = expect_word(is, "scalar name");
      expect_word(is, "scalar type");
      std::string w = expect_word(is, "LOOKUP_TABLE");
      if (w == "1") w = expect_word(is, "LOOKUP_TABLE");
      if (w != "LOOKUP_TABLE") throw std::runtime_error("vtk: expected LOOKUP_TABLE");
      expect_word(is, "table name");
      auto& v = g.cell_scalars[name];
      v.resize(cell_count);
      for (auto& x : v) x = read_value<double>(is, "scalar");
    } else {
      throw std::runtime_error("vtk: unsupported keyword '" + key + "'");
    }
  }
  if (g.cell_types.size() != g.cells.size()) throw std::runtime_error("vtk: missing CELL_TYPES");
  return g;
}

void write_checkpoint(std::ostream& os, const Discretization& disc, const std::vector<MicroParams>& params) {
  if (params.size() != disc.num_elements()) throw std::invalid_argument("write_checkpoint: design size mismatch");
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(17) << "id,alpha,delta1,delta2,density\n";
  for (std::size_t e = 0; e < params.size(); ++e) {
    const MicroParams& q = params[e];
    os << disc.element_id(e) << ',' << q.alpha << ',' << q.delta1 << ',' << q.delta2 << ',' << density(q) << '\n';
  }
  os.flags(flags);
  os.precision(prec);
}

std::vector<CheckpointRow> read_checkpoint(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("id,alpha,delta1,delta2,density", 0) != 0)
    throw std::runtime_error("checkpoint: missing header");
  std::vector<CheckpointRow> rows;
  while (std::getline(is, line)) {
    if (is_blank(line)) continue;
    const auto c = split_csv(line);
    if (c.size() != 5) throw std::runtime_error("checkpoint: expected 5 columns in '" + line + "'");
    CheckpointRow r;
    r.id = to_int(c[0], "id");
    r.params = {to_double(c[1], "alpha"), to_double(c[2], "delta1"), to_double(c[3], "delta2")};
    r.density = to_double(c[4], "density");
    rows.push_back(r);
  }
  return rows;
}

std::vector<MeshRecord> read_mesh_dump(std::istream& is) {
  std::string line;
  std::size_t count = 0;
  bool found = false;
  while (std::getline(is, line)) {
    if (line.rfind("elements ", 0) == 0) {
      count = static_cast<std::size_t>(std::stoul(line.substr(9)));
      found = true;
      break;
    }
  }
  if (!found) throw std::runtime_error("mesh dump: missing element block");
  std::vector<MeshRecord> out(count);
  for (auto& r : out) {
    double x = 0.0, y = 0.0;
    if (!(is >> r.id >> r.level >> x >> y >> r.size)) throw std::runtime_error("mesh dump: truncated element block");
    r.lower_left = Vec2(x, y);
  }
  return out;
}

QuadMesh rebuild_mesh(const Scenario& scenario, int level, const std::vector<MeshRecord>& records) {
  QuadMesh mesh = QuadMesh::build(scenario, level);
  int deepest = level;
  for (const auto& r : records) deepest = std::max(deepest, r.level);
  for (int pass = level; pass <= deepest; ++pass) {
    std::vector<int> marked;
    for (const auto& r : records) {
      const int id = mesh.locate(r.lower_left + Vec2::Constant(0.5 * r.size));
      if (id < 0) throw std::runtime_error("rebuild_mesh: record outside the domain");
      const int have = mesh.element(id).level;
      if (have > r.level) throw std::runtime_error("rebuild_mesh: records are coarser than the base mesh");
      if (have < r.level) marked.push_back(id);
    }
    if (marked.empty()) break;
    std::sort(marked.begin(), marked.end());
    marked.erase(std::unique(marked.begin(), marked.end()), marked.end());
    mesh = mesh.refined(marked);
  }
  if (mesh.num_leaves() != records.size()) throw std::runtime_error("rebuild_mesh: leaf count mismatch");
  for (const auto& r : records) {
    const Element& e = mesh.element(mesh.locate(r.lower_left + Vec2::Constant(0.5 * r.size)));
    if (e.level != r.level || (e.lower_left() - r.lower_left).norm() > 1e-12)
      throw std::runtime_error("rebuild_mesh: records do not form a balanced refinement");
  }
  return mesh;
}

std::vector<MicroParams> match_checkpoint(const QuadMesh& mesh, const std::vector<MeshRecord>& records,
                                          const std::vector<CheckpointRow>& rows) {
  std::map<int, const MeshRecord*> by_id;
  for (const auto& r : records) by_id[r.id] = &r;
  std::vector<MicroParams> out(mesh.num_leaves());
  std::vector<bool> seen(mesh.num_leaves(), false);
  for (const auto& row : rows) {
    const auto it = by_id.find(row.id);
    if (it == by_id.end()) throw std::runtime_error("checkpoint: element id " + std::to_string(row.id) + " not in mesh");
    const MeshRecord& r = *it->second;
    const int leaf = mesh.leaf_index(mesh.locate(r.lower_left + Vec2::Constant(0.5 * r.size)));
    if (leaf < 0 || seen[leaf]) throw std::runtime_error("checkpoint: rows do not match the mesh leaves");
    out[leaf] = row.params;
    seen[leaf] = true;
  }
  for (bool s : seen)
    if (!s) throw std::runtime_error("checkpoint: missing rows for some elements");
  return out;
}

std::vector<BreakdownRow> read_breakdown_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("step,edge,volume,model,total,compliance,elements", 0) != 0)
    throw std::runtime_error("indicator csv: missing header");
  std::vector<BreakdownRow> rows;
  while (std::getline(is, line)) {
    if (is_blank(line)) continue;
    const auto c = split_csv(line);
    if (c.size() != 7) throw std::runtime_error("indicator csv: expected 7 columns in '" + line + "'");
    BreakdownRow r;
    r.step = to_int(c[0], "step");
    r.edge = to_double(c[1], "edge");
    r.volume = to_double(c[2], "volume");
    r.model = to_double(c[3], "model");
    r.total = to_double(c[4], "total");
    r.compliance = to_double(c[5], "compliance");
    r.elements = static_cast<std::size_t>(to_int(c[6], "elements"));
    rows.push_back(r);
  }
  return rows;
}

}  // namespace twoscale
