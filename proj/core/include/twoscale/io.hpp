#pragma once

#include "twoscale/dwr.hpp"
#include "twoscale/fem.hpp"
#include "twoscale/microcell.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace twoscale {

/// Legacy ASCII VTK unstructured grid: every Q2 node is a point, every leaf a QUAD through its
/// corner nodes. Point data: displacement. Cell data: von Mises stress at the center, density,
/// alpha, delta1, delta2 and, when a breakdown is given, the element indicators.
void write_vtk(std::ostream& os, const DisplacementField& u, const TensorField& tensors,
               const std::vector<MicroParams>& params, const ErrorBreakdown* breakdown = nullptr);

/// Contents of a legacy ASCII unstructured grid as read back by read_vtk.
struct VtkGrid {
  std::vector<Vec2> points;
  std::vector<std::vector<int>> cells;
  std::vector<int> cell_types;
  std::map<std::string, std::vector<Vec2>> point_vectors;
  std::map<std::string, std::vector<double>> cell_scalars;
};

/// Minimal reader for the subset written by write_vtk (POINTS, CELLS, CELL_TYPES, VECTORS and
/// SCALARS with LOOKUP_TABLE). Throws std::runtime_error on malformed input.
VtkGrid read_vtk(std::istream& is);

/// Design checkpoint row: element id of the quadtree, parameters and density.
struct CheckpointRow {
  int id = -1;
  MicroParams params;
  double density = 0.0;
};

/// CSV with header id,alpha,delta1,delta2,density, one row per leaf.
void write_checkpoint(std::ostream& os, const Discretization& disc, const std::vector<MicroParams>& params);
std::vector<CheckpointRow> read_checkpoint(std::istream& is);

/// Leaf record of a mesh dump.
struct MeshRecord {
  int id = -1;
  int level = 0;
  Vec2 lower_left;
  double size = 0.0;
};

/// Leaf records of QuadMesh::dump output.
std::vector<MeshRecord> read_mesh_dump(std::istream& is);

/// Rebuilds the mesh whose leaves are `records` by refining the scenario's uniform mesh at
/// `level`. Throws std::runtime_error if the records do not describe a refinement of it.
QuadMesh rebuild_mesh(const Scenario& scenario, int level, const std::vector<MeshRecord>& records);

/// Design on `mesh` from checkpoint rows keyed by the ids of the dumped mesh `records`.
std::vector<MicroParams> match_checkpoint(const QuadMesh& mesh, const std::vector<MeshRecord>& records,
                                          const std::vector<CheckpointRow>& rows);

/// Rows of an indicator CSV written by write_breakdown_header / write_breakdown_row.
struct BreakdownRow {
  int step = 0;
  double edge = 0.0;
  double volume = 0.0;
  double model = 0.0;
  double total = 0.0;
  double compliance = 0.0;
  std::size_t elements = 0;
};
std::vector<BreakdownRow> read_breakdown_csv(std::istream& is);

}  // namespace twoscale
