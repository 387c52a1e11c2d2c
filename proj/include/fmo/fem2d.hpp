#pragma once

// Structured 2D plane-elasticity instances on a rectangle: bilinear quads,
// 2x2 Gauss rule, one fixed edge, nodal loads.

#include "fmo/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace fmo::fem2d {

enum class Edge { left, right, bottom, top };

Edge parse_edge(const std::string& name);
std::string to_string(Edge e);

/// Forms: node:IX,IY  edge:NAME  midedge:NAME  corner:tl|tr|bl|br
/// with an optional force suffix "@FX,FY" (default 0,-1). The force is the
/// resultant and is split evenly over the selected free nodes.
struct LoadSpec {
  std::string selector = "corner:br";
  double fx = 0.0;
  double fy = -1.0;
};

LoadSpec parse_load(const std::string& text);

struct MeshSpec {
  int nx = 1;
  int ny = 1;
  double lx = 1.0;
  double ly = 1.0;
  Edge fixed = Edge::left;
  std::vector<LoadSpec> loads{LoadSpec{}};

  double rho_l = -1.0;  // negative: use k*r
  double rho_u = 3.0;
  double r = 0.01;
  double gamma = 1.0;
  double eta = 1.0;
  double nu = 0.0;

  int node_count() const noexcept { return (nx + 1) * (ny + 1); }
  int node_id(int ix, int iy) const noexcept { return iy * (nx + 1) + ix; }
  void validate() const;
};

/// Counter-clockwise corner node ids of element (ex, ey).
std::array<int, 4> element_nodes(const MeshSpec& mesh, int ex, int ey);

/// Gradients of the four bilinear shape functions at the 2x2 Gauss points
/// of an axis-aligned element with sides hx, hy; [gauss point][corner] = (d/dx, d/dy).
std::array<std::array<std::array<double, 2>, 4>, 4> shape_gradients(double hx, double hy);

/// Free-node index of every node, -1 for nodes on the fixed edge.
std::vector<int> free_numbering(const MeshSpec& mesh);

/// Full nodal force vectors (free DOFs only), one per load spec.
std::vector<Vector> assemble_loads(const MeshSpec& mesh);

ProblemInstance build_instance(const MeshSpec& mesh);

/// <A(E)^{-1} f_j, f_j> per load through a dense Cholesky factorization.
/// Throws when N exceeds the threshold or A(E) is singular.
std::vector<double> reference_compliance(const ProblemInstance& inst, const MaterialState& E, int threshold = 4000);

/// gamma = scale * max_j <A(E0)^{-1} f_j, f_j> with E0 = (rho_u/k) I. Dense, small N only.
double calibrated_gamma(const ProblemInstance& inst, double scale);

}  // namespace fmo::fem2d
