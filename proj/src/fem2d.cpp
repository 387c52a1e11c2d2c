#include "fmo/fem2d.hpp"

#include "fmo/dense.hpp"
#include "fmo/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

namespace fmo::fem2d {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::invalid_input, what); }

double parse_double(std::string_view s, const std::string& ctx) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) bad("bad number '" + std::string(s) + "' in " + ctx);
  return v;
}

int parse_int(std::string_view s, const std::string& ctx) {
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) bad("bad integer '" + std::string(s) + "' in " + ctx);
  return v;
}

std::pair<std::string_view, std::string_view> split2(std::string_view s, char sep, const std::string& ctx) {
  const auto p = s.find(sep);
  if (p == std::string_view::npos) bad("expected '" + std::string(1, sep) + "' in " + ctx);
  return {s.substr(0, p), s.substr(p + 1)};
}

bool on_edge(const MeshSpec& mesh, Edge e, int ix, int iy) {
  switch (e) {
    case Edge::left: return ix == 0;
    case Edge::right: return ix == mesh.nx;
    case Edge::bottom: return iy == 0;
    case Edge::top: return iy == mesh.ny;
  }
  return false;
}

std::vector<std::pair<int, int>> edge_nodes(const MeshSpec& mesh, Edge e) {
  std::vector<std::pair<int, int>> out;
  for (int iy = 0; iy <= mesh.ny; ++iy)
    for (int ix = 0; ix <= mesh.nx; ++ix)
      if (on_edge(mesh, e, ix, iy)) out.emplace_back(ix, iy);
  return out;
}

// Nodes selected by a load spec, before removing fixed ones.
std::vector<std::pair<int, int>> select_nodes(const MeshSpec& mesh, const std::string& sel, bool& explicit_node) {
  const std::string ctx = "load selector '" + sel + "'";
  const auto [kind, arg] = split2(sel, ':', ctx);
  explicit_node = kind != "edge";
  if (kind == "node") {
    const auto [a, b] = split2(arg, ',', ctx);
    const int ix = parse_int(a, ctx), iy = parse_int(b, ctx);
    if (ix < 0 || ix > mesh.nx || iy < 0 || iy > mesh.ny) bad("node outside the mesh in " + ctx);
    return {{ix, iy}};
  }
  if (kind == "corner") {
    if (arg == "bl") return {{0, 0}};
    if (arg == "br") return {{mesh.nx, 0}};
    if (arg == "tl") return {{0, mesh.ny}};
    if (arg == "tr") return {{mesh.nx, mesh.ny}};
    bad("unknown corner in " + ctx + " (tl, tr, bl, br)");
  }
  if (kind == "edge") return edge_nodes(mesh, parse_edge(std::string(arg)));
  if (kind == "midedge") {
    const auto nodes = edge_nodes(mesh, parse_edge(std::string(arg)));
    const std::size_t n = nodes.size();
    if (n % 2 == 1) return {nodes[n / 2]};
    return {nodes[n / 2 - 1], nodes[n / 2]};
  }
  bad("unknown selector kind in " + ctx + " (node, edge, midedge, corner)");
}

}  // namespace

Edge parse_edge(const std::string& name) {
  if (name == "left") return Edge::left;
  if (name == "right") return Edge::right;
  if (name == "bottom") return Edge::bottom;
  if (name == "top") return Edge::top;
  bad("unknown edge '" + name + "' (left, right, bottom, top)");
}

std::string to_string(Edge e) {
  switch (e) {
    case Edge::left: return "left";
    case Edge::right: return "right";
    case Edge::bottom: return "bottom";
    case Edge::top: return "top";
  }
  return "?";
}

LoadSpec parse_load(const std::string& text) {
  LoadSpec spec;
  const auto at = text.find('@');
  spec.selector = text.substr(0, at);
  if (at != std::string::npos) {
    const std::string ctx = "load '" + text + "'";
    const auto [a, b] = split2(std::string_view(text).substr(at + 1), ',', ctx);
    spec.fx = parse_double(a, ctx);
    spec.fy = parse_double(b, ctx);
  }
  return spec;
}

void MeshSpec::validate() const {
  if (nx < 1 || ny < 1) bad("mesh needs nx, ny >= 1");
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly)) bad("mesh side lengths must be positive");
  if (loads.empty()) bad("at least one load is required");
  if (!(r > 0.0)) bad("r must be positive");
  if (!(rho_u >= 3.0 * r)) bad("rho_u must be at least k*r");
}

std::array<int, 4> element_nodes(const MeshSpec& mesh, int ex, int ey) {
  return {mesh.node_id(ex, ey), mesh.node_id(ex + 1, ey), mesh.node_id(ex + 1, ey + 1), mesh.node_id(ex, ey + 1)};
}

std::array<std::array<std::array<double, 2>, 4>, 4> shape_gradients(double hx, double hy) {
  static constexpr double xi_a[4] = {-1, 1, 1, -1};
  static constexpr double eta_a[4] = {-1, -1, 1, 1};
  const double g = 1.0 / std::sqrt(3.0);
  const double gx[4] = {-g, g, g, -g};
  const double gy[4] = {-g, -g, g, g};
  std::array<std::array<std::array<double, 2>, 4>, 4> out{};
  for (int p = 0; p < 4; ++p)
    for (int a = 0; a < 4; ++a) {
      const double dxi = 0.25 * xi_a[a] * (1.0 + eta_a[a] * gy[p]);
      const double deta = 0.25 * eta_a[a] * (1.0 + xi_a[a] * gx[p]);
      // J = diag(hx/2, hy/2) for an axis-aligned rectangle
      out[std::size_t(p)][std::size_t(a)] = {dxi * 2.0 / hx, deta * 2.0 / hy};
    }
  return out;
}

std::vector<int> free_numbering(const MeshSpec& mesh) {
  std::vector<int> idx(std::size_t(mesh.node_count()), -1);
  int next = 0;
  for (int iy = 0; iy <= mesh.ny; ++iy)
    for (int ix = 0; ix <= mesh.nx; ++ix)
      if (!on_edge(mesh, mesh.fixed, ix, iy)) idx[std::size_t(mesh.node_id(ix, iy))] = next++;
  return idx;
}

std::vector<Vector> assemble_loads(const MeshSpec& mesh) {
  const auto idx = free_numbering(mesh);
  const int nfree = int(std::count_if(idx.begin(), idx.end(), [](int v) { return v >= 0; }));
  std::vector<Vector> loads;
  for (const auto& spec : mesh.loads) {
    bool explicit_node = false;
    const auto nodes = select_nodes(mesh, spec.selector, explicit_node);
    std::vector<int> picked;
    for (const auto& [ix, iy] : nodes) {
      const int f = idx[std::size_t(mesh.node_id(ix, iy))];
      if (f < 0 && explicit_node)
        bad("load '" + spec.selector + "' acts on node (" + std::to_string(ix) + "," + std::to_string(iy) +
            ") of the fixed edge");
      if (f >= 0) picked.push_back(f);
    }
    if (picked.empty()) bad("load '" + spec.selector + "' selects no free node");
    Vector f = Vector::Zero(2 * nfree);
    const double share = 1.0 / double(picked.size());
    for (int p : picked) {
      f[2 * p] += share * spec.fx;
      f[2 * p + 1] += share * spec.fy;
    }
    if (f.norm() == 0.0) bad("load '" + spec.selector + "' has zero force");
    loads.push_back(std::move(f));
  }
  return loads;
}

ProblemInstance build_instance(const MeshSpec& mesh) {
  mesh.validate();
  const auto idx = free_numbering(mesh);
  const double hx = mesh.lx / mesh.nx, hy = mesh.ly / mesh.ny;
  const auto grads = shape_gradients(hx, hy);

  ProblemInstance inst;
  inst.k = 3;
  inst.loads = assemble_loads(mesh);
  inst.N = int(inst.loads.front().size());
  inst.r = mesh.r;
  inst.gamma = mesh.gamma;
  inst.eta = mesh.eta;
  inst.nu = mesh.nu;
  const double rho_l = mesh.rho_l < 0.0 ? inst.k * mesh.r : mesh.rho_l;

  for (int ey = 0; ey < mesh.ny; ++ey)
    for (int ex = 0; ex < mesh.nx; ++ex) {
      const auto nodes = element_nodes(mesh, ex, ey);
      // global column -> (corner, component)
      std::map<int, std::pair<int, int>> dofs;
      for (int a = 0; a < 4; ++a) {
        const int f = idx[std::size_t(nodes[std::size_t(a)])];
        if (f < 0) continue;
        dofs[2 * f] = {a, 0};
        dofs[2 * f + 1] = {a, 1};
      }
      ElementOperator el;
      for (const auto& g : grads) {
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(3, Eigen::Index(dofs.size()));
        int c = 0;
        for (const auto& [col, ac] : dofs) {
          const auto [dx, dy] = g[std::size_t(ac.first)];
          if (ac.second == 0) {
            B(0, c) = dx;
            B(2, c) = 0.5 * dy;
          } else {
            B(1, c) = dy;
            B(2, c) = 0.5 * dx;
          }
          ++c;
        }
        el.B.push_back(std::move(B));
      }
      // drop columns that vanish at every Gauss point
      std::vector<int> keep;
      int c = 0;
      for (const auto& [col, ac] : dofs) {
        bool nz = false;
        for (const auto& B : el.B) nz = nz || B.col(c).cwiseAbs().maxCoeff() > 0.0;
        if (nz) keep.push_back(c);
        el.cols.push_back(col);
        ++c;
      }
      if (keep.size() != el.cols.size()) {
        std::vector<int> cols;
        for (int kc : keep) cols.push_back(el.cols[std::size_t(kc)]);
        for (auto& B : el.B) {
          Eigen::MatrixXd Bk(B.rows(), Eigen::Index(keep.size()));
          for (std::size_t q = 0; q < keep.size(); ++q) Bk.col(Eigen::Index(q)) = B.col(keep[q]);
          B = std::move(Bk);
        }
        el.cols = std::move(cols);
      }
      inst.elements.push_back(std::move(el));
    }
  inst.rho_l.assign(std::size_t(inst.m()), rho_l);
  inst.rho_u.assign(std::size_t(inst.m()), mesh.rho_u);
  inst.validate();
  return inst;
}

std::vector<double> reference_compliance(const ProblemInstance& inst, const MaterialState& E, int threshold) {
  return dense::compliances(inst, E, threshold);
}

double calibrated_gamma(const ProblemInstance& inst, double scale) {
  if (!(scale > 0.0)) bad("gamma scale must be positive");
  const auto E0 = uniform_material(inst, inst.max_rho_u() / inst.k);
  const auto c = reference_compliance(inst, E0);
  return scale * *std::max_element(c.begin(), c.end());
}

}  // namespace fmo::fem2d
