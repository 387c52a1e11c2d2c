#include "fmo/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fmo {

double BlockViolation::worst() const noexcept { return std::max({eig_deficit, trace_below, trace_above}); }

std::string FeasibilityReport::summary() const {
  if (feasible) return "feasible";
  std::ostringstream os;
  os << "infeasible (max violation " << max_violation << ")";
  for (const auto& v : worst) {
    os << "; block " << v.block << ":";
    if (v.eig_deficit > 0.0) os << " lambda_min below r by " << v.eig_deficit;
    if (v.trace_below > 0.0) os << " trace below rho_l by " << v.trace_below;
    if (v.trace_above > 0.0) os << " trace above rho_u by " << v.trace_above;
  }
  return os.str();
}

FeasibilityReport feasible_E(const ProblemInstance& inst, const MaterialState& E, double tol, int max_listed) {
  check_dimensions(inst, E);
  FeasibilityReport rep;
  std::vector<BlockViolation> all;
  for (int i = 0; i < E.m(); ++i) {
    const SymBlock& b = E.blocks[std::size_t(i)];
    Eigen::SelfAdjointEigenSolver<BlockMatrix> eig(b.dense(), Eigen::EigenvaluesOnly);
    BlockViolation v;
    v.block = i;
    v.eig_deficit = std::max(inst.r - eig.eigenvalues().minCoeff(), 0.0);
    const double tr = b.trace();
    v.trace_below = std::max(inst.rho_l[std::size_t(i)] - tr, 0.0);
    v.trace_above = std::max(tr - inst.rho_u[std::size_t(i)], 0.0);
    rep.max_violation = std::max(rep.max_violation, v.worst());
    if (v.worst() > tol) all.push_back(v);
  }
  rep.feasible = all.empty();
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.worst() > b.worst(); });
  if (int(all.size()) > max_listed) all.resize(std::size_t(max_listed));
  rep.worst = std::move(all);
  return rep;
}

bool in_dual_ball(const ProblemInstance& inst, const DualState& x, double tol) {
  for (const auto& v : x.vectors)
    if (v.norm() > inst.eta + tol) return false;
  return true;
}

Vector apply_A(const ProblemInstance& inst, const MaterialState& E, const Vector& v, const ExecPolicy& policy,
               FlopCounter* flops) {
  check_dimensions(inst, E);
  if (v.size() != inst.N) throw Error(ErrorKind::dimension_mismatch, "vector length differs from N");
  Vector out;
  kernels::apply_A(inst, E, v, out, policy, flops);
  return out;
}

double quad_A(const ProblemInstance& inst, const MaterialState& E, const Vector& v, const ExecPolicy& policy,
              FlopCounter* flops) {
  check_dimensions(inst, E);
  if (v.size() != inst.N) throw Error(ErrorKind::dimension_mismatch, "vector length differs from N");
  const double q = kernels::quad_A(inst, E, v, policy, flops);
  if (q >= 0.0) return q;
  const double scale = std::max(1.0, v.squaredNorm());
  if (q >= -1e-12 * scale) return 0.0;
  if (q < -1e-9 * scale && feasible_E(inst, E).feasible) {
    std::ostringstream os;
    os << "quadratic form <A(E)v,v> = " << q << " is negative for feasible E";
    throw Error(ErrorKind::numerical, os.str());
  }
  return q;
}

MaterialState uniform_material(const ProblemInstance& inst, double scale) {
  MaterialState E;
  E.blocks.assign(std::size_t(inst.m()), SymBlock::identity(inst.k, scale));
  return E;
}

}  // namespace fmo
