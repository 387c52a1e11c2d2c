#include "fmo/penalty.hpp"

#include <algorithm>
#include <cmath>

namespace fmo {

PenaltyState penalty_state(const ProblemInstance& inst, const MaterialState& E, int threshold, FlopCounter* flops) {
  check_dimensions(inst, E);
  dense::require_small(inst, threshold, "penalty mode");
  const dense::Factorization fac(dense::assemble_A(inst, E, flops), flops);
  PenaltyState st;
  const double sg = std::sqrt(inst.gamma);
  for (int j = 0; j < inst.L(); ++j) {
    const Vector& f = inst.loads[std::size_t(j)];
    st.u.push_back(fac.solve(f, flops));
    const double c = std::max(f.dot(st.u.back()), 0.0);
    st.compliances.push_back(c);
    if (c > inst.gamma) {
      st.violated.push_back(j);
      const double w = std::sqrt(c) - sg;
      st.term += inst.nu * w * w;
    }
  }
  return st;
}

void add_penalty_gradient(const ProblemInstance& inst, const MaterialState& E, const PenaltyState& st,
                          MaterialState& gE, FlopCounter* flops) {
  if (inst.nu == 0.0 || st.violated.empty()) return;
  DualState u;
  std::vector<double> coef;
  const double sg = std::sqrt(inst.gamma);
  for (int j : st.violated) {
    u.vectors.push_back(st.u[std::size_t(j)]);
    coef.push_back(inst.nu * std::max(1.0 - sg / std::sqrt(st.compliances[std::size_t(j)]), 0.0));
  }
  FusedPass pass;
  FlopCounter local;
  kernels::fused_pass(inst, E, u, pass, {}, flops ? &local : nullptr);
  const int W = u.L();
  for (int i = 0; i < inst.m(); ++i)
    for (int w = 0; w < W; ++w)
      gE.blocks[std::size_t(i)].axpy(-coef[std::size_t(w)], pass.outer[std::size_t(i) * std::size_t(W) + std::size_t(w)]);
  if (flops) flops->dense += local.total() + (long long)inst.m() * W * inst.k * (inst.k + 1);
}

double penalty_value(const ProblemInstance& inst, const MaterialState& E, const DualState& x, int threshold) {
  const double F = saddle_value(inst, E, x);
  if (inst.nu == 0.0) return F;
  return F + penalty_state(inst, E, threshold).term;
}

MaterialState penalty_grad_E(const ProblemInstance& inst, const MaterialState& E, const DualState& x, int threshold) {
  MaterialState g = subgrad_E(inst, E, x);
  if (inst.nu == 0.0) return g;
  add_penalty_gradient(inst, E, penalty_state(inst, E, threshold), g);
  return g;
}

double CompliancePenalty::add_gradient(const ProblemInstance& inst, const MaterialState& E, MaterialState& gE,
                                       FlopCounter* flops) {
  last_ = penalty_state(inst, E, threshold_, flops);
  add_penalty_gradient(inst, E, last_, gE, flops);
  return last_.term;
}

}  // namespace fmo
