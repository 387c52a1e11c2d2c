#pragma once

// Penalized Lagrangian
//   p(E, x) = F(E, x) + sum_j nu ([c_j(E)^{1/2} - gamma^{1/2}]_+)^2,  c_j(E) = <A(E)^{-1} f_j, f_j>,
// evaluated with a dense Cholesky factorization of A(E).

#include "fmo/dense.hpp"
#include "fmo/saddle.hpp"

#include <vector>

namespace fmo {

struct PenaltyState {
  std::vector<double> compliances;
  std::vector<Vector> u;           // A(E)^{-1} f_j
  std::vector<int> violated;       // W_E = {j : c_j > gamma}
  double term = 0.0;               // the penalty part of p
};

PenaltyState penalty_state(const ProblemInstance& inst, const MaterialState& E,
                           int threshold = dense::kDefaultThreshold, FlopCounter* flops = nullptr);

/// Adds the gradient of the penalty part to gE (nothing when nu = 0 or W_E is empty).
void add_penalty_gradient(const ProblemInstance& inst, const MaterialState& E, const PenaltyState& st,
                          MaterialState& gE, FlopCounter* flops = nullptr);

double penalty_value(const ProblemInstance& inst, const MaterialState& E, const DualState& x,
                     int threshold = dense::kDefaultThreshold);
MaterialState penalty_grad_E(const ProblemInstance& inst, const MaterialState& E, const DualState& x,
                             int threshold = dense::kDefaultThreshold);

/// Plugs the penalty into da_step. Refactors A(E) at every call.
class CompliancePenalty final : public ObjectiveTerm {
 public:
  explicit CompliancePenalty(int threshold = dense::kDefaultThreshold) : threshold_(threshold) {}

  double add_gradient(const ProblemInstance& inst, const MaterialState& E, MaterialState& gE,
                      FlopCounter* flops) override;

  /// State at the iterate of the latest call.
  const PenaltyState& last() const noexcept { return last_; }

 private:
  int threshold_;
  PenaltyState last_;
};

}  // namespace fmo
