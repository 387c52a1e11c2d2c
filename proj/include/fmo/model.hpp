#pragma once

#include "fmo/kernels.hpp"
#include "fmo/types.hpp"

#include <string>
#include <vector>

namespace fmo {

/// Tolerance for block-set membership after a projection.
inline constexpr double kFeasTol = 1e-9;

struct BlockViolation {
  int block = -1;
  double eig_deficit = 0.0;   // max(r - lambda_min, 0)
  double trace_below = 0.0;   // max(rho_l - tr, 0)
  double trace_above = 0.0;   // max(tr - rho_u, 0)

  double worst() const noexcept;
};

struct FeasibilityReport {
  bool feasible = true;
  double max_violation = 0.0;
  /// Violating blocks, worst first (at most `max_listed`).
  std::vector<BlockViolation> worst;

  std::string summary() const;
};

/// Checks lambda_min(E_i) >= r and rho_l <= tr E_i <= rho_u for every block, within tol.
FeasibilityReport feasible_E(const ProblemInstance& inst, const MaterialState& E, double tol = kFeasTol,
                             int max_listed = 5);

/// true iff every ||x_j|| <= eta + tol.
bool in_dual_ball(const ProblemInstance& inst, const DualState& x, double tol = 1e-12);

/// A(E) v = sum_i sum_l B_il^T E_i B_il v, never formed as a matrix.
Vector apply_A(const ProblemInstance& inst, const MaterialState& E, const Vector& v, const ExecPolicy& policy = {},
               FlopCounter* flops = nullptr);

/// <A(E) v, v> as a sum of per-element quadratic forms. Roundoff-level negative
/// values are clamped to zero; a clearly negative value with feasible E throws.
double quad_A(const ProblemInstance& inst, const MaterialState& E, const Vector& v, const ExecPolicy& policy = {},
              FlopCounter* flops = nullptr);

/// Every block set to scale * I.
MaterialState uniform_material(const ProblemInstance& inst, double scale);

}  // namespace fmo
