#pragma once

// Computable gap estimates, bound constants, a-priori gap bounds, solution
// certificates and flop summaries.

#include "fmo/dense.hpp"
#include "fmo/saddle.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fmo {

struct ConstantOptions {
  double power_tol = 1e-8;
  int power_max_iter = 10000;
  /// lambda_min(B^T B) is computed densely only when N is at most this.
  int dense_threshold = dense::kDefaultThreshold;
};

struct BoundConstants {
  int m = 0, k = 0, L = 0;
  double r = 0.0, gamma = 0.0, eta = 0.0, nu = 0.0;
  double rho_span = 0.0;        // max_i (rho_u^(i) - k r)
  double B_norm = 0.0;          // ||B||_2 = lambda_max(sum B^T B)^{1/2}
  int power_iterations = 0;
  double power_residual = 0.0;  // ||M v - lambda v|| / lambda at exit
  /// Smallest nonzero eigenvalue of sum B^T B; empty when N is above the dense threshold.
  std::optional<double> lambda_min_BtB;
  bool rank_deficient = false;
  double f_norm = 0.0;          // ||(f_1, ..., f_L)||_2
  double f_norm2_sum = 0.0;     // sum_j ||f_j||^2
  double L_E2 = 0.0;            // m k + L^2 (gamma / r) ||B||^2 eta^2
  double L_E = 0.0;
  double L_x = 0.0;             // 2 ||f|| + 2 sqrt(gamma L (rho_u - k r + r)) ||B||
  double D_E = 0.0;             // 1/2 sum_i (rho_u^(i) - k r)^2
  double D_x = 0.0;             // L eta^2 / 2

  /// tau balancing the two parts of the simple-scheme bound.
  double optimal_tau() const;
  /// ||g||_* bound for a given tau.
  double dual_lipschitz(double tau) const;
  /// tau D_E + (1 - tau) D_x
  double prox_diameter(double tau) const;
  /// sigma minimizing the a-priori bound: L/sqrt(2D) (simple) or 1/sqrt(2D) (weighted).
  double recommended_sigma(Scheme scheme, double tau) const;
};

/// lambda_max of sum_i sum_l B_il^T B_il by power iteration. Throws numerical on non-convergence.
double B_norm_squared(const ProblemInstance& inst, const ConstantOptions& opt = {}, int* iterations = nullptr,
                      double* residual = nullptr);

BoundConstants compute_constants(const ProblemInstance& inst, const ConstantOptions& opt = {});

struct GapEstimate {
  double kappa = 0.0;
  double upsilon = 0.0;
  double total() const noexcept { return kappa + upsilon; }
};

/// min over Q of <s, E> for one block: r tr s + [rho_l - kr]_+ lambda_min if lambda_min > 0, else
/// (rho_u - kr) lambda_min.
double block_support_min(const SymBlock& s, double rho_l, double rho_u, double r);

GapEstimate gap_estimate(const DualAccumulators& acc, const ProblemInstance& inst);

/// (0.37 + sqrt(2t + 1)) / (t + 1)
double bound_prefactor(long long t);

/// Printed a-priori bound at iteration t. The simple-scheme bound and the
/// weighted scheme's second bound coincide.
double theoretical_gap_bound(const BoundConstants& c, long long t, Scheme scheme);

/// Weighted scheme, first bound; needs d(E*, x*) from a reference solution.
std::optional<double> weighted_bound_reference(const BoundConstants& c, long long t,
                                               std::optional<double> d_star);

/// Additional term of the bound for the penalized Lagrangian; empty without lambda_min.
std::optional<double> penalty_bound_term(const BoundConstants& c, long long t);

/// d(E, x) = tau/2 ||E - rI||^2 + (1 - tau)/2 ||x||^2
double prox_distance(const ProblemInstance& inst, const MaterialState& E, const DualState& x, double tau);

struct Certificate {
  bool interior = false;                // every ||x_j|| < eta
  std::vector<double> compliances;
  std::vector<int> violated;
  double lhs = 0.0;                     // sum_{W} (c_j^{1/2} - gamma^{1/2})
  double F_star_upper = 0.0;
  double objective_gap = 0.0;           // F* - sum rho_l
  std::optional<double> lambda_min;
  /// Right-hand side as printed, with r lambda_min(BB^T) as the curvature factor.
  std::optional<double> rhs_literal;
  /// Right-hand side with (r lambda_min)^{1/2}, the factor the argument supports.
  std::optional<double> rhs_corrected;
  /// Penalized variant (nu > 0), both conventions.
  std::optional<double> rhs_penalty_literal;
  std::optional<double> rhs_penalty_corrected;

  std::string summary() const;
};

Certificate approximation_certificate(const ProblemInstance& inst, const MaterialState& E, const DualState& x,
                                      double F_star_upper, const BoundConstants& c,
                                      int threshold = dense::kDefaultThreshold);

struct FlopReport {
  long long iterations = 0;
  double per_iteration = 0.0;           // measured, all categories
  double per_iteration_fused = 0.0;
  double per_iteration_update = 0.0;
  double per_iteration_dense = 0.0;
  double model_sparse = 0.0;            // fused pass model over touched columns
  double model_dense_B = 0.0;           // (6 k L nig) m N
  double model_factorization = 0.0;     // N^3 / 3

  std::string summary() const;
};

FlopReport flop_report(const FlopCounter& counters, long long iterations, const ProblemInstance& inst);

}  // namespace fmo
