#pragma once

#include "fmo/types.hpp"

#include <optional>
#include <vector>

namespace fmo {

/// A trace/inner-product bound; std::nullopt means unbounded on that side.
using Bound = std::optional<double>;

/// min ||A z - b||^2  s.t.  c_l <= <w, z> <= c_u,  z >= r_lb,  A = diag(a_diag).
struct BoxTraceLS {
  Vector a_diag;
  Vector b;
  Vector w;
  Vector r_lb;
  Bound c_l;
  Bound c_u;

  int n() const noexcept { return int(b.size()); }
  void validate() const;
};

/// min ||z - b||^2  s.t.  c_l <= <w, z> <= c_u,  z >= 0, every w_i != 0.
struct StandardLS {
  Vector b;
  Vector w;
  Bound c_l;
  Bound c_u;

  int n() const noexcept { return int(b.size()); }
};

struct LsReduction {
  StandardLS problem;
  /// Original index of each standardized variable.
  std::vector<int> active;
  /// Full-length solution for the variables settled during reduction.
  Vector z_fixed;
  std::vector<char> fixed;
  /// z_i = shift_i + y / scale_i for active i.
  Vector scale;
  Vector shift;

  Vector recover(const Vector& y) const;
};

LsReduction reduce_ls(const BoxTraceLS& problem);

enum class LsBranch { interior, upper, lower };

struct LsSolution {
  Vector z;
  double lambda_l = 0.0;
  double lambda_u = 0.0;
  LsBranch branch = LsBranch::interior;
  /// Arithmetic operations, comparisons and exchanges performed.
  long long ops = 0;
};

/// Throws Error(infeasible) when no z >= 0 meets the bounds.
LsSolution solve_box_trace_ls(const StandardLS& problem);

/// reduce_ls, solve_box_trace_ls and recovery in one call.
Vector solve_ls(const BoxTraceLS& problem);

struct SpectralProjection {
  Eigen::MatrixXd U;
  Bound c_l;
  Bound c_u;
  double r = 0.0;
};

enum class SpectralCase { interior, upper, lower };

struct SpectralResult {
  Eigen::MatrixXd Z;
  Vector lambda;  // eigenvalues of (U + U^T)/2, ascending
  Vector omega;   // projected eigenvalues, same order
  Eigen::MatrixXd Q;
  SpectralCase which = SpectralCase::interior;
};

/// Frobenius projection onto {Z symmetric : c_l <= tr Z <= c_u, lambda_min(Z) >= r}.
/// Requires c_u >= max(n r, c_l).
SpectralResult project_spectral(const SpectralProjection& problem);

/// Eigenvalue-level part of project_spectral.
Vector project_eigenvalues(const Vector& lambda, Bound c_l, Bound c_u, double r,
                           SpectralCase* which = nullptr);

/// Which of the three closed-form E-update cases applies to eigenvalues lambda
/// of a dual accumulator block: 1 interior, 2 upper trace active, 3 lower trace active.
int e_update_case(const Vector& lambda, double beta_tau, double rho_l, double rho_u, double r);

/// Upper-trace case. lambda: eigenvalues of s. Throws if the case does not apply.
Vector proj_sym_l(const Vector& lambda, double beta_tau, double rho_u, int k, double r);
/// Lower-trace case. Throws if the case does not apply.
Vector proj_sym_g(const Vector& lambda, double beta_tau, double rho_l, int k, double r);

/// argmin over Q = {lambda_min >= r, rho_l <= tr <= rho_u} of ||V - (rI - s/beta_tau)||_F.
Vector e_update_omega(const Vector& lambda, double beta_tau, double rho_l, double rho_u, double r);
SymBlock e_update_block(const SymBlock& s, double beta_tau, double rho_l, double rho_u, double r);

}  // namespace fmo
