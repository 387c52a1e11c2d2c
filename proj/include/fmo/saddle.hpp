#pragma once

// Primal-dual subgradient (dual averaging) method for
//   min_{E in Q} max_{||x_j|| <= eta} F(E, x),
//   F(E, x) = sum_i tr E_i + sum_j 2 (<f_j, x_j> - sqrt(gamma) <A(E) x_j, x_j>^{1/2}).

#include "fmo/kernels.hpp"
#include "fmo/types.hpp"

#include <string>
#include <vector>

namespace fmo {

/// Relative threshold for membership in R = {j : <A(E)x_j, x_j> > 0}.
inline constexpr double kActiveQuadTol = 1e-14;

enum class Scheme { simple, weighted };

Scheme parse_scheme(const std::string& name);
const char* to_string(Scheme s) noexcept;

/// Subgradient of F at (E, x) plus the by-products the step and the logs need.
struct Subgradient {
  MaterialState gE;
  DualState gx;
  std::vector<double> quad;     // <A(E) x_j, x_j>, clamped at roundoff level
  std::vector<char> active;     // j in R
  double value = 0.0;           // F(E, x)
  int inactive_loads = 0;       // loads outside R; their g_x is 2 f_j

  /// ||(gE, gx)||_* = sqrt(||gE||^2 / tau + ||gx||^2 / (1 - tau))
  double dual_norm(double tau) const;
};

Subgradient subgradient(const ProblemInstance& inst, const MaterialState& E, const DualState& x,
                        const ExecPolicy& policy = {}, FlopCounter* flops = nullptr);

MaterialState subgrad_E(const ProblemInstance& inst, const MaterialState& E, const DualState& x);
DualState subgrad_x(const ProblemInstance& inst, const MaterialState& E, const DualState& x);
double saddle_value(const ProblemInstance& inst, const MaterialState& E, const DualState& x);

/// Extra smooth term added to F in E only (the compliance penalty uses this).
class ObjectiveTerm {
 public:
  virtual ~ObjectiveTerm() = default;
  /// Adds the term's gradient to gE and returns the term's value at E.
  virtual double add_gradient(const ProblemInstance& inst, const MaterialState& E, MaterialState& gE,
                              FlopCounter* flops) = 0;
};

/// beta-hat recurrence: b_0 = b_1 = 1, b_{t+1} = b_t + 1/b_t.
double beta_hat(long long t);

struct StepSchedule {
  Scheme scheme = Scheme::weighted;
  double tau = 0.5;
  double sigma = 1.0;
  double beta_hat = 1.0;  // beta-hat of the current iterate t
  long long t = 0;        // steps taken so far

  double beta() const noexcept { return sigma * beta_hat; }
  double next_beta_hat() const noexcept { return t == 0 ? 1.0 : beta_hat + 1.0 / beta_hat; }
  void advance() noexcept {
    beta_hat = next_beta_hat();
    ++t;
  }
  void validate() const;
};

struct DualAccumulators {
  MaterialState s_E;
  DualState s_x;
  double sum_alpha = 0.0;
  double sum_gE_dot_E = 0.0;   // sum alpha_l <g_E, E^(l)>
  double sum_gx_dot_x = 0.0;   // sum alpha_l <g_x, x^(l)>
  MaterialState E_avg_accum;   // sum alpha_l E^(l)
  DualState x_avg_accum;       // sum alpha_l x^(l)
  double sum_alpha2_g2_over_beta = 0.0;  // sum alpha_l^2 ||g_l||_*^2 / beta_l

  static DualAccumulators zeros(const ProblemInstance& inst);
};

/// E_i = (rho_u^(i) / k) I and x_j constant with ||x_j|| = eta.
void starting_point(const ProblemInstance& inst, MaterialState& E, DualState& x);

/// x_j = -min(eta / ||s_j||, 1 / (beta (1 - tau))) s_j
void update_x(const ProblemInstance& inst, const DualState& s_x, double beta, double tau, DualState& x,
              FlopCounter* flops = nullptr);

struct StepOptions {
  ExecPolicy policy;
  ObjectiveTerm* extra = nullptr;
};

struct StepRecord {
  long long t = 0;          // index of the iterate the subgradient was taken at
  double alpha = 0.0;
  double beta = 0.0;        // beta_{t+1} used for the new iterate
  double sigma = 0.0;
  double value = 0.0;       // F (plus the extra term) at the old iterate
  double objective = 0.0;   // <I, E> of the new iterate
  double gnorm = 0.0;       // ||g||_*
  int inactive_loads = 0;
};

/// One dual-averaging step. Accumulators are updated with the old iterate
/// before E and x are replaced.
StepRecord da_step(const ProblemInstance& inst, DualAccumulators& acc, StepSchedule& sched, MaterialState& E,
                   DualState& x, const StepOptions& opt = {}, FlopCounter* flops = nullptr);

/// (sum alpha_l E^(l)) / sum alpha_l. Throws before the first step.
MaterialState averaged_primal(const DualAccumulators& acc);
DualState averaged_dual(const DualAccumulators& acc);

/// Doubling search for sigma: one test window of w steps per value, doubling
/// while the monitored rate improves, then one halving and freeze.
class SigmaController {
 public:
  enum class Phase { growing, frozen };

  SigmaController(double sigma0, int window, int max_windows = 0);

  /// ceil(5/2 + log2(L / (sigma0 sqrt(D)))), at least 1.
  static int window_cap(double L, double sigma0, double D);
  /// Relative decrease (start - end) / |start| of a monitored quantity.
  static double rate(double start, double end);

  double sigma() const noexcept { return sigma_; }
  double sigma0() const noexcept { return sigma0_; }
  int window() const noexcept { return window_; }
  int doublings() const noexcept { return v_; }
  Phase phase() const noexcept { return phase_; }
  int windows_done() const noexcept { return int(rates_.size()); }
  bool cap_hit() const noexcept { return cap_hit_; }
  const std::vector<double>& rates() const noexcept { return rates_; }

  /// Reports the rate observed over the window just finished; returns the sigma for the next window.
  double end_window(double rate);

 private:
  double sigma0_;
  double sigma_;
  int window_;
  int max_windows_;
  int v_ = 0;
  Phase phase_ = Phase::growing;
  bool cap_hit_ = false;
  std::vector<double> rates_;
};

}  // namespace fmo
