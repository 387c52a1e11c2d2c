#pragma once

// Iteration driver: runs the dual-averaging loop with optional penalty and
// sigma autotuning, and streams one record per logged iteration.

#include "fmo/diagnostics.hpp"
#include "fmo/penalty.hpp"
#include "fmo/saddle.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <string>

namespace fmo {

enum class Mode { plain, penalty };

Mode parse_mode(const std::string& name);
const char* to_string(Mode m) noexcept;

struct SolverConfig {
  Mode mode = Mode::plain;
  Scheme scheme = Scheme::weighted;
  long long iterations = 1000;
  std::optional<double> tau;     // empty: 0.5; use BoundConstants::optimal_tau() for the balanced choice
  std::optional<double> sigma0;  // empty: recommended sigma from the bound constants
  int autotune_window = 0;       // 0: fixed sigma
  long long stride = 1;
  bool deterministic = false;    // wall_ns column written as 0
  ExecPolicy policy;
  int dense_threshold = dense::kDefaultThreshold;
  bool track_violation = true;   // dense compliances at logged rows (skipped above the threshold)
  ConstantOptions constants;

  void validate() const;
};

struct IterationRow {
  long long t = 0;               // steps taken
  double objective = 0.0;        // <I, E^(t)>
  double gap_estimate = 0.0;     // kappa_t + upsilon_t
  double kappa = 0.0;
  double upsilon = 0.0;
  double theoretical_bound = 0.0;
  double violation_literal = std::numeric_limits<double>::quiet_NaN();
  double violation_positive = std::numeric_limits<double>::quiet_NaN();
  double sigma = 0.0;
  double alpha = 0.0;
  long long wall_ns = 0;
  long long flops = 0;
};

using RowSink = std::function<void(const IterationRow&)>;

struct SolveResult {
  MaterialState E;               // last iterate
  DualState x;
  MaterialState E_avg;           // weighted average of visited iterates
  DualState x_avg;
  BoundConstants constants;
  double tau = 0.5;
  double sigma_final = 0.0;
  int autotune_windows = 0;
  bool autotune_cap_hit = false;
  long long iterations = 0;
  double obj0 = 0.0;
  double obj = 0.0;
  double obj_avg = 0.0;
  double cpu_seconds = 0.0;
  GapEstimate gap;
  double theoretical_bound = 0.0;
  /// Dense compliances of the last iterate; empty above the dense threshold.
  std::vector<double> compliances;
  dense::Violation violation;
  std::optional<bool> compliance_feasible;
  /// Smallest <I, E> over logged and final iterates that passed the dense compliance check.
  std::optional<double> best_feasible_objective;
  FlopCounter flops;
  FlopReport flop_summary;
};

/// Runs config.iterations steps from the standard starting point.
SolveResult solve(const ProblemInstance& inst, const SolverConfig& config, const RowSink& sink = {});

/// Same, starting from (E0, x0) with a fresh accumulator.
SolveResult solve_from(const ProblemInstance& inst, const SolverConfig& config, MaterialState E0, DualState x0,
                       const RowSink& sink = {});

/// CSV header and row in the fixed column order.
std::string csv_header();
std::string csv_row(const IterationRow& row);

}  // namespace fmo
