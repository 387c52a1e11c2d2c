#include "fmo/solver.hpp"

#include "fmo/instance_io.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace fmo {

Mode parse_mode(const std::string& name) {
  if (name == "plain") return Mode::plain;
  if (name == "penalty") return Mode::penalty;
  throw Error(ErrorKind::invalid_input, "unknown mode '" + name + "' (plain, penalty)");
}

const char* to_string(Mode m) noexcept { return m == Mode::plain ? "plain" : "penalty"; }

void SolverConfig::validate() const {
  if (iterations < 1) throw Error(ErrorKind::invalid_input, "iterations must be at least 1");
  if (stride < 1) throw Error(ErrorKind::invalid_input, "stride must be at least 1");
  if (tau && !(*tau > 0.0 && *tau < 1.0)) throw Error(ErrorKind::invalid_input, "tau must lie in (0, 1)");
  if (sigma0 && !(*sigma0 > 0.0 && std::isfinite(*sigma0)))
    throw Error(ErrorKind::invalid_input, "sigma0 must be positive");
  if (autotune_window != 0 && autotune_window < 10)
    throw Error(ErrorKind::invalid_input, "autotune window must be 0 (off) or at least 10");
  if (dense_threshold < 1) throw Error(ErrorKind::invalid_input, "dense threshold must be positive");
}

SolveResult solve(const ProblemInstance& inst, const SolverConfig& config, const RowSink& sink) {
  MaterialState E;
  DualState x;
  starting_point(inst, E, x);
  return solve_from(inst, config, std::move(E), std::move(x), sink);
}

SolveResult solve_from(const ProblemInstance& inst, const SolverConfig& config, MaterialState E0, DualState x0,
                       const RowSink& sink) {
  config.validate();
  inst.validate();
  check_dimensions(inst, E0);
  check_dimensions(inst, x0);
  if (inst.nu == 0.0 && config.mode == Mode::penalty)
    throw Error(ErrorKind::invalid_input, "penalty mode needs nu > 0");
  if (config.mode == Mode::penalty) dense::require_small(inst, config.dense_threshold, "penalty mode");

  SolveResult res;
  res.constants = compute_constants(inst, config.constants);
  res.tau = config.tau.value_or(0.5);
  const double sigma0 = config.sigma0.value_or(res.constants.recommended_sigma(config.scheme, res.tau));

  std::optional<SigmaController> tuner;
  if (config.autotune_window > 0) {
    const int cap = SigmaController::window_cap(res.constants.dual_lipschitz(res.tau), sigma0,
                                                res.constants.prox_diameter(res.tau));
    tuner.emplace(sigma0, config.autotune_window, cap);
  }

  StepSchedule sched{config.scheme, res.tau, sigma0};
  sched.validate();
  auto acc = DualAccumulators::zeros(inst);
  res.E = std::move(E0);
  res.x = std::move(x0);
  res.obj0 = res.E.trace();

  CompliancePenalty penalty(config.dense_threshold);
  StepOptions opt;
  opt.policy = config.policy;
  if (config.mode == Mode::penalty) opt.extra = &penalty;
  const bool violation = config.track_violation && inst.N <= config.dense_threshold;

  auto bound_at = [&](long long steps) {
    double b = theoretical_gap_bound(res.constants, steps - 1, config.scheme);
    if (config.mode == Mode::penalty)
      if (const auto p = penalty_bound_term(res.constants, steps - 1)) b += *p;
    return b;
  };

  auto note_feasible = [&](double obj) {
    if (!res.best_feasible_objective || obj < *res.best_feasible_objective) res.best_feasible_objective = obj;
  };

  const auto start = std::chrono::steady_clock::now();
  double window_start_gap = 0.0;
  for (long long step = 1; step <= config.iterations; ++step) {
    const StepRecord rec = da_step(inst, acc, sched, res.E, res.x, opt, &res.flops);
    const bool log = sink && (step % config.stride == 0 || step == config.iterations);
    GapEstimate gap;
    if (log || tuner) gap = gap_estimate(acc, inst);

    if (tuner && tuner->phase() == SigmaController::Phase::growing) {
      if (step == 1) window_start_gap = gap.total();
      if (step % tuner->window() == 0) {
        sched.sigma = tuner->end_window(SigmaController::rate(window_start_gap, gap.total()));
        window_start_gap = gap.total();
      }
    }

    if (log) {
      IterationRow row;
      row.t = step;
      row.objective = rec.objective;
      row.kappa = gap.kappa;
      row.upsilon = gap.upsilon;
      row.gap_estimate = gap.total();
      row.theoretical_bound = bound_at(step);
      if (violation) {
        const auto v = dense::violation(dense::compliances(inst, res.E, config.dense_threshold), inst.gamma);
        row.violation_literal = v.literal;
        row.violation_positive = v.positive;
        if (v.positive == 0.0) note_feasible(rec.objective);
      }
      row.sigma = rec.sigma;
      row.alpha = rec.alpha;
      row.wall_ns = config.deterministic
                        ? 0
                        : std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start)
                              .count();
      row.flops = res.flops.total();
      sink(row);
    }
  }
  res.cpu_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  res.iterations = config.iterations;
  res.sigma_final = sched.sigma;
  if (tuner) {
    res.autotune_windows = tuner->windows_done();
    res.autotune_cap_hit = tuner->cap_hit();
  }
  res.obj = res.E.trace();
  res.E_avg = averaged_primal(acc);
  res.x_avg = averaged_dual(acc);
  res.obj_avg = res.E_avg.trace();
  res.gap = gap_estimate(acc, inst);
  res.theoretical_bound = bound_at(config.iterations);
  if (inst.N <= config.dense_threshold) {
    res.compliances = dense::compliances(inst, res.E, config.dense_threshold);
    res.violation = dense::violation(res.compliances, inst.gamma);
    bool ok = true;
    for (double c : res.compliances) ok = ok && c <= inst.gamma * (1.0 + 1e-9);
    res.compliance_feasible = ok;
    if (ok) note_feasible(res.obj);
  }
  res.flop_summary = flop_report(res.flops, res.iterations, inst);
  return res;
}

std::string csv_header() {
  return "t,objective,gap_estimate,theoretical_bound,violation_literal,violation_positive,sigma,alpha,wall_ns,flops";
}

std::string csv_row(const IterationRow& r) {
  auto num = [](double v) { return std::isnan(v) ? std::string("nan") : io::format_double(v); };
  std::ostringstream os;
  os << r.t << ',' << num(r.objective) << ',' << num(r.gap_estimate) << ',' << num(r.theoretical_bound) << ','
     << num(r.violation_literal) << ',' << num(r.violation_positive) << ',' << num(r.sigma) << ',' << num(r.alpha)
     << ',' << r.wall_ns << ',' << r.flops;
  return os.str();
}

}  // namespace fmo
