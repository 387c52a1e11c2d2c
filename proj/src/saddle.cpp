#include "fmo/saddle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fmo {

namespace {

long long packed(const ProblemInstance& inst) { return (long long)inst.k * (inst.k + 1) / 2; }

}  // namespace

Scheme parse_scheme(const std::string& name) {
  if (name == "simple") return Scheme::simple;
  if (name == "weighted") return Scheme::weighted;
  throw Error(ErrorKind::invalid_input, "unknown scheme '" + name + "' (simple, weighted)");
}

const char* to_string(Scheme s) noexcept { return s == Scheme::simple ? "simple" : "weighted"; }

double Subgradient::dual_norm(double tau) const { return std::sqrt(gE.norm2() / tau + gx.norm2() / (1.0 - tau)); }

Subgradient subgradient(const ProblemInstance& inst, const MaterialState& E, const DualState& x,
                        const ExecPolicy& policy, FlopCounter* flops) {
  check_dimensions(inst, E);
  check_dimensions(inst, x);
  const int m = inst.m(), L = inst.L();
  FusedPass pass;
  kernels::fused_pass(inst, E, x, pass, policy, flops);

  Subgradient g;
  g.quad = pass.quad;
  g.active.assign(std::size_t(L), 0);
  const double sg = std::sqrt(inst.gamma);
  std::vector<double> coef(std::size_t(L), 0.0);
  g.value = E.trace();
  for (int j = 0; j < L; ++j) {
    const std::size_t js = std::size_t(j);
    const Vector& xj = x.vectors[js];
    const double xx = xj.squaredNorm();
    double& q = g.quad[js];
    if (q < 0.0 && q >= -1e-12 * std::max(1.0, xx)) q = 0.0;
    const bool in_R = q > kActiveQuadTol * xx;
    g.active[js] = in_R;
    if (in_R) coef[js] = sg / std::sqrt(q);
    g.value += 2.0 * (inst.loads[js].dot(xj) - sg * std::sqrt(std::max(q, 0.0)));
    g.inactive_loads += !in_R;
  }

  g.gE.blocks.assign(std::size_t(m), SymBlock::identity(inst.k));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < L; ++j)
      if (g.active[std::size_t(j)])
        g.gE.blocks[std::size_t(i)].axpy(-coef[std::size_t(j)], pass.outer[std::size_t(i) * std::size_t(L) + std::size_t(j)]);

  g.gx.vectors.resize(std::size_t(L));
  for (int j = 0; j < L; ++j) {
    const std::size_t js = std::size_t(j);
    g.gx.vectors[js] = 2.0 * inst.loads[js];
    if (g.active[js]) g.gx.vectors[js].noalias() -= (2.0 * coef[js]) * pass.Ax[js];
  }
  if (flops) {
    long long active = 0;
    for (char a : g.active) active += a;
    flops->update += m * active * 2 * packed(inst) + L * 4LL * inst.N;
  }
  return g;
}

MaterialState subgrad_E(const ProblemInstance& inst, const MaterialState& E, const DualState& x) {
  return subgradient(inst, E, x).gE;
}

DualState subgrad_x(const ProblemInstance& inst, const MaterialState& E, const DualState& x) {
  return subgradient(inst, E, x).gx;
}

double saddle_value(const ProblemInstance& inst, const MaterialState& E, const DualState& x) {
  return subgradient(inst, E, x).value;
}

double beta_hat(long long t) {
  if (t < 0) throw Error(ErrorKind::invalid_input, "beta_hat index must be nonnegative");
  double b = 1.0;
  for (long long s = 1; s < t; ++s) b += 1.0 / b;
  return b;
}

void StepSchedule::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorKind::invalid_input, "tau must lie in (0, 1)");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error(ErrorKind::invalid_input, "sigma must be positive");
}

DualAccumulators DualAccumulators::zeros(const ProblemInstance& inst) {
  DualAccumulators acc;
  acc.s_E.blocks.assign(std::size_t(inst.m()), SymBlock(inst.k));
  acc.E_avg_accum = acc.s_E;
  acc.s_x.vectors.assign(std::size_t(inst.L()), Vector::Zero(inst.N));
  acc.x_avg_accum = acc.s_x;
  return acc;
}

void starting_point(const ProblemInstance& inst, MaterialState& E, DualState& x) {
  E.blocks.clear();
  for (int i = 0; i < inst.m(); ++i) E.blocks.push_back(SymBlock::identity(inst.k, inst.rho_u[std::size_t(i)] / inst.k));
  x.vectors.assign(std::size_t(inst.L()), Vector::Constant(inst.N, inst.eta / std::sqrt(double(inst.N))));
}

void update_x(const ProblemInstance& inst, const DualState& s_x, double beta, double tau, DualState& x,
              FlopCounter* flops) {
  x.vectors.resize(s_x.vectors.size());
  const double cap = 1.0 / (beta * (1.0 - tau));
  for (std::size_t j = 0; j < s_x.vectors.size(); ++j) {
    const Vector& s = s_x.vectors[j];
    const double ns = s.norm();
    const double c = ns > 0.0 ? std::min(inst.eta / ns, cap) : 0.0;
    x.vectors[j] = -c * s;
  }
  if (flops) flops->update += inst.L() * 3LL * inst.N;
}

StepRecord da_step(const ProblemInstance& inst, DualAccumulators& acc, StepSchedule& sched, MaterialState& E,
                   DualState& x, const StepOptions& opt, FlopCounter* flops) {
  Subgradient g = subgradient(inst, E, x, opt.policy, flops);
  StepRecord rec;
  rec.t = sched.t;
  rec.sigma = sched.sigma;
  rec.value = g.value;
  rec.inactive_loads = g.inactive_loads;
  if (opt.extra) rec.value += opt.extra->add_gradient(inst, E, g.gE, flops);

  rec.gnorm = g.dual_norm(sched.tau);
  if (!std::isfinite(rec.gnorm)) throw Error(ErrorKind::numerical, "non-finite subgradient");
  if (sched.scheme == Scheme::weighted) {
    if (rec.gnorm == 0.0) throw Error(ErrorKind::numerical, "zero subgradient: weighted step undefined");
    rec.alpha = 1.0 / rec.gnorm;
  } else {
    rec.alpha = 1.0;
  }
  const double a = rec.alpha;

  // running sums use the iterate the subgradient was taken at
  acc.sum_alpha += a;
  acc.sum_gE_dot_E += a * g.gE.dot(E);
  acc.sum_gx_dot_x += a * g.gx.dot(x);
  acc.sum_alpha2_g2_over_beta += a * a * rec.gnorm * rec.gnorm / sched.beta();
  for (int i = 0; i < inst.m(); ++i) {
    acc.E_avg_accum.blocks[std::size_t(i)].axpy(a, E.blocks[std::size_t(i)]);
    acc.s_E.blocks[std::size_t(i)].axpy(a, g.gE.blocks[std::size_t(i)]);
  }
  for (int j = 0; j < inst.L(); ++j) {
    acc.x_avg_accum.vectors[std::size_t(j)] += a * x.vectors[std::size_t(j)];
    acc.s_x.vectors[std::size_t(j)] -= a * g.gx.vectors[std::size_t(j)];
  }
  if (flops) flops->update += inst.m() * 6LL * packed(inst) + inst.L() * 6LL * inst.N;

  sched.advance();
  rec.beta = sched.beta();
  update_x(inst, acc.s_x, rec.beta, sched.tau, x, flops);
  kernels::update_blocks(inst, acc.s_E, rec.beta * sched.tau, E, opt.policy, flops);
  rec.objective = E.trace();
  return rec;
}

MaterialState averaged_primal(const DualAccumulators& acc) {
  if (!(acc.sum_alpha > 0.0)) throw Error(ErrorKind::invalid_input, "averaged iterate requested before the first step");
  MaterialState out = acc.E_avg_accum;
  for (auto& b : out.blocks) b *= 1.0 / acc.sum_alpha;
  return out;
}

DualState averaged_dual(const DualAccumulators& acc) {
  if (!(acc.sum_alpha > 0.0)) throw Error(ErrorKind::invalid_input, "averaged iterate requested before the first step");
  DualState out = acc.x_avg_accum;
  for (auto& v : out.vectors) v /= acc.sum_alpha;
  return out;
}

SigmaController::SigmaController(double sigma0, int window, int max_windows)
    : sigma0_(sigma0), sigma_(sigma0), window_(window), max_windows_(max_windows) {
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw Error(ErrorKind::invalid_input, "sigma0 must be positive");
  if (window < 10) throw Error(ErrorKind::invalid_input, "autotune window must be at least 10 steps");
  if (max_windows < 0) throw Error(ErrorKind::invalid_input, "window cap must be nonnegative");
}

int SigmaController::window_cap(double L, double sigma0, double D) {
  if (!(L > 0.0) || !(sigma0 > 0.0) || !(D > 0.0)) return 1;
  const double c = std::ceil(2.5 + std::log2(L / (sigma0 * std::sqrt(D))));
  if (!std::isfinite(c)) return 1;
  return std::max(1, int(std::min(c, 1e6)));
}

double SigmaController::rate(double start, double end) {
  const double d = std::abs(start);
  return d > 0.0 ? (start - end) / d : 0.0;
}

double SigmaController::end_window(double r) {
  if (phase_ == Phase::frozen) return sigma_;
  rates_.push_back(r);
  const std::size_t n = rates_.size();
  if (n >= 2 && r < rates_[n - 2]) {
    sigma_ /= 2.0;
    --v_;
    phase_ = Phase::frozen;
  } else if (max_windows_ > 0 && int(n) >= max_windows_) {
    phase_ = Phase::frozen;
    cap_hit_ = true;
  } else {
    sigma_ *= 2.0;
    ++v_;
  }
  return sigma_;
}

}  // namespace fmo
