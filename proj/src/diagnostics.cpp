#include "fmo/diagnostics.hpp"

#include "fmo/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fmo {

double BoundConstants::optimal_tau() const {
  const double a = L_E * std::sqrt(D_x), b = L_x * std::sqrt(D_E);
  if (!(a + b > 0.0)) return 0.5;
  return std::clamp(a / (a + b), 1e-6, 1.0 - 1e-6);
}

double BoundConstants::dual_lipschitz(double tau) const { return std::sqrt(L_E2 / tau + L_x * L_x / (1.0 - tau)); }

double BoundConstants::prox_diameter(double tau) const { return tau * D_E + (1.0 - tau) * D_x; }

double BoundConstants::recommended_sigma(Scheme scheme, double tau) const {
  const double D = prox_diameter(tau);
  if (!(D > 0.0)) return 1.0;
  const double s = 1.0 / std::sqrt(2.0 * D);
  return scheme == Scheme::simple ? dual_lipschitz(tau) * s : s;
}

double B_norm_squared(const ProblemInstance& inst, const ConstantOptions& opt, int* iterations, double* residual) {
  const auto I = uniform_material(inst, 1.0);
  Vector v(inst.N);
  for (int a = 0; a < inst.N; ++a) v[a] = 1.0 + 0.5 * std::sin(1.0 + a);
  v.normalize();
  Vector w;
  double lambda = 0.0, res = 0.0;
  for (int it = 1; it <= opt.power_max_iter; ++it) {
    kernels::apply_A(inst, I, v, w);
    const double next = v.dot(w);
    res = (w - next * v).norm() / std::max(std::abs(next), 1e-300);
    const double nw = w.norm();
    if (nw == 0.0) {
      if (iterations) *iterations = it;
      if (residual) *residual = 0.0;
      return 0.0;
    }
    const bool done = it > 1 && std::abs(next - lambda) <= opt.power_tol * std::abs(next);
    lambda = next;
    v = w / nw;
    if (done) {
      if (iterations) *iterations = it;
      if (residual) *residual = res;
      return lambda;
    }
  }
  std::ostringstream os;
  os << "power iteration for ||B||_2 did not converge in " << opt.power_max_iter << " iterations (residual " << res
     << ")";
  throw Error(ErrorKind::numerical, os.str());
}

BoundConstants compute_constants(const ProblemInstance& inst, const ConstantOptions& opt) {
  inst.validate();
  BoundConstants c;
  c.m = inst.m();
  c.k = inst.k;
  c.L = inst.L();
  c.r = inst.r;
  c.gamma = inst.gamma;
  c.eta = inst.eta;
  c.nu = inst.nu;
  for (int i = 0; i < c.m; ++i) {
    const double span = inst.rho_u[std::size_t(i)] - c.k * c.r;
    c.rho_span = std::max(c.rho_span, span);
    c.D_E += 0.5 * span * span;
  }
  c.B_norm = std::sqrt(B_norm_squared(inst, opt, &c.power_iterations, &c.power_residual));
  if (inst.N <= opt.dense_threshold) {
    const Eigen::MatrixXd A = dense::assemble_A(inst, uniform_material(inst, 1.0));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A, Eigen::EigenvaluesOnly);
    const auto& ev = eig.eigenvalues();
    const double cut = 1e-12 * std::max(ev[ev.size() - 1], 1e-300);
    int first = 0;
    while (first < ev.size() && ev[first] <= cut) ++first;
    c.rank_deficient = first > 0;
    if (first < ev.size()) c.lambda_min_BtB = ev[first];
  }
  for (const auto& f : inst.loads) c.f_norm2_sum += f.squaredNorm();
  c.f_norm = std::sqrt(c.f_norm2_sum);
  const double L = c.L, B2 = c.B_norm * c.B_norm;
  c.L_E2 = c.m * c.k + L * L * (c.gamma / c.r) * B2 * c.eta * c.eta;
  c.L_E = std::sqrt(c.L_E2);
  c.L_x = 2.0 * c.f_norm + 2.0 * std::sqrt(c.gamma * L * (c.rho_span + c.r)) * c.B_norm;
  c.D_x = 0.5 * L * c.eta * c.eta;
  return c;
}

double block_support_min(const SymBlock& s, double rho_l, double rho_u, double r) {
  const int k = s.order();
  Eigen::SelfAdjointEigenSolver<BlockMatrix> eig(s.dense(), Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues()[0];
  const double base = r * s.trace();
  if (lmin > 0.0) return base + std::max(rho_l - k * r, 0.0) * lmin;
  return base + (rho_u - k * r) * lmin;
}

GapEstimate gap_estimate(const DualAccumulators& acc, const ProblemInstance& inst) {
  GapEstimate g;
  if (!(acc.sum_alpha > 0.0)) return g;
  double min_E = 0.0;
  for (int i = 0; i < inst.m(); ++i)
    min_E += block_support_min(acc.s_E.blocks[std::size_t(i)], inst.rho_l[std::size_t(i)], inst.rho_u[std::size_t(i)],
                               inst.r);
  double max_x = 0.0;
  for (const auto& s : acc.s_x.vectors) max_x += inst.eta * s.norm();
  g.kappa = (acc.sum_gE_dot_E - min_E) / acc.sum_alpha;
  g.upsilon = (max_x - acc.sum_gx_dot_x) / acc.sum_alpha;
  return g;
}

double bound_prefactor(long long t) { return (0.37 + std::sqrt(2.0 * double(t) + 1.0)) / (double(t) + 1.0); }

double theoretical_gap_bound(const BoundConstants& c, long long t, Scheme) {
  const double L = c.L, B2 = c.B_norm * c.B_norm;
  const double eterm = std::sqrt((c.m * c.k + (c.gamma / c.r) * L * L * B2 * c.eta * c.eta) * c.m) * c.rho_span;
  const double xterm = 2.0 * (c.f_norm + std::sqrt(c.gamma * L * (c.rho_span + c.r)) * c.B_norm) * std::sqrt(L) * c.eta;
  return bound_prefactor(t) * (eterm + xterm);
}

std::optional<double> weighted_bound_reference(const BoundConstants& c, long long t, std::optional<double> d_star) {
  if (!d_star) return std::nullopt;
  const double d = *d_star, L = c.L, B2 = c.B_norm * c.B_norm;
  const double fx = c.f_norm + std::sqrt(c.gamma * L * (c.rho_span + c.r)) * c.B_norm;
  const double inner = c.m * c.k + 8.0 * (3.0 + std::sqrt(2.0)) * (c.gamma / c.r) * L * B2 * d + 4.0 * fx * fx;
  return (4.0 * std::sqrt(2.0) + 2.0) * beta_hat(t + 1) * std::sqrt(d) / (double(t) + 1.0) * std::sqrt(inner);
}

std::optional<double> penalty_bound_term(const BoundConstants& c, long long t) {
  if (!c.lambda_min_BtB) return std::nullopt;
  return bound_prefactor(t) * std::sqrt(double(c.m)) * c.rho_span * c.nu / (c.r * c.r * *c.lambda_min_BtB) *
         c.f_norm2_sum;
}

double prox_distance(const ProblemInstance& inst, const MaterialState& E, const DualState& x, double tau) {
  double dE = 0.0;
  for (const auto& b : E.blocks) {
    SymBlock d = b;
    d.add_identity(-inst.r);
    dE += d.norm2();
  }
  return 0.5 * tau * dE + 0.5 * (1.0 - tau) * x.norm2();
}

std::string Certificate::summary() const {
  std::ostringstream os;
  if (interior) {
    os << "all ||x_j|| < eta: E is a solution certificate";
    return os.str();
  }
  os << "violation sum " << lhs;
  if (rhs_literal) os << ", bound (literal) " << *rhs_literal;
  if (rhs_corrected) os << ", bound (corrected) " << *rhs_corrected;
  if (rhs_penalty_literal) os << ", penalized bound (literal) " << *rhs_penalty_literal;
  if (rhs_penalty_corrected) os << ", penalized bound (corrected) " << *rhs_penalty_corrected;
  return os.str();
}

Certificate approximation_certificate(const ProblemInstance& inst, const MaterialState& E, const DualState& x,
                                      double F_star_upper, const BoundConstants& c, int threshold) {
  Certificate cert;
  cert.interior = true;
  for (const auto& v : x.vectors) cert.interior = cert.interior && v.norm() < inst.eta * (1.0 - 1e-12);
  cert.compliances = dense::compliances(inst, E, threshold);
  const double sg = std::sqrt(inst.gamma);
  for (int j = 0; j < inst.L(); ++j) {
    const double cj = cert.compliances[std::size_t(j)];
    if (cj > inst.gamma) {
      cert.violated.push_back(j);
      cert.lhs += std::sqrt(cj) - sg;
    }
  }
  double sum_rho_l = 0.0;
  for (double v : inst.rho_l) sum_rho_l += v;
  cert.F_star_upper = F_star_upper;
  cert.objective_gap = F_star_upper - sum_rho_l;
  cert.lambda_min = c.lambda_min_BtB;
  if (!c.lambda_min_BtB) return cert;
  const double lam = *c.lambda_min_BtB, g = cert.objective_gap, eta = inst.eta;
  const double lit = inst.r * lam, cor = std::sqrt(inst.r * lam);
  cert.rhs_literal = g / (2.0 * lit * eta);
  cert.rhs_corrected = g / (2.0 * cor * eta);
  if (inst.nu > 0.0 && !cert.violated.empty() && g > 0.0) {
    const double W = double(cert.violated.size());
    auto pen = [&](double factor) {
      return 1.0 / (std::sqrt(inst.nu / (g * W) + factor * factor * eta * eta / (g * g)) + factor * eta / g);
    };
    cert.rhs_penalty_literal = pen(lit);
    cert.rhs_penalty_corrected = pen(cor);
  }
  return cert;
}

std::string FlopReport::summary() const {
  std::ostringstream os;
  os << "flops/iteration: measured " << per_iteration << " (fused " << per_iteration_fused << ", update "
     << per_iteration_update << ", dense " << per_iteration_dense << "); sparse model " << model_sparse
     << ", dense-B model " << model_dense_B << ", factorization model " << model_factorization;
  return os.str();
}

FlopReport flop_report(const FlopCounter& counters, long long iterations, const ProblemInstance& inst) {
  FlopReport r;
  r.iterations = iterations;
  if (iterations > 0) {
    const double it = double(iterations);
    r.per_iteration = double(counters.total()) / it;
    r.per_iteration_fused = double(counters.fused + counters.apply) / it;
    r.per_iteration_update = double(counters.update) / it;
    r.per_iteration_dense = double(counters.dense) / it;
  }
  const double k = inst.k, L = inst.L(), nig = inst.nig();
  for (const auto& el : inst.elements) r.model_sparse += L * nig * (4.0 * k * el.support() + 3.0 * k * k + 3.0 * k);
  r.model_dense_B = 6.0 * k * L * nig * inst.m() * double(inst.N);
  r.model_factorization = std::pow(double(inst.N), 3) / 3.0;
  return r;
}

}  // namespace fmo
