#include "fmo/proj.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace fmo {

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorKind::invalid_input, msg); }

void check_bounds(const Bound& c_l, const Bound& c_u) {
  if (c_l && !std::isfinite(*c_l)) invalid("lower bound must be finite or absent");
  if (c_u && !std::isfinite(*c_u)) invalid("upper bound must be finite or absent");
  if (c_l && c_u && *c_l > *c_u) invalid("lower bound exceeds upper bound");
}

// Stable insertion sort of idx by key. Counts every comparison and every shift.
void counted_sort(std::vector<int>& idx, const std::vector<double>& key, bool descending, long long& ops) {
  for (std::size_t i = 1; i < idx.size(); ++i) {
    const int cur = idx[i];
    std::size_t j = i;
    while (j > 0) {
      ++ops;
      const double prev = key[idx[j - 1]];
      const bool swap = descending ? prev < key[cur] : prev > key[cur];
      if (!swap) break;
      idx[j] = idx[j - 1];
      ++ops;
      --j;
    }
    idx[j] = cur;
  }
}

}  // namespace

void BoxTraceLS::validate() const {
  const auto n = b.size();
  if (a_diag.size() != n || w.size() != n || r_lb.size() != n) {
    throw Error(ErrorKind::dimension_mismatch, "a_diag, b, w and r_lb must share one length");
  }
  if (!a_diag.allFinite() || !b.allFinite() || !w.allFinite() || !r_lb.allFinite()) {
    invalid("least squares data must be finite");
  }
  check_bounds(c_l, c_u);
}

Vector LsReduction::recover(const Vector& y) const {
  if (y.size() != Eigen::Index(active.size())) {
    throw Error(ErrorKind::dimension_mismatch, "reduced solution has wrong length");
  }
  Vector z = z_fixed;
  for (std::size_t k = 0; k < active.size(); ++k) {
    const int i = active[k];
    z[i] = shift[i] + y[Eigen::Index(k)] / scale[i];
  }
  return z;
}

LsReduction reduce_ls(const BoxTraceLS& p) {
  p.validate();
  const int n = p.n();
  LsReduction red;
  red.z_fixed = Vector::Zero(n);
  red.fixed.assign(std::size_t(n), 0);
  red.scale = Vector::Ones(n);
  red.shift = p.r_lb;

  // Zero-cost variables start at their lower bounds. At most one of them moves,
  // and only if the free variables alone cannot reach the trace window.
  double s_star = 0.0;
  double t0 = 0.0;
  int first_pos = -1, first_neg = -1;
  for (int i = 0; i < n; ++i) {
    if (p.a_diag[i] != 0.0) {
      s_star += p.w[i] * std::max(p.b[i] / p.a_diag[i], p.r_lb[i]);
    } else {
      red.fixed[i] = 1;
      red.z_fixed[i] = p.r_lb[i];
      t0 += p.w[i] * p.r_lb[i];
      if (p.w[i] > 0.0 && first_pos < 0) first_pos = i;
      if (p.w[i] < 0.0 && first_neg < 0) first_neg = i;
    }
  }
  if (p.c_l && first_pos >= 0 && t0 < *p.c_l - s_star) {
    red.z_fixed[first_pos] += (*p.c_l - s_star - t0) / p.w[first_pos];
  } else if (p.c_u && first_neg >= 0 && t0 > *p.c_u - s_star) {
    red.z_fixed[first_neg] += (t0 - (*p.c_u - s_star)) / -p.w[first_neg];
  }

  double offset = 0.0;  // <w, z> contributed by fixed variables and shifts
  std::vector<double> bs, ws;
  for (int i = 0; i < n; ++i) {
    if (red.fixed[i]) {
      offset += p.w[i] * red.z_fixed[i];
      continue;
    }
    double a = p.a_diag[i], b = p.b[i];
    if (a < 0.0) {
      a = -a;
      b = -b;
    }
    red.scale[i] = a;
    const double b_std = b - a * p.r_lb[i];
    const double w_std = p.w[i] / a;
    offset += p.w[i] * p.r_lb[i];
    if (w_std == 0.0) {
      red.fixed[i] = 1;
      red.z_fixed[i] = p.r_lb[i] + std::max(b_std, 0.0) / a;
      continue;
    }
    red.active.push_back(i);
    bs.push_back(b_std);
    ws.push_back(w_std);
  }
  red.problem.b = Eigen::Map<Vector>(bs.data(), Eigen::Index(bs.size()));
  red.problem.w = Eigen::Map<Vector>(ws.data(), Eigen::Index(ws.size()));
  if (p.c_l) red.problem.c_l = *p.c_l - offset;
  if (p.c_u) red.problem.c_u = *p.c_u - offset;
  return red;
}

LsSolution solve_box_trace_ls(const StandardLS& p) {
  const int n = p.n();
  if (p.w.size() != n) throw Error(ErrorKind::dimension_mismatch, "b and w must share one length");
  if (!p.b.allFinite() || !p.w.allFinite()) invalid("least squares data must be finite");
  check_bounds(p.c_l, p.c_u);

  bool any_pos = false, any_neg = false, unit = true;
  for (int i = 0; i < n; ++i) {
    if (p.w[i] == 0.0) invalid("standardized problem requires nonzero weights");
    any_pos |= p.w[i] > 0.0;
    any_neg |= p.w[i] < 0.0;
    unit &= p.w[i] == 1.0;
  }
  // Bounds within roundoff of zero are what a reduction leaves behind when a
  // free variable absorbed the constraint; treat them as zero.
  const double slack = 1e-12 * (1.0 + p.b.cwiseAbs().dot(p.w.cwiseAbs()));
  if ((p.c_u && *p.c_u < -slack && !any_neg) || (p.c_l && *p.c_l > slack && !any_pos)) {
    throw Error(ErrorKind::infeasible, "no nonnegative point satisfies the inner-product bounds");
  }

  LsSolution sol;
  long long& ops = sol.ops;
  sol.z = Vector::Zero(n);

  // wb[i] = w_i b_i for b_i >= 0, reused when i enters S.
  std::vector<double> wb(std::size_t(n), 0.0);
  double wbp = 0.0;
  bool first = true;
  for (int i = 0; i < n; ++i) {
    ++ops;
    if (p.b[i] >= 0.0) {
      wb[i] = unit ? p.b[i] : p.w[i] * p.b[i];
      if (!unit) ++ops;
      wbp = first ? wb[i] : wbp + wb[i];
      if (!first) ++ops;
      first = false;
    }
  }
  std::vector<int> s1, s2, s3, s4;
  for (int i = 0; i < n; ++i) {
    const bool pos_b = p.b[i] >= 0.0;
    if (!unit) ++ops;
    if (p.w[i] > 0.0) {
      (pos_b ? s1 : s2).push_back(i);
    } else {
      (pos_b ? s3 : s4).push_back(i);
    }
  }

  ops += 2;
  const bool above = p.c_u && wbp > *p.c_u;
  const bool below = p.c_l && wbp < *p.c_l;
  if (!above && !below) {
    for (int i = 0; i < n; ++i) sol.z[i] = std::max(p.b[i], 0.0);
    return sol;
  }
  sol.branch = above ? LsBranch::upper : LsBranch::lower;

  // Upper: S starts at S3, scans S1 (ratio descending) and S4 (ascending).
  // Lower: S starts at S1, scans S2 (descending) and S3 (ascending).
  const std::vector<int>& init = above ? s3 : s1;
  std::vector<int> desc = above ? s1 : s2;
  std::vector<int> asc = above ? s4 : s3;
  const double c = above ? *p.c_u : *p.c_l;

  std::vector<double> key(std::size_t(n), 0.0);
  for (const auto* set : {&desc, &asc}) {
    for (int i : *set) {
      if (unit) {
        key[i] = p.b[i];
      } else {
        key[i] = p.b[i] / p.w[i];
        ++ops;
      }
    }
  }
  counted_sort(desc, key, true, ops);
  counted_sort(asc, key, false, ops);

  std::vector<char> in_s(std::size_t(n), 0);
  double t = -c;
  double v = 0.0;
  ++ops;
  // With unit weights v is just the size of S and costs nothing to maintain.
  auto admit = [&](int i) {
    in_s[i] = 1;
    if (p.b[i] >= 0.0) {
      t += wb[i];
      ops += 1;
    } else {
      t += unit ? p.b[i] : p.w[i] * p.b[i];
      ops += unit ? 1 : 2;
    }
    v += unit ? 1.0 : p.w[i] * p.w[i];
    if (!unit) ops += 2;
  };
  for (int i : init) admit(i);

  // Each scan is rerun only after the other one enlarged S. With S empty and
  // t = 0 (a zero bound) both strict tests tie; the first candidate enters with z_i = 0.
  auto tied = [&] { return v == 0.0 && t == 0.0; };
  std::size_t j = 0, l = 0;
  bool need_desc = true, need_asc = true;
  while (need_desc || need_asc) {
    if (need_desc) {
      need_desc = false;
      while (j < desc.size()) {
        ops += 2;
        if (!(v * key[desc[j]] > t) && !tied()) break;
        admit(desc[j++]);
        need_asc = true;
      }
    }
    if (need_asc) {
      need_asc = false;
      while (l < asc.size()) {
        ops += 2;
        if (!(v * key[asc[l]] < t) && !tied()) break;
        admit(asc[l++]);
        need_desc = true;
      }
    }
  }

  double theta;
  if (v > 0.0) {
    theta = t / v;
    ++ops;
    for (int i = 0; i < n; ++i) {
      if (!in_s[i]) continue;
      sol.z[i] = std::max(unit ? p.b[i] - theta : p.b[i] - theta * p.w[i], 0.0);
      ops += unit ? 1 : 2;
    }
  } else {
    // S empty: the bound is exactly zero and z = 0; pick a consistent multiplier.
    // Any theta with max(desc keys) <= theta <= min(asc keys) works.
    theta = 0.0;
    if (above) {
      for (int i : desc) theta = std::max(theta, key[i]);
    } else {
      for (int i : asc) theta = std::min(theta, key[i]);
    }
  }
  if (above) {
    sol.lambda_u = std::max(2.0 * theta, 0.0);
  } else {
    sol.lambda_l = std::max(-2.0 * theta, 0.0);
  }
  return sol;
}

Vector solve_ls(const BoxTraceLS& problem) {
  const LsReduction red = reduce_ls(problem);
  return red.recover(solve_box_trace_ls(red.problem).z);
}

Vector project_eigenvalues(const Vector& lambda, Bound c_l, Bound c_u, double r, SpectralCase* which) {
  check_bounds(c_l, c_u);
  const int n = int(lambda.size());
  if (c_u && *c_u < n * r) invalid("upper trace bound below n*r leaves the feasible set empty");

  double s_bar = 0.0;
  for (int i = 0; i < n; ++i) s_bar += std::max(lambda[i], r);

  Vector omega(n);
  for (int i = 0; i < n; ++i) omega[i] = std::max(lambda[i], r);
  SpectralCase cs = SpectralCase::interior;

  if ((c_u && s_bar > *c_u) || (c_l && s_bar < *c_l)) {
    const bool upper = c_u && s_bar > *c_u;
    cs = upper ? SpectralCase::upper : SpectralCase::lower;
    std::vector<int> in, scan;
    for (int i = 0; i < n; ++i) {
      if (!upper && lambda[i] > r) {
        in.push_back(i);
      } else if (upper == (lambda[i] > r)) {
        scan.push_back(i);
      }
    }
    std::stable_sort(scan.begin(), scan.end(), [&](int a, int b) { return lambda[a] > lambda[b]; });
    const double c = upper ? *c_u : *c_l;
    double t = n * r - c;
    for (int i : in) t += lambda[i] - r;
    for (int i : scan) {
      if (!(double(in.size()) * (lambda[i] - r) > t)) break;
      in.push_back(i);
      t += lambda[i] - r;
    }
    omega.setConstant(r);
    if (!in.empty()) {
      const double theta = t / double(in.size());
      for (int i : in) omega[i] = r + (lambda[i] - r) - theta;
    }
  }
  if (which) *which = cs;
  return omega;
}

SpectralResult project_spectral(const SpectralProjection& p) {
  const auto n = p.U.rows();
  if (n < 1 || p.U.cols() != n) throw Error(ErrorKind::dimension_mismatch, "projection needs a square matrix");
  if (!p.U.allFinite() || !std::isfinite(p.r)) invalid("projection data must be finite");
  check_bounds(p.c_l, p.c_u);
  if (p.c_u && *p.c_u < double(n) * p.r) invalid("upper trace bound below n*r leaves the feasible set empty");

  const Eigen::MatrixXd sym = 0.5 * (p.U + p.U.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw Error(ErrorKind::numerical, "symmetric eigensolver failed");

  SpectralResult res;
  res.lambda = eig.eigenvalues();
  res.Q = eig.eigenvectors();
  res.omega = project_eigenvalues(res.lambda, p.c_l, p.c_u, p.r, &res.which);
  res.Z = res.Q * res.omega.asDiagonal() * res.Q.transpose();
  res.Z = 0.5 * (res.Z + res.Z.transpose()).eval();
  return res;
}

int e_update_case(const Vector& lambda, double beta_tau, double rho_l, double rho_u, double r) {
  const double kr = double(lambda.size()) * r;
  double neg = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    if (lambda[i] < 0.0) neg += lambda[i];
  if (neg < beta_tau * (kr - rho_u)) return 2;
  if (neg > beta_tau * (kr - rho_l)) return 3;
  return 1;
}

namespace {

void check_update_args(const Vector& lambda, double beta_tau, int k) {
  if (lambda.size() != k) throw Error(ErrorKind::dimension_mismatch, "eigenvalue count differs from k");
  if (!(beta_tau > 0.0)) invalid("beta*tau must be positive");
}

}  // namespace

Vector proj_sym_l(const Vector& lambda, double beta_tau, double rho_u, int k, double r) {
  check_update_args(lambda, beta_tau, k);
  const double kr = k * r;
  if (e_update_case(lambda, beta_tau, kr, rho_u, r) != 2) {
    invalid("proj_sym_l: sum of negative eigenvalues is not below beta*tau*(k r - rho_u)");
  }
  std::vector<int> neg;
  for (int i = 0; i < k; ++i)
    if (lambda[i] < 0.0) neg.push_back(i);
  std::stable_sort(neg.begin(), neg.end(), [&](int a, int b) { return lambda[a] < lambda[b]; });

  double t = beta_tau * (rho_u - kr) + lambda[neg[0]];
  std::size_t q = 1;
  while (q < neg.size() && double(q) * lambda[neg[q]] < t) {
    t += lambda[neg[q]];
    ++q;
  }
  Vector omega = Vector::Constant(k, r);
  for (std::size_t i = 0; i < q; ++i) {
    const int l = neg[i];
    omega[l] = r - lambda[l] / beta_tau + t / (beta_tau * double(q));
  }
  return omega;
}

Vector proj_sym_g(const Vector& lambda, double beta_tau, double rho_l, int k, double r) {
  check_update_args(lambda, beta_tau, k);
  const double kr = k * r;
  // rho_u plays no part in the lower case; any value keeping case 2 out works.
  if (e_update_case(lambda, beta_tau, rho_l, std::numeric_limits<double>::infinity(), r) != 3) {
    invalid("proj_sym_g: sum of negative eigenvalues is not above beta*tau*(k r - rho_l)");
  }
  std::vector<int> pos;
  std::vector<char> in_u(std::size_t(k), 0);
  double t = beta_tau * (rho_l - kr);
  std::size_t q = 0;
  for (int i = 0; i < k; ++i) {
    if (lambda[i] > 0.0) {
      pos.push_back(i);
    } else {
      in_u[i] = 1;
      t += lambda[i];
      ++q;
    }
  }
  std::stable_sort(pos.begin(), pos.end(), [&](int a, int b) { return lambda[a] < lambda[b]; });
  std::size_t next = 0;
  if (q == 0) {
    in_u[pos[0]] = 1;
    t += lambda[pos[0]];
    q = 1;
    next = 1;
  }
  while (next < pos.size() && double(q) * lambda[pos[next]] < t) {
    in_u[pos[next]] = 1;
    t += lambda[pos[next]];
    ++q;
    ++next;
  }
  Vector omega = Vector::Constant(k, r);
  for (int l = 0; l < k; ++l) {
    if (in_u[l]) omega[l] = r - lambda[l] / beta_tau + t / (beta_tau * double(q));
  }
  return omega;
}

Vector e_update_omega(const Vector& lambda, double beta_tau, double rho_l, double rho_u, double r) {
  const int k = int(lambda.size());
  switch (e_update_case(lambda, beta_tau, rho_l, rho_u, r)) {
    case 2: return proj_sym_l(lambda, beta_tau, rho_u, k, r);
    case 3: return proj_sym_g(lambda, beta_tau, rho_l, k, r);
    default: break;
  }
  Vector omega(k);
  for (int l = 0; l < k; ++l) omega[l] = lambda[l] >= 0.0 ? r : r - lambda[l] / beta_tau;
  return omega;
}

SymBlock e_update_block(const SymBlock& s, double beta_tau, double rho_l, double rho_u, double r) {
  Eigen::SelfAdjointEigenSolver<BlockMatrix> eig(s.dense());
  if (eig.info() != Eigen::Success) throw Error(ErrorKind::numerical, "block eigensolver failed");
  const Vector lambda = eig.eigenvalues();
  const Vector omega = e_update_omega(lambda, beta_tau, rho_l, rho_u, r);
  const BlockMatrix& q = eig.eigenvectors();
  BlockMatrix e = q * omega.asDiagonal() * q.transpose();
  return SymBlock::from_dense(e);
}

}  // namespace fmo
