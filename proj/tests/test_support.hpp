#pragma once

#include "fmo/proj.hpp"
#include "fmo/types.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fmo::testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Entry that is sometimes drawn from a coarse grid so that ties and exact
/// zeros show up.
inline double tie_prone(std::mt19937_64& rng, double scale) {
  if (uniform_int(rng, 0, 3) == 0) return scale * 0.5 * uniform_int(rng, -2, 2);
  return uniform(rng, -scale, scale);
}

/// Random standardized problem: nonzero weights of both signs (or all ones),
/// bounds that may be absent, equal, or tight. Always feasible.
inline StandardLS random_standard_ls(std::mt19937_64& rng, int n) {
  StandardLS p;
  p.b.resize(n);
  p.w.resize(n);
  const int weight_mode = uniform_int(rng, 0, 3);  // 0: unit, 1: positive, else mixed
  for (int i = 0; i < n; ++i) {
    p.b[i] = tie_prone(rng, 2.0);
    double w;
    do {
      w = weight_mode == 0 ? 1.0 : tie_prone(rng, 2.0);
    } while (w == 0.0);
    p.w[i] = weight_mode == 1 ? std::abs(w) : w;
  }
  double wbp = 0.0;
  for (int i = 0; i < n; ++i) wbp += p.w[i] * std::max(p.b[i], 0.0);
  const bool has_pos = (p.w.array() > 0.0).any(), has_neg = (p.w.array() < 0.0).any();
  const double lo_reach = has_neg ? -1e300 : 0.0;
  const double hi_reach = has_pos ? 1e300 : 0.0;
  for (int attempt = 0; attempt < 100; ++attempt) {
    const int mode = uniform_int(rng, 0, 5);
    double a = wbp + uniform(rng, -3.0, 3.0), b = wbp + uniform(rng, -3.0, 3.0);
    if (uniform_int(rng, 0, 4) == 0) a = std::round(a);
    if (a > b) std::swap(a, b);
    p.c_l.reset();
    p.c_u.reset();
    switch (mode) {
      case 0: p.c_l = a; p.c_u = b; break;
      case 1: p.c_l = a; break;
      case 2: p.c_u = b; break;
      case 3: p.c_l = a; p.c_u = a; break;
      case 4: break;
      default: p.c_l = a; p.c_u = a + 1e-3; break;
    }
    const bool ok = (!p.c_u || *p.c_u >= lo_reach) && (!p.c_l || *p.c_l <= hi_reach);
    if (ok) return p;
  }
  p.c_l.reset();
  p.c_u.reset();
  return p;
}

/// Largest violation of the optimality system
///   z = [b - ((lu - ll)/2) w]_+,  z >= 0,  c_l <= <w,z> <= c_u,
///   lu, ll >= 0,  lu (<w,z> - c_u) = 0,  ll (c_l - <w,z>) = 0,
/// relative to the data scale.
inline double kkt_residual(const StandardLS& p, const LsSolution& s) {
  const int n = p.n();
  double scale = 1.0 + p.b.lpNorm<Eigen::Infinity>();
  if (p.c_l) scale = std::max(scale, 1.0 + std::abs(*p.c_l));
  if (p.c_u) scale = std::max(scale, 1.0 + std::abs(*p.c_u));
  const double theta = 0.5 * (s.lambda_u - s.lambda_l);
  double res = 0.0;
  for (int i = 0; i < n; ++i) {
    res = std::max(res, std::abs(s.z[i] - std::max(p.b[i] - theta * p.w[i], 0.0)));
    res = std::max(res, -s.z[i]);
  }
  const double dot = p.w.dot(s.z);
  if (p.c_l) res = std::max(res, *p.c_l - dot);
  if (p.c_u) res = std::max(res, dot - *p.c_u);
  res = std::max({res, -s.lambda_l, -s.lambda_u});
  if (p.c_u) res = std::max(res, std::abs(s.lambda_u * (dot - *p.c_u)));
  if (p.c_l) res = std::max(res, std::abs(s.lambda_l * (*p.c_l - dot)));
  if (!p.c_u) res = std::max(res, s.lambda_u);
  if (!p.c_l) res = std::max(res, s.lambda_l);
  return res / scale;
}

inline Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, int n, double scale) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = uniform(rng, -scale, scale);
  return m;
}

/// Random instance with sparse element supports. Every column is touched by
/// some element so A(I) is usually nonsingular.
inline ProblemInstance random_instance(std::mt19937_64& rng, int m, int N, int L, int nig, int k = 3,
                                       int support = 6) {
  ProblemInstance inst;
  inst.k = k;
  inst.N = N;
  inst.r = 0.05;
  inst.gamma = 1.0;
  inst.eta = 1.5;
  inst.nu = 0.0;
  for (int i = 0; i < m; ++i) {
    ElementOperator el;
    std::vector<int> cols;
    cols.push_back(i % N);
    while (int(cols.size()) < std::min(support, N)) {
      const int c = uniform_int(rng, 0, N - 1);
      if (std::find(cols.begin(), cols.end(), c) == cols.end()) cols.push_back(c);
    }
    std::sort(cols.begin(), cols.end());
    el.cols = cols;
    for (int l = 0; l < nig; ++l) {
      Eigen::MatrixXd B(k, int(cols.size()));
      for (int a = 0; a < B.rows(); ++a)
        for (int c = 0; c < B.cols(); ++c) B(a, c) = uniform(rng, -1.0, 1.0);
      el.B.push_back(B);
    }
    inst.elements.push_back(std::move(el));
  }
  for (int j = 0; j < L; ++j) {
    Vector f(N);
    for (int a = 0; a < N; ++a) f[a] = uniform(rng, -1.0, 1.0);
    inst.loads.push_back(f);
  }
  inst.rho_l.assign(std::size_t(m), k * inst.r + 0.1);
  inst.rho_u.assign(std::size_t(m), 2.0);
  return inst;
}

/// Random symmetric block with lambda_min >= r and trace in [rho_l, rho_u].
inline Eigen::MatrixXd random_feasible_block(std::mt19937_64& rng, int k, double r, double rho_l, double rho_u) {
  Eigen::MatrixXd Q(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) Q(a, b) = uniform(rng, -1.0, 1.0);
  Q = Eigen::HouseholderQR<Eigen::MatrixXd>(Q).householderQ();
  Eigen::VectorXd d(k);
  for (int a = 0; a < k; ++a) d[a] = uniform(rng, 0.0, 1.0);
  const double target = uniform(rng, std::max(rho_l, k * r), rho_u);
  d *= (target - k * r) / d.sum();
  d.array() += r;
  return Q * d.asDiagonal() * Q.transpose();
}

inline MaterialState random_material(std::mt19937_64& rng, const ProblemInstance& inst) {
  MaterialState E;
  for (int i = 0; i < inst.m(); ++i)
    E.blocks.push_back(SymBlock::from_dense(
        random_feasible_block(rng, inst.k, inst.r, inst.rho_l[std::size_t(i)], inst.rho_u[std::size_t(i)])));
  return E;
}

/// Random dual vectors with ||x_j|| <= eta.
inline DualState random_dual(std::mt19937_64& rng, const ProblemInstance& inst) {
  DualState x;
  for (int j = 0; j < inst.L(); ++j) {
    Vector v(inst.N);
    for (int a = 0; a < inst.N; ++a) v[a] = uniform(rng, -1.0, 1.0);
    v *= uniform(rng, 0.2, 1.0) * inst.eta / v.norm();
    x.vectors.push_back(v);
  }
  return x;
}

inline Vector random_vector(std::mt19937_64& rng, int n) {
  Vector v(n);
  for (int a = 0; a < n; ++a) v[a] = uniform(rng, -1.0, 1.0);
  return v;
}

}  // namespace fmo::testing
