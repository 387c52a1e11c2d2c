#pragma once

// Per-element arithmetic shared by the parallel kernels and the serial reference.

#include "fmo/types.hpp"

#include <vector>

namespace fmo::detail {

inline void gather(const ElementOperator& el, const Vector& v, double* xl) {
  const int n = el.support();
  for (int c = 0; c < n; ++c) xl[c] = v[el.cols[std::size_t(c)]];
}

// w = B xl
inline void strain(const Eigen::MatrixXd& B, const double* xl, double* w) {
  const int k = int(B.rows()), n = int(B.cols());
  for (int a = 0; a < k; ++a) w[a] = 0.0;
  for (int c = 0; c < n; ++c) {
    const double* col = B.data() + std::ptrdiff_t(c) * k;
    const double xc = xl[c];
    for (int a = 0; a < k; ++a) w[a] += col[a] * xc;
  }
}

// out += B^T y
inline void strain_t_add(const Eigen::MatrixXd& B, const double* y, double* out) {
  const int k = int(B.rows()), n = int(B.cols());
  for (int c = 0; c < n; ++c) {
    const double* col = B.data() + std::ptrdiff_t(c) * k;
    double s = 0.0;
    for (int a = 0; a < k; ++a) s += col[a] * y[a];
    out[c] += s;
  }
}

// local = sum_l B_l^T E B_l xl
inline void element_apply(const ElementOperator& el, const SymBlock& E, const double* xl, double* local) {
  double w[kMaxBlockOrder], y[kMaxBlockOrder];
  for (int c = 0; c < el.support(); ++c) local[c] = 0.0;
  for (const auto& B : el.B) {
    strain(B, xl, w);
    E.multiply(w, y);
    strain_t_add(B, y, local);
  }
}

inline double element_quad(const ElementOperator& el, const SymBlock& E, const double* xl) {
  double w[kMaxBlockOrder], y[kMaxBlockOrder];
  const int k = E.order();
  double q = 0.0;
  for (const auto& B : el.B) {
    strain(B, xl, w);
    E.multiply(w, y);
    for (int a = 0; a < k; ++a) q += w[a] * y[a];
  }
  return q;
}

// One pass: local = sum_l B^T E B xl, outer = sum_l (B xl)(B xl)^T, returns sum_l <E B xl, B xl>.
inline double element_fused(const ElementOperator& el, const SymBlock& E, const double* xl, double* local,
                            SymBlock& outer) {
  double w[kMaxBlockOrder], y[kMaxBlockOrder];
  const int k = E.order();
  double q = 0.0;
  for (int c = 0; c < el.support(); ++c) local[c] = 0.0;
  outer = SymBlock(k);
  for (const auto& B : el.B) {
    strain(B, xl, w);
    E.multiply(w, y);
    for (int a = 0; a < k; ++a) q += w[a] * y[a];
    strain_t_add(B, y, local);
    outer.add_outer(w, 1.0);
  }
  return q;
}

inline std::vector<std::size_t> support_offsets(const ProblemInstance& inst) {
  std::vector<std::size_t> off(std::size_t(inst.m()) + 1, 0);
  for (int i = 0; i < inst.m(); ++i) off[std::size_t(i) + 1] = off[std::size_t(i)] + std::size_t(inst.elements[std::size_t(i)].support());
  return off;
}

inline int max_support(const ProblemInstance& inst) {
  int s = 0;
  for (const auto& el : inst.elements) s = std::max(s, el.support());
  return s;
}

}  // namespace fmo::detail
