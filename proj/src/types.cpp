#include "fmo/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fmo {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid_input";
    case ErrorKind::dimension_mismatch: return "dimension_mismatch";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::numerical: return "numerical";
  }
  return "unknown";
}

SymBlock::SymBlock(int k) : k_(k) {
  if (k < 1 || k > kMaxBlockOrder) {
    throw Error(ErrorKind::invalid_input, "block order must be in [1, 6], got " + std::to_string(k));
  }
}

SymBlock SymBlock::identity(int k, double scale) {
  SymBlock b(k);
  b.add_identity(scale);
  return b;
}

SymBlock SymBlock::from_dense(const BlockMatrix& m) {
  if (m.rows() != m.cols()) throw Error(ErrorKind::dimension_mismatch, "block must be square");
  const int k = int(m.rows());
  SymBlock b(k);
  for (int i = 0; i < k; ++i) {
    b.ref(i, i) = m(i, i);
    for (int j = i + 1; j < k; ++j) b.ref(i, j) = 0.5 * (m(i, j) + m(j, i));
  }
  return b;
}

BlockMatrix SymBlock::dense() const {
  BlockMatrix m(k_, k_);
  for (int i = 0; i < k_; ++i)
    for (int j = i; j < k_; ++j) m(i, j) = m(j, i) = (*this)(i, j);
  return m;
}

double SymBlock::trace() const noexcept {
  double t = 0.0;
  for (int i = 0; i < k_; ++i) t += (*this)(i, i);
  return t;
}

double SymBlock::dot(const SymBlock& other) const noexcept {
  double diag = 0.0, off = 0.0;
  int idx = 0;
  for (int i = 0; i < k_; ++i) {
    diag += p_[idx] * other.p_[idx];
    ++idx;
    for (int j = i + 1; j < k_; ++j, ++idx) off += p_[idx] * other.p_[idx];
  }
  return diag + 2.0 * off;
}

SymBlock& SymBlock::operator+=(const SymBlock& other) noexcept {
  for (int i = 0; i < packed_size(); ++i) p_[i] += other.p_[i];
  return *this;
}

SymBlock& SymBlock::operator-=(const SymBlock& other) noexcept {
  for (int i = 0; i < packed_size(); ++i) p_[i] -= other.p_[i];
  return *this;
}

SymBlock& SymBlock::operator*=(double a) noexcept {
  for (int i = 0; i < packed_size(); ++i) p_[i] *= a;
  return *this;
}

void SymBlock::axpy(double a, const SymBlock& other) noexcept {
  for (int i = 0; i < packed_size(); ++i) p_[i] += a * other.p_[i];
}

void SymBlock::add_identity(double a) noexcept {
  for (int i = 0; i < k_; ++i) ref(i, i) += a;
}

void SymBlock::add_outer(const double* v, double a) noexcept {
  int idx = 0;
  for (int i = 0; i < k_; ++i) {
    const double av = a * v[i];
    for (int j = i; j < k_; ++j, ++idx) p_[idx] += av * v[j];
  }
}

void SymBlock::multiply(const double* v, double* out) const noexcept {
  for (int i = 0; i < k_; ++i) out[i] = 0.0;
  int idx = 0;
  for (int i = 0; i < k_; ++i) {
    out[i] += p_[idx] * v[i];
    ++idx;
    for (int j = i + 1; j < k_; ++j, ++idx) {
      out[i] += p_[idx] * v[j];
      out[j] += p_[idx] * v[i];
    }
  }
}

bool operator==(const SymBlock& a, const SymBlock& b) noexcept {
  if (a.k_ != b.k_) return false;
  return std::equal(a.p_.begin(), a.p_.begin() + a.packed_size(), b.p_.begin());
}

double MaterialState::trace() const noexcept {
  double t = 0.0;
  for (const auto& b : blocks) t += b.trace();
  return t;
}

double MaterialState::dot(const MaterialState& other) const noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < blocks.size(); ++i) s += blocks[i].dot(other.blocks[i]);
  return s;
}

double DualState::dot(const DualState& other) const noexcept {
  double s = 0.0;
  for (std::size_t j = 0; j < vectors.size(); ++j) s += vectors[j].dot(other.vectors[j]);
  return s;
}

long long ProblemInstance::total_support() const noexcept {
  long long s = 0;
  for (const auto& el : elements) s += el.support();
  return s;
}

double ProblemInstance::max_rho_u() const noexcept {
  return rho_u.empty() ? 0.0 : *std::max_element(rho_u.begin(), rho_u.end());
}

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorKind::invalid_input, msg); }

}  // namespace

void ProblemInstance::validate() const {
  if (k < 1 || k > kMaxBlockOrder) bad("block order k must be in [1, 6]");
  if (N < 1) bad("N must be positive");
  if (elements.empty()) bad("instance has no elements");
  if (loads.empty()) bad("instance has no loads");
  if (int(rho_l.size()) != m() || int(rho_u.size()) != m()) bad("rho_l/rho_u must have one entry per element");
  if (!(r > 0.0) || !std::isfinite(r)) bad("eigenvalue floor r must be positive");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) bad("compliance cap gamma must be positive");
  if (!(eta > 0.0) || !std::isfinite(eta)) bad("dual radius eta must be positive");
  if (!(nu >= 0.0) || !std::isfinite(nu)) bad("penalty weight nu must be nonnegative");

  const int n_ig = nig();
  if (n_ig < 1) bad("elements need at least one integration point");
  for (int i = 0; i < m(); ++i) {
    const auto& el = elements[i];
    std::ostringstream where;
    where << "element " << i << ": ";
    if (el.nig() != n_ig) bad(where.str() + "inconsistent number of integration points");
    if (el.cols.empty()) bad(where.str() + "empty column support");
    for (std::size_t c = 0; c < el.cols.size(); ++c) {
      if (el.cols[c] < 0 || el.cols[c] >= N) bad(where.str() + "column index out of range");
      if (c > 0 && el.cols[c] <= el.cols[c - 1]) bad(where.str() + "column support must be strictly increasing");
    }
    for (const auto& b : el.B) {
      if (b.rows() != k || b.cols() != el.support()) bad(where.str() + "operator shape does not match k x support");
      if (!b.allFinite()) bad(where.str() + "operator has non-finite entries");
    }
    const double kr = k * r;
    if (!(kr <= rho_l[i] * (1.0 + 1e-15) && rho_l[i] <= rho_u[i])) {
      bad(where.str() + "trace bounds must satisfy k*r <= rho_l <= rho_u");
    }
  }
  for (int j = 0; j < L(); ++j) {
    if (loads[j].size() != N) bad("load " + std::to_string(j) + " has wrong length");
    if (!loads[j].allFinite()) bad("load " + std::to_string(j) + " has non-finite entries");
  }
}

void check_dimensions(const ProblemInstance& inst, const MaterialState& E) {
  if (E.m() != inst.m()) {
    throw Error(ErrorKind::dimension_mismatch, "material state has " + std::to_string(E.m()) +
                                                   " blocks, instance has " + std::to_string(inst.m()));
  }
  for (int i = 0; i < E.m(); ++i) {
    if (E.blocks[i].order() != inst.k) {
      throw Error(ErrorKind::dimension_mismatch,
                  "block " + std::to_string(i) + " has order " + std::to_string(E.blocks[i].order()) +
                      ", expected " + std::to_string(inst.k));
    }
  }
}

void check_dimensions(const ProblemInstance& inst, const DualState& x) {
  if (x.L() != inst.L()) {
    throw Error(ErrorKind::dimension_mismatch, "dual state has " + std::to_string(x.L()) +
                                                   " vectors, instance has " + std::to_string(inst.L()));
  }
  for (int j = 0; j < x.L(); ++j) {
    if (x.vectors[j].size() != inst.N) {
      throw Error(ErrorKind::dimension_mismatch, "dual vector " + std::to_string(j) + " has wrong length");
    }
  }
}

}  // namespace fmo
