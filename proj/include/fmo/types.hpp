#pragma once

#include <Eigen/Dense>

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fmo {

using Vector = Eigen::VectorXd;

inline constexpr int kMaxBlockOrder = 6;

// Dense k x k scratch matrix; stack allocated for k <= 6.
using BlockMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                                  kMaxBlockOrder, kMaxBlockOrder>;
using BlockVector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxBlockOrder, 1>;

enum class ErrorKind {
  invalid_input,       // malformed file, bad parameters, violated preconditions
  dimension_mismatch,  // sizes disagree between state and instance
  infeasible,          // constraint set is empty
  numerical,           // factorization / convergence failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

const char* to_string(ErrorKind kind) noexcept;

/// Symmetric matrix of order k <= 6 stored as its packed upper triangle
/// (row-major). Symmetry holds by construction.
class SymBlock {
 public:
  static constexpr int kPackedMax = kMaxBlockOrder * (kMaxBlockOrder + 1) / 2;

  SymBlock() = default;
  explicit SymBlock(int k);

  static SymBlock identity(int k, double scale = 1.0);
  /// Symmetrizes its argument: stores (M + M^T)/2.
  static SymBlock from_dense(const BlockMatrix& m);

  int order() const noexcept { return k_; }
  int packed_size() const noexcept { return k_ * (k_ + 1) / 2; }

  static int packed_index(int k, int i, int j) noexcept {
    if (i > j) std::swap(i, j);
    return i * k - i * (i - 1) / 2 + (j - i);
  }

  double operator()(int i, int j) const noexcept { return p_[packed_index(k_, i, j)]; }
  double& ref(int i, int j) noexcept { return p_[packed_index(k_, i, j)]; }

  std::span<const double> packed() const noexcept { return {p_.data(), std::size_t(packed_size())}; }
  std::span<double> packed() noexcept { return {p_.data(), std::size_t(packed_size())}; }

  BlockMatrix dense() const;
  double trace() const noexcept;
  /// Frobenius inner product <A, B> = tr(A B).
  double dot(const SymBlock& other) const noexcept;
  double norm2() const noexcept { return dot(*this); }

  void set_zero() noexcept { p_.fill(0.0); }
  SymBlock& operator+=(const SymBlock& other) noexcept;
  SymBlock& operator-=(const SymBlock& other) noexcept;
  SymBlock& operator*=(double a) noexcept;
  /// this += a * other
  void axpy(double a, const SymBlock& other) noexcept;
  void add_identity(double a) noexcept;
  /// this += a * v v^T, v of length k
  void add_outer(const double* v, double a) noexcept;
  /// out = this * v
  void multiply(const double* v, double* out) const noexcept;

  friend bool operator==(const SymBlock& a, const SymBlock& b) noexcept;

 private:
  int k_ = 0;
  std::array<double, kPackedMax> p_{};
};

/// Design variables: one symmetric block per finite element.
struct MaterialState {
  std::vector<SymBlock> blocks;

  int m() const noexcept { return int(blocks.size()); }
  /// Objective <I, E> = sum of block traces.
  double trace() const noexcept;
  double dot(const MaterialState& other) const noexcept;
  double norm2() const noexcept { return dot(*this); }
};

/// Scaled adjoint displacements, one vector per load case.
struct DualState {
  std::vector<Vector> vectors;

  int L() const noexcept { return int(vectors.size()); }
  double dot(const DualState& other) const noexcept;
  double norm2() const noexcept { return dot(*this); }
};

/// The nig strain-displacement operators of one element. All of them share the
/// same sorted column support `cols`; B[l] is k x cols.size() restricted to it.
struct ElementOperator {
  std::vector<int> cols;
  std::vector<Eigen::MatrixXd> B;

  int support() const noexcept { return int(cols.size()); }
  int nig() const noexcept { return int(B.size()); }
};

struct ProblemInstance {
  int k = 3;
  int N = 0;
  std::vector<ElementOperator> elements;
  std::vector<Vector> loads;
  std::vector<double> rho_l;
  std::vector<double> rho_u;
  double r = 0.0;
  double gamma = 1.0;
  double eta = 1.0;
  double nu = 0.0;

  int m() const noexcept { return int(elements.size()); }
  int L() const noexcept { return int(loads.size()); }
  int nig() const noexcept { return elements.empty() ? 0 : elements.front().nig(); }
  /// Sum of element supports; sparse counterpart of m * N.
  long long total_support() const noexcept;
  double max_rho_u() const noexcept;

  /// Throws fmo::Error(invalid_input) on any violated invariant.
  void validate() const;
};

void check_dimensions(const ProblemInstance& inst, const MaterialState& E);
void check_dimensions(const ProblemInstance& inst, const DualState& x);

}  // namespace fmo
