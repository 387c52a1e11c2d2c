#pragma once

// Dense stiffness assembly and factorization. Only for small N: used by the
// penalized solver mode and by compliance reporting.

#include "fmo/kernels.hpp"
#include "fmo/types.hpp"

#include <vector>

namespace fmo::dense {

inline constexpr int kDefaultThreshold = 4000;

/// Throws Error(invalid_input) when N exceeds the threshold.
void require_small(const ProblemInstance& inst, int threshold, const char* what);

Eigen::MatrixXd assemble_A(const ProblemInstance& inst, const MaterialState& E, FlopCounter* flops = nullptr);

/// Cholesky factor of a dense stiffness matrix.
class Factorization {
 public:
  /// Throws Error(numerical) naming an estimate of lambda_min if A is not positive definite.
  explicit Factorization(const Eigen::MatrixXd& A, FlopCounter* flops = nullptr);

  Vector solve(const Vector& f, FlopCounter* flops = nullptr) const;
  int size() const noexcept { return int(llt_.rows()); }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// <A(E)^{-1} f_j, f_j> for every load.
std::vector<double> compliances(const ProblemInstance& inst, const MaterialState& E,
                                int threshold = kDefaultThreshold);

struct Violation {
  double literal = 0.0;   // sum_j min(c_j - gamma, 0)
  double positive = 0.0;  // sum_j max(c_j - gamma, 0)
};

Violation violation(const std::vector<double>& compliances, double gamma);

}  // namespace fmo::dense
