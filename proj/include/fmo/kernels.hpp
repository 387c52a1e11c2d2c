#pragma once

#include "fmo/types.hpp"

#include <vector>

namespace fmo {

/// How per-element contributions are combined.
/// ordered: contributions are formed in parallel and summed in element order,
///          so results are bit-identical to the serial reference and across runs.
/// unordered: thread-local accumulation; faster scatter, order depends on threads.
enum class Reduction { ordered, unordered };

struct ExecPolicy {
  Reduction reduction = Reduction::ordered;
  bool parallel = true;
};

/// Counted floating-point operations, split by where they were spent.
struct FlopCounter {
  long long apply = 0;     // apply_A / quad_A
  long long fused = 0;     // fused subgradient pass
  long long update = 0;    // dual accumulators, x and E updates
  long long dense = 0;     // dense assembly, factorization and solves (penalty mode)

  long long total() const noexcept { return apply + fused + update + dense; }
  void reset() noexcept { *this = FlopCounter{}; }
};

/// Everything one subgradient evaluation needs from a pass over the elements.
struct FusedPass {
  std::vector<double> quad;      // <A(E) x_j, x_j>, per load
  std::vector<Vector> Ax;        // A(E) x_j, per load
  std::vector<SymBlock> outer;   // sum_l (B_il x_j)(B_il x_j)^T at [i * L + j]
};

namespace kernels {

/// Counted cost of one element in apply_A: nig * (4 k nloc + 2 k^2).
long long apply_flops(const ProblemInstance& inst, int element);
/// Counted cost of one element for one load in the fused pass: nig * (4 k nloc + 3 k^2 + 3 k).
long long fused_flops(const ProblemInstance& inst, int element);

void apply_A(const ProblemInstance& inst, const MaterialState& E, const Vector& v, Vector& out,
             const ExecPolicy& policy = {}, FlopCounter* flops = nullptr);
double quad_A(const ProblemInstance& inst, const MaterialState& E, const Vector& v, const ExecPolicy& policy = {},
              FlopCounter* flops = nullptr);
void fused_pass(const ProblemInstance& inst, const MaterialState& E, const DualState& x, FusedPass& out,
                const ExecPolicy& policy = {}, FlopCounter* flops = nullptr);
/// E_i <- argmin over the block set of ||V - (r I - s_i / beta_tau)||_F, block-parallel.
void update_blocks(const ProblemInstance& inst, const MaterialState& s, double beta_tau, MaterialState& E,
                   const ExecPolicy& policy = {}, FlopCounter* flops = nullptr);

}  // namespace kernels

/// Single-threaded reference versions of the kernels, kept for testing and
/// benchmarking. Summation order matches the ordered parallel mode.
namespace serial {

void apply_A(const ProblemInstance& inst, const MaterialState& E, const Vector& v, Vector& out);
double quad_A(const ProblemInstance& inst, const MaterialState& E, const Vector& v);
void fused_pass(const ProblemInstance& inst, const MaterialState& E, const DualState& x, FusedPass& out);
void update_blocks(const ProblemInstance& inst, const MaterialState& s, double beta_tau, MaterialState& E);

}  // namespace serial

}  // namespace fmo
