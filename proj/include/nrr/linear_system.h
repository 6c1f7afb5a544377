#pragma once

#include <vector>

#include "nrr/common.h"

namespace nrr {

/// One linearized residual block: weighted residual rows live in F at
/// [row, row + dim) and the local Jacobian covers the listed parameter
/// blocks (6 columns per node, [theta, t] layout).
struct EvaluatedBlock {
  int row = 0;
  int dim = 0;
  std::vector<int> nodes;
  MatXd J;  // dim x (6 * nodes.size())
};

/// Stacked sparse Jacobian and residual of one linearization. The normal
/// matrix J^T J is never materialized outside tests; products accumulate
/// block-by-block with chunked deterministic reduction.
class LinearSystem {
 public:
  LinearSystem(int param_count, int residual_dim)
      : F(VecXd::Zero(residual_dim)), param_count_(param_count) {}

  int param_count() const { return param_count_; }
  int residual_dim() const { return static_cast<int>(F.size()); }

  VecXd F;
  std::vector<EvaluatedBlock> blocks;

  /// J^T F.
  VecXd jtf() const;

  /// diag(J^T J) + damping.
  VecXd normal_diagonal(double damping) const;

  /// (J^T J + damping I) x, computed as J^T (J x) + damping x.
  VecXd apply_normal(const VecXd& x, double damping) const;

  /// Dense J (tests and oracles only).
  MatXd materialize_jacobian() const;

 private:
  int param_count_ = 0;
};

}  // namespace nrr
