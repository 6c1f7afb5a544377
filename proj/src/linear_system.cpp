#include "nrr/linear_system.h"

#include <vector>

#include "nrr/parallel.h"

namespace nrr {

namespace {

constexpr std::size_t kChunk = 512;

// Accumulates fn(block, accumulator) over all blocks into per-chunk partial
// vectors, then reduces them in chunk order so the result is bit-identical
// for any worker count.
template <typename Fn>
VecXd reduce_blocks(const std::vector<EvaluatedBlock>& blocks, int dim,
                    Fn&& fn) {
  const std::size_t n = blocks.size();
  const std::size_t num_chunks = (n + kChunk - 1) / kChunk;
  std::vector<VecXd> partial(num_chunks);
  parallel_chunks(n, kChunk, [&](std::size_t b, std::size_t e) {
    VecXd acc = VecXd::Zero(dim);
    for (std::size_t i = b; i < e; ++i) fn(blocks[i], acc);
    partial[b / kChunk] = std::move(acc);
  });
  VecXd out = VecXd::Zero(dim);
  for (const VecXd& p : partial) out += p;
  return out;
}

}  // namespace

VecXd LinearSystem::jtf() const {
  return reduce_blocks(blocks, param_count_,
                       [&](const EvaluatedBlock& b, VecXd& acc) {
                         const VecXd local =
                             b.J.transpose() * F.segment(b.row, b.dim);
                         for (std::size_t m = 0; m < b.nodes.size(); ++m)
                           acc.segment<6>(6 * b.nodes[m]) +=
                               local.segment<6>(6 * m);
                       });
}

VecXd LinearSystem::normal_diagonal(double damping) const {
  VecXd diag = reduce_blocks(
      blocks, param_count_, [&](const EvaluatedBlock& b, VecXd& acc) {
        for (std::size_t m = 0; m < b.nodes.size(); ++m)
          for (int c = 0; c < 6; ++c)
            acc[6 * b.nodes[m] + c] +=
                b.J.col(6 * static_cast<int>(m) + c).squaredNorm();
      });
  diag.array() += damping;
  return diag;
}

VecXd LinearSystem::apply_normal(const VecXd& x, double damping) const {
  VecXd out = reduce_blocks(
      blocks, param_count_, [&](const EvaluatedBlock& b, VecXd& acc) {
        VecXd local(6 * b.nodes.size());
        for (std::size_t m = 0; m < b.nodes.size(); ++m)
          local.segment<6>(6 * m) = x.segment<6>(6 * b.nodes[m]);
        const VecXd jx = b.J * local;
        const VecXd jtjx = b.J.transpose() * jx;
        for (std::size_t m = 0; m < b.nodes.size(); ++m)
          acc.segment<6>(6 * b.nodes[m]) += jtjx.segment<6>(6 * m);
      });
  out += damping * x;
  return out;
}

MatXd LinearSystem::materialize_jacobian() const {
  MatXd J = MatXd::Zero(residual_dim(), param_count_);
  for (const EvaluatedBlock& b : blocks)
    for (std::size_t m = 0; m < b.nodes.size(); ++m)
      J.block(b.row, 6 * b.nodes[m], b.dim, 6) +=
          b.J.block(0, 6 * static_cast<int>(m), b.dim, 6);
  return J;
}

}  // namespace nrr
