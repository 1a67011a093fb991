#pragma once

// Reverse-mode differentiation over Matrix operations.
//
// A Tape records nodes in creation order, which is a topological order of
// the computation. backward() walks that order in reverse from the root and
// only propagates into nodes that (transitively) depend on a parameter, so
// constants never receive adjoints.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "ortho/matrix.hpp"

namespace ortho::autodiff {

/// Handle to a tape node. Only meaningful for the tape that produced it.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

enum class Op : std::uint8_t {
  leaf,
  matmul,
  transpose,
  add,
  sub,
  mul,
  scale,
  add_scalar,
  add_row,       // a (n x d) + row (1 x d), broadcast over rows
  sub_identity,  // a - I
  tanh,
  relu,
  sqrt,
  sum,           // -> 1x1
  mean,          // -> 1x1
  sum_rows,      // n x d -> n x 1
  col_mean,      // n x d -> 1 x d
  center_cols,   // subtract column means
  offdiag,       // zero the diagonal
  frob_sq,       // -> 1x1
  norm,          // L2 norm of all entries -> 1x1
  div,           // 1x1 / 1x1
  row_normalize, // a_i / (||a_i|| + eps)
  xent_diag,     // mean_i -log softmax(row i)[i]
  gather,        // out.flat[t] = a.flat[index[t]]
  reshape,
};

class Tape {
 public:
  Tape() = default;

  Var param(const Matrix& value);
  Var constant(Matrix value);

  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double alpha);
  Var add_scalar(Var a, double c);
  Var add_row(Var a, Var row);
  Var sub_identity(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var sqrt(Var a);
  Var sum(Var a);
  Var mean(Var a);
  Var sum_rows(Var a);
  Var col_mean(Var a);
  Var center_cols(Var a);
  Var offdiag(Var a);
  Var frob_sq(Var a);
  Var norm(Var a);
  Var div(Var a, Var b);
  Var row_normalize(Var a, double eps);
  Var xent_diag(Var logits);
  Var gather(Var a, std::size_t rows, std::size_t cols,
             std::shared_ptr<const std::vector<std::size_t>> index);
  Var reshape(Var a, std::size_t rows, std::size_t cols);

  const Matrix& value(Var v) const;
  double scalar(Var v) const { return value(v).scalar(); }
  bool requires_grad(Var v) const;

  /// Adjoints of `root` (must be 1x1) for every node it depends on.
  /// Throws ContractError for a non-scalar root.
  void backward(Var root);

  /// Adjoint after backward(); a zero matrix of the node's shape if the
  /// node was not reached.
  Matrix grad(Var v) const;
  /// True if backward() propagated an adjoint into this node.
  bool touched(Var v) const;
  /// Node ids in the order backward() processed them.
  const std::vector<std::size_t>& backward_order() const noexcept { return backward_order_; }

  /// Recompute every non-leaf value from the leaves and return the root's
  /// 1x1 value. Uses the same code path as recording, so the result is
  /// bit-identical to the recorded value.
  double replay(Var root);

  std::size_t size() const noexcept { return nodes_.size(); }
  Op op(Var v) const;

 private:
  struct Node {
    Op op = Op::leaf;
    std::size_t in0 = kNone;
    std::size_t in1 = kNone;
    double arg = 0.0;
    std::size_t out_rows = 0;
    std::size_t out_cols = 0;
    bool needs_grad = false;
    bool has_grad = false;
    Matrix value;
    Matrix grad;
    std::shared_ptr<const std::vector<std::size_t>> index;
  };
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  Var push(Op op, std::size_t in0, std::size_t in1 = kNone, double arg = 0.0,
           std::shared_ptr<const std::vector<std::size_t>> index = nullptr,
           std::size_t rows = 0, std::size_t cols = 0);
  Matrix compute(const Node& node) const;
  void accumulate(std::size_t id, const Matrix& g);
  void accumulate_scaled(std::size_t id, double alpha, const Matrix& g);
  void propagate(std::size_t id);
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
  std::vector<std::size_t> backward_order_;
};

}  // namespace ortho::autodiff
