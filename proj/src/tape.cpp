#include "ortho/tape.hpp"

#include <algorithm>
#include <cmath>

#include "ortho/errors.hpp"
#include "ortho/linalg.hpp"

namespace ortho::autodiff {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DimensionError(what);
}

double sum_sequential(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return s;
}

}  // namespace

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw ContractError("tape: variable does not belong to this tape");
  return nodes_[v.id];
}

Var Tape::param(const Matrix& value) {
  Node n;
  n.value = value;
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::push(Op op, std::size_t in0, std::size_t in1, double arg,
               std::shared_ptr<const std::vector<std::size_t>> index, std::size_t rows,
               std::size_t cols) {
  Node n;
  n.op = op;
  n.in0 = in0;
  n.in1 = in1;
  n.arg = arg;
  n.out_rows = rows;
  n.out_cols = cols;
  n.index = std::move(index);
  n.needs_grad = nodes_.at(in0).needs_grad || (in1 != kNone && nodes_.at(in1).needs_grad);
  n.value = compute(n);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Matrix Tape::compute(const Node& n) const {
  if (n.op == Op::leaf) return n.value;
  const Matrix& a = nodes_[n.in0].value;
  const Matrix* b = n.in1 == kNone ? nullptr : &nodes_[n.in1].value;
  switch (n.op) {
    case Op::leaf:
      break;
    case Op::matmul:
      return ortho::matmul(a, *b);
    case Op::transpose:
      return ortho::transpose(a);
    case Op::add:
      return ortho::add(a, *b);
    case Op::sub:
      return ortho::sub(a, *b);
    case Op::mul:
      return ortho::hadamard(a, *b);
    case Op::scale:
      return ortho::scale(a, n.arg);
    case Op::add_scalar: {
      Matrix out = a;
      for (double& v : out.data()) v += n.arg;
      return out;
    }
    case Op::add_row: {
      require(b->rows() == 1 && b->cols() == a.cols(), "add_row: row shape mismatch");
      Matrix out = a;
      for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) += (*b)(0, j);
      }
      return out;
    }
    case Op::sub_identity:
      return ortho::sub_identity(a);
    case Op::tanh: {
      Matrix out = a;
      for (double& v : out.data()) v = std::tanh(v);
      return out;
    }
    case Op::relu: {
      Matrix out = a;
      for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
      return out;
    }
    case Op::sqrt: {
      Matrix out = a;
      for (double& v : out.data()) v = std::sqrt(v);
      return out;
    }
    case Op::sum:
      return Matrix(1, 1, sum_sequential(a));
    case Op::mean:
      require(a.size() > 0, "mean of empty matrix");
      return Matrix(1, 1, sum_sequential(a) / static_cast<double>(a.size()));
    case Op::sum_rows: {
      Matrix out(a.rows(), 1);
      for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (double v : a.row(i)) s += v;
        out(i, 0) = s;
      }
      return out;
    }
    case Op::col_mean:
      return column_means(a);
    case Op::center_cols:
      return center_columns(a);
    case Op::offdiag: {
      Matrix out = a;
      for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i) out(i, i) = 0.0;
      return out;
    }
    case Op::frob_sq:
      return Matrix(1, 1, frobenius_sq(a));
    case Op::norm:
      return Matrix(1, 1, frobenius(a));
    case Op::div:
      return Matrix(1, 1, a.scalar() / b->scalar());
    case Op::row_normalize: {
      Matrix out = a;
      for (std::size_t i = 0; i < a.rows(); ++i) {
        const double r = std::sqrt(ortho::dot(a.row(i), a.row(i)));
        const double inv = 1.0 / (r + n.arg);
        for (double& v : out.row(i)) v *= inv;
      }
      return out;
    }
    case Op::xent_diag: {
      require(a.is_square() && a.rows() > 0, "xent_diag: logits must be square");
      double total = 0.0;
      for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto row = a.row(i);
        const double mx = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (double v : row) z += std::exp(v - mx);
        total += (mx + std::log(z)) - row[i];
      }
      return Matrix(1, 1, total / static_cast<double>(a.rows()));
    }
    case Op::gather: {
      Matrix out(n.out_rows, n.out_cols);
      const auto& idx = *n.index;
      require(idx.size() == out.size(), "gather: index length mismatch");
      const auto src = a.data();
      auto dst = out.data();
      for (std::size_t t = 0; t < idx.size(); ++t) dst[t] = src[idx[t]];
      return out;
    }
    case Op::reshape: {
      require(n.out_rows * n.out_cols == a.size(), "reshape: element count mismatch");
      return Matrix(n.out_rows, n.out_cols, std::vector<double>(a.data().begin(), a.data().end()));
    }
  }
  throw ContractError("tape: unknown op");
}

Var Tape::matmul(Var a, Var b) { return push(Op::matmul, a.id, b.id); }
Var Tape::transpose(Var a) { return push(Op::transpose, a.id); }
Var Tape::add(Var a, Var b) { return push(Op::add, a.id, b.id); }
Var Tape::sub(Var a, Var b) { return push(Op::sub, a.id, b.id); }
Var Tape::mul(Var a, Var b) { return push(Op::mul, a.id, b.id); }
Var Tape::scale(Var a, double alpha) { return push(Op::scale, a.id, kNone, alpha); }
Var Tape::add_scalar(Var a, double c) { return push(Op::add_scalar, a.id, kNone, c); }
Var Tape::add_row(Var a, Var row) { return push(Op::add_row, a.id, row.id); }
Var Tape::sub_identity(Var a) { return push(Op::sub_identity, a.id); }
Var Tape::tanh(Var a) { return push(Op::tanh, a.id); }
Var Tape::relu(Var a) { return push(Op::relu, a.id); }
Var Tape::sqrt(Var a) { return push(Op::sqrt, a.id); }
Var Tape::sum(Var a) { return push(Op::sum, a.id); }
Var Tape::mean(Var a) { return push(Op::mean, a.id); }
Var Tape::sum_rows(Var a) { return push(Op::sum_rows, a.id); }
Var Tape::col_mean(Var a) { return push(Op::col_mean, a.id); }
Var Tape::center_cols(Var a) { return push(Op::center_cols, a.id); }
Var Tape::offdiag(Var a) { return push(Op::offdiag, a.id); }
Var Tape::frob_sq(Var a) { return push(Op::frob_sq, a.id); }
Var Tape::norm(Var a) { return push(Op::norm, a.id); }
Var Tape::div(Var a, Var b) { return push(Op::div, a.id, b.id); }
Var Tape::row_normalize(Var a, double eps) { return push(Op::row_normalize, a.id, kNone, eps); }
Var Tape::xent_diag(Var logits) { return push(Op::xent_diag, logits.id); }

Var Tape::gather(Var a, std::size_t rows, std::size_t cols,
                 std::shared_ptr<const std::vector<std::size_t>> index) {
  for (std::size_t i : *index) {
    if (i >= node(a).value.size()) throw DimensionError("gather: index out of range");
  }
  return push(Op::gather, a.id, kNone, 0.0, std::move(index), rows, cols);
}

Var Tape::reshape(Var a, std::size_t rows, std::size_t cols) {
  return push(Op::reshape, a.id, kNone, 0.0, nullptr, rows, cols);
}

const Matrix& Tape::value(Var v) const { return node(v).value; }
bool Tape::requires_grad(Var v) const { return node(v).needs_grad; }
Op Tape::op(Var v) const { return node(v).op; }

bool Tape::touched(Var v) const { return node(v).has_grad; }

Matrix Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.has_grad) return n.grad;
  return Matrix(n.value.rows(), n.value.cols());
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.needs_grad) return;
  if (n.has_grad) {
    axpy_inplace(n.grad, 1.0, g);
  } else {
    n.grad = g;
    n.has_grad = true;
  }
}

void Tape::accumulate_scaled(std::size_t id, double alpha, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.needs_grad) return;
  if (n.has_grad) {
    axpy_inplace(n.grad, alpha, g);
  } else {
    n.grad = ortho::scale(g, alpha);
    n.has_grad = true;
  }
}

void Tape::backward(Var root) {
  const Node& r = node(root);
  if (!r.value.is_scalar()) {
    throw ContractError("tape: backward root must be 1x1, got " + r.value.shape_string());
  }
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad = Matrix();
  }
  backward_order_.clear();
  if (!r.needs_grad) return;
  nodes_[root.id].grad = Matrix(1, 1, 1.0);
  nodes_[root.id].has_grad = true;
  for (std::size_t id = root.id + 1; id-- > 0;) {
    if (!nodes_[id].has_grad || nodes_[id].op == Op::leaf) continue;
    backward_order_.push_back(id);
    propagate(id);
  }
}

void Tape::propagate(std::size_t id) {
  // inputs always precede id, so accumulate() never aliases n
  const Node& n = nodes_[id];
  if (n.op == Op::leaf) return;
  const Matrix& g = n.grad;
  const Matrix& a = nodes_[n.in0].value;
  const Matrix* b = n.in1 == kNone ? nullptr : &nodes_[n.in1].value;
  const bool need_a = nodes_[n.in0].needs_grad;
  const bool need_b = n.in1 != kNone && nodes_[n.in1].needs_grad;

  switch (n.op) {
    case Op::leaf:
      return;
    case Op::matmul:
      if (need_a) accumulate(n.in0, ortho::matmul(g, ortho::transpose(*b)));
      if (need_b) accumulate(n.in1, ortho::matmul(ortho::transpose(a), g));
      return;
    case Op::transpose:
      accumulate(n.in0, ortho::transpose(g));
      return;
    case Op::add:
      if (need_a) accumulate(n.in0, g);
      if (need_b) accumulate(n.in1, g);
      return;
    case Op::sub:
      if (need_a) accumulate(n.in0, g);
      if (need_b) accumulate_scaled(n.in1, -1.0, g);
      return;
    case Op::mul:
      if (need_a) accumulate(n.in0, ortho::hadamard(g, *b));
      if (need_b) accumulate(n.in1, ortho::hadamard(g, a));
      return;
    case Op::scale:
      accumulate_scaled(n.in0, n.arg, g);
      return;
    case Op::add_scalar:
    case Op::sub_identity:
      accumulate(n.in0, g);
      return;
    case Op::add_row: {
      if (need_a) accumulate(n.in0, g);
      if (need_b) {
        Matrix colsum(1, g.cols());
        for (std::size_t i = 0; i < g.rows(); ++i) {
          for (std::size_t j = 0; j < g.cols(); ++j) colsum(0, j) += g(i, j);
        }
        accumulate(n.in1, colsum);
      }
      return;
    }
    case Op::tanh: {
      Matrix d = g;
      const auto y = n.value.data();
      auto dd = d.data();
      for (std::size_t t = 0; t < dd.size(); ++t) dd[t] *= 1.0 - y[t] * y[t];
      accumulate(n.in0, d);
      return;
    }
    case Op::relu: {
      Matrix d = g;
      const auto x = a.data();
      auto dd = d.data();
      for (std::size_t t = 0; t < dd.size(); ++t) {
        if (!(x[t] > 0.0)) dd[t] = 0.0;
      }
      accumulate(n.in0, d);
      return;
    }
    case Op::sqrt: {
      Matrix d = g;
      const auto y = n.value.data();
      auto dd = d.data();
      for (std::size_t t = 0; t < dd.size(); ++t) dd[t] *= 0.5 / y[t];
      accumulate(n.in0, d);
      return;
    }
    case Op::sum:
      accumulate(n.in0, Matrix(a.rows(), a.cols(), g.scalar()));
      return;
    case Op::mean:
      accumulate(n.in0, Matrix(a.rows(), a.cols(), g.scalar() / static_cast<double>(a.size())));
      return;
    case Op::sum_rows: {
      Matrix d(a.rows(), a.cols());
      for (std::size_t i = 0; i < a.rows(); ++i) {
        for (double& v : d.row(i)) v = g(i, 0);
      }
      accumulate(n.in0, d);
      return;
    }
    case Op::col_mean: {
      Matrix d(a.rows(), a.cols());
      const double inv = 1.0 / static_cast<double>(a.rows());
      for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) d(i, j) = g(0, j) * inv;
      }
      accumulate(n.in0, d);
      return;
    }
    case Op::center_cols:
      accumulate(n.in0, center_columns(g));
      return;
    case Op::offdiag: {
      Matrix d = g;
      for (std::size_t i = 0; i < std::min(d.rows(), d.cols()); ++i) d(i, i) = 0.0;
      accumulate(n.in0, d);
      return;
    }
    case Op::frob_sq:
      accumulate_scaled(n.in0, 2.0 * g.scalar(), a);
      return;
    case Op::norm: {
      const double r = n.value.scalar();
      if (r > 0.0) accumulate_scaled(n.in0, g.scalar() / r, a);
      return;
    }
    case Op::div: {
      const double bv = b->scalar();
      if (need_a) accumulate(n.in0, Matrix(1, 1, g.scalar() / bv));
      if (need_b) accumulate(n.in1, Matrix(1, 1, -g.scalar() * a.scalar() / (bv * bv)));
      return;
    }
    case Op::row_normalize: {
      Matrix d(a.rows(), a.cols());
      for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto ai = a.row(i);
        const auto gi = g.row(i);
        const double r = std::sqrt(ortho::dot(ai, ai));
        const double s = 1.0 / (r + n.arg);
        const double ga = ortho::dot(gi, ai);
        const double k = r > 0.0 ? ga * s * s / r : 0.0;
        auto di = d.row(i);
        for (std::size_t j = 0; j < ai.size(); ++j) di[j] = s * gi[j] - k * ai[j];
      }
      accumulate(n.in0, d);
      return;
    }
    case Op::xent_diag: {
      Matrix d(a.rows(), a.cols());
      const double w = g.scalar() / static_cast<double>(a.rows());
      for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto row = a.row(i);
        const double mx = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (double v : row) z += std::exp(v - mx);
        auto di = d.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) {
          di[j] = w * (std::exp(row[j] - mx) / z - (i == j ? 1.0 : 0.0));
        }
      }
      accumulate(n.in0, d);
      return;
    }
    case Op::gather: {
      Matrix d(a.rows(), a.cols());
      const auto& idx = *n.index;
      auto dd = d.data();
      const auto gg = g.data();
      for (std::size_t t = 0; t < idx.size(); ++t) dd[idx[t]] += gg[t];
      accumulate(n.in0, d);
      return;
    }
    case Op::reshape:
      accumulate(n.in0,
                 Matrix(a.rows(), a.cols(), std::vector<double>(g.data().begin(), g.data().end())));
      return;
  }
}

double Tape::replay(Var root) {
  const Node& r = node(root);
  if (!r.value.is_scalar()) throw ContractError("tape: replay root must be 1x1");
  for (std::size_t id = 0; id <= root.id; ++id) {
    if (nodes_[id].op != Op::leaf) nodes_[id].value = compute(nodes_[id]);
  }
  return nodes_[root.id].value.scalar();
}

}  // namespace ortho::autodiff
