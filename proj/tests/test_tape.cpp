#include <functional>
#include <memory>

#include "doctest.h"
#include "ortho/errors.hpp"
#include "ortho/linalg.hpp"
#include "ortho/tape.hpp"
#include "test_util.hpp"

using namespace ortho;
using autodiff::Tape;
using autodiff::Var;

namespace {

// Builds a scalar from one parameter; the weights make every output entry
// matter, so reductions that ignore structure are caught.
using Builder = std::function<Var(Tape&, Var)>;

Var weighted_sum(Tape& t, Var y, std::uint64_t seed) {
  const Matrix& v = t.value(y);
  const Var w = t.constant(testutil::gaussian(v.rows(), v.cols(), seed));
  return t.sum(t.mul(y, w));
}

double eval(const Builder& f, const Matrix& x) {
  Tape t;
  return t.scalar(f(t, t.constant(x)));
}

// Central differences, step 1e-5, at `samples` random entries.
double worst_fd_error(const Builder& f, Matrix x, std::size_t samples, std::uint64_t seed) {
  Tape t;
  const Var p = t.param(x);
  t.backward(f(t, p));
  const Matrix g = t.grad(p);
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t k = rng.next() % x.size();
    const double x0 = x.data()[k];
    x.data()[k] = x0 + 1e-5;
    const double fp = eval(f, x);
    x.data()[k] = x0 - 1e-5;
    const double fm = eval(f, x);
    x.data()[k] = x0;
    worst = std::max(worst, testutil::rel_err(g.data()[k], (fp - fm) / 2e-5));
  }
  return worst;
}

}  // namespace

TEST_SUITE("tape") {

TEST_CASE("analytic gradients") {
  Tape t;
  const Var w = t.param(Matrix::identity(2));
  t.backward(t.frob_sq(w));
  CHECK(t.grad(w) == scale(Matrix::identity(2), 2.0));

  Tape u;
  const Matrix x = testutil::gaussian(5, 3, 1);
  const Var wv = u.param(testutil::gaussian(3, 2, 2));
  u.backward(u.sum(u.matmul(u.constant(x), wv)));
  Matrix expect(3, 2);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t r = 0; r < 5; ++r) expect(i, j) += x(r, i);
  CHECK(max_abs_diff(u.grad(wv), expect) <= 1e-14);
}

TEST_CASE("constant loss gives zero gradients") {
  Tape t;
  const Var w = t.param(testutil::gaussian(3, 3, 1));
  const Var c = t.constant(Matrix::from_rows({{2.0}}));
  t.backward(t.scale(c, 3.0));
  CHECK(t.grad(w) == Matrix(3, 3));
  CHECK_FALSE(t.touched(w));
}

TEST_CASE("non-scalar root is a contract error") {
  Tape t;
  const Var w = t.param(Matrix(2, 2));
  CHECK_THROWS_AS(t.backward(w), ContractError);
}

TEST_CASE("backward visits nodes in reverse creation order") {
  Tape t;
  const Var a = t.param(testutil::gaussian(3, 3, 1));
  const Var b = t.tanh(a);
  const Var c = t.matmul(b, a);
  const Var d = t.frob_sq(c);
  t.backward(d);
  const auto& order = t.backward_order();
  // leaves only accumulate, they are not processed
  CHECK(order == std::vector<std::size_t>{d.id, c.id, b.id});
  CHECK(t.touched(a));
}

TEST_CASE("constants never receive adjoints") {
  Tape t;
  const Var x = t.constant(testutil::gaussian(4, 3, 1));
  const Var w = t.param(testutil::gaussian(3, 2, 2));
  t.backward(t.frob_sq(t.matmul(x, w)));
  CHECK(t.touched(w));
  CHECK_FALSE(t.touched(x));
  CHECK_FALSE(t.requires_grad(x));
}

TEST_CASE("replay reproduces the recorded loss bit for bit") {
  Tape t;
  const Var w = t.param(testutil::gaussian(6, 4, 3));
  const Var x = t.constant(testutil::gaussian(10, 6, 4));
  const Var h = t.row_normalize(t.tanh(t.matmul(x, w)), 1e-12);
  const Var loss = t.add(t.xent_diag(t.matmul(h, t.transpose(h))), t.norm(t.center_cols(h)));
  const double recorded = t.scalar(loss);
  CHECK(t.replay(loss) == recorded);
}

TEST_CASE("every differentiable op matches finite differences") {
  const Matrix sq = testutil::gaussian(4, 4, 10);
  const Matrix other = testutil::gaussian(4, 3, 11);
  const Matrix row = testutil::gaussian(1, 4, 12);
  auto index = std::make_shared<const std::vector<std::size_t>>(
      std::vector<std::size_t>{0, 5, 5, 15, 3, 2});
  const std::vector<std::pair<const char*, Builder>> cases = {
      {"matmul", [&](Tape& t, Var p) { return weighted_sum(t, t.matmul(p, t.constant(other)), 1); }},
      {"matmul rhs", [&](Tape& t, Var p) { return weighted_sum(t, t.matmul(t.constant(sq), p), 2); }},
      {"matmul self", [&](Tape& t, Var p) { return weighted_sum(t, t.matmul(p, p), 3); }},
      {"transpose", [&](Tape& t, Var p) { return weighted_sum(t, t.transpose(p), 4); }},
      {"add", [&](Tape& t, Var p) { return weighted_sum(t, t.add(p, t.tanh(p)), 5); }},
      {"sub", [&](Tape& t, Var p) { return weighted_sum(t, t.sub(t.constant(sq), p), 6); }},
      {"mul", [&](Tape& t, Var p) { return weighted_sum(t, t.mul(p, p), 7); }},
      {"scale", [&](Tape& t, Var p) { return weighted_sum(t, t.scale(p, -1.7), 8); }},
      {"add_scalar", [&](Tape& t, Var p) { return t.frob_sq(t.add_scalar(p, 0.3)); }},
      {"add_row", [&](Tape& t, Var p) { return weighted_sum(t, t.add_row(p, t.tanh(t.constant(row))), 9); }},
      {"add_row bias", [&](Tape& t, Var p) {
         return weighted_sum(t, t.add_row(t.constant(sq), t.col_mean(p)), 10); }},
      {"sub_identity", [&](Tape& t, Var p) { return t.frob_sq(t.sub_identity(p)); }},
      {"tanh", [&](Tape& t, Var p) { return weighted_sum(t, t.tanh(p), 11); }},
      {"relu", [&](Tape& t, Var p) { return weighted_sum(t, t.relu(t.add_scalar(p, 0.05)), 12); }},
      {"sqrt", [&](Tape& t, Var p) { return weighted_sum(t, t.sqrt(t.add_scalar(t.mul(p, p), 0.5)), 13); }},
      {"mean", [&](Tape& t, Var p) { return t.mean(t.mul(p, p)); }},
      {"sum_rows", [&](Tape& t, Var p) { return weighted_sum(t, t.sum_rows(p), 14); }},
      {"col_mean", [&](Tape& t, Var p) { return weighted_sum(t, t.col_mean(p), 15); }},
      {"center_cols", [&](Tape& t, Var p) { return weighted_sum(t, t.center_cols(p), 16); }},
      {"offdiag", [&](Tape& t, Var p) { return weighted_sum(t, t.offdiag(p), 17); }},
      {"norm", [&](Tape& t, Var p) { return t.norm(p); }},
      {"div", [&](Tape& t, Var p) { return t.div(t.frob_sq(p), t.add_scalar(t.sum(p), 40.0)); }},
      {"row_normalize", [&](Tape& t, Var p) { return weighted_sum(t, t.row_normalize(p, 1e-12), 18); }},
      {"xent_diag", [&](Tape& t, Var p) { return t.xent_diag(t.scale(p, 2.0)); }},
      {"gather", [&](Tape& t, Var p) { return weighted_sum(t, t.gather(p, 2, 3, index), 19); }},
      {"reshape", [&](Tape& t, Var p) { return weighted_sum(t, t.reshape(p, 2, 8), 20); }},
  };
  for (const auto& [name, f] : cases) {
    CAPTURE(name);
    CHECK(worst_fd_error(f, sq, 12, 99) <= 1e-5);
  }
}

TEST_CASE("shape errors") {
  Tape t;
  const Var a = t.param(Matrix(2, 3));
  CHECK_THROWS_AS(t.matmul(a, a), DimensionError);
  CHECK_THROWS_AS(t.add(a, t.constant(Matrix(3, 2))), DimensionError);
  CHECK_THROWS_AS(t.reshape(a, 4, 2), DimensionError);
}

}
