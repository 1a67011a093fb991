#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "ortho/cli.hpp"
#include "ortho/linalg.hpp"
#include "ortho/regularizers.hpp"
#include "ortho/rng.hpp"
#include "ortho/spectra.hpp"
#include "ortho/ssl/data.hpp"
#include "ortho/ssl/objective.hpp"

namespace ortho::cli {

namespace {

std::string describe(const Matrix& m) {
  std::ostringstream os;
  os.precision(17);
  os << m.shape_string() << " [";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    os << (i ? "; " : "");
    for (std::size_t j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
  }
  os << "]";
  return os.str();
}

// Centered, exactly whitened N x D data with covariance sigma2 * I.
Matrix whitened_data(std::size_t n, std::size_t d, double sigma2, Rng& rng) {
  Matrix x = center_columns(random_normal(n, d, rng));
  Matrix q = transpose(x);  // D x N, orthonormalize rows
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < d; ++i) {
      auto ri = q.row(i);
      for (std::size_t k = 0; k < i; ++k) {
        const auto rk = q.row(k);
        double proj = 0.0;
        for (std::size_t t = 0; t < n; ++t) proj += ri[t] * rk[t];
        for (std::size_t t = 0; t < n; ++t) ri[t] -= proj * rk[t];
      }
      double norm = 0.0;
      for (double v : ri) norm += v * v;
      norm = std::sqrt(norm);
      for (double& v : ri) v /= norm;
    }
  }
  return scale(transpose(q), std::sqrt(sigma2 * static_cast<double>(n - 1)));
}

struct Worst {
  double measured = 0.0;
  bool failed = false;
  std::string inputs;

  void see(bool ok, double value, const std::function<std::string()>& echo) {
    if (!ok && !failed) {
      failed = true;
      inputs = echo();
    }
    measured = std::max(measured, value);
  }
};

CheckCase finish(const char* suite, const std::string& name, const Worst& w, double tol) {
  return {suite, name, !w.failed, w.measured, tol, w.failed ? w.inputs : std::string()};
}

}  // namespace

std::vector<CheckCase> run_prop1_suite(std::uint64_t seed, const Prop1Options& opts) {
  Worst point1, point2, point3;
  for (std::size_t t = 0; t < opts.instances; ++t) {
    const std::uint64_t case_seed = derive_seed(seed, 11, t);
    Rng rng(case_seed);
    const std::size_t d = 2 + rng.next() % 7;
    const std::size_t n = d + 4 + rng.next() % 40;
    const double sigma2 = rng.uniform(0.25, 4.0);
    const Matrix x = whitened_data(n, d, sigma2, rng);
    const Matrix w = random_orthogonal(d, d, rng);
    const Matrix g = random_normal(n, d, rng);
    auto echo = [&] {
      return "case_seed=" + std::to_string(case_seed) + " W=" + describe(w) + " X=" + describe(x);
    };
    const WhiteningCheck wc = prop1_whitening_check(w, x, opts.tolerance);
    point1.see(wc.passed, std::max(wc.max_abs_mean, wc.cov_deviation), echo);
    const NormCheck nc = prop1_norm_check(w, x);
    point2.see(nc.passed && nc.relative_gap <= opts.tolerance, nc.relative_gap, echo);
    const NormCheck gc = prop1_gradnorm_check(w, g);
    point3.see(gc.passed && gc.relative_gap <= opts.tolerance, gc.relative_gap, [&] {
      return "case_seed=" + std::to_string(case_seed) + " W=" + describe(w) + " G=" + describe(g);
    });
  }

  // W = diag(2, 1) on whitened data: Cov(S) = sigma^2 diag(4, 1), so the
  // deviation from sigma^2 I is exactly 3 sigma^2 and the check must fail.
  Worst counter;
  {
    Rng rng(derive_seed(seed, 12));
    const double sigma2 = 1.5;
    const Matrix x = whitened_data(32, 2, sigma2, rng);
    const Matrix w = Matrix::diagonal({2.0, 1.0});
    const WhiteningCheck wc = prop1_whitening_check(w, x, opts.tolerance);
    const double gap = std::abs(wc.cov_deviation - 3.0 * sigma2) / (3.0 * sigma2);
    counter.see(!wc.passed && gap <= opts.tolerance, gap,
                [&] { return "W=" + describe(w) + " X=" + describe(x); });
  }
  return {finish("prop1", "whitened output (point 1)", point1, opts.tolerance),
          finish("prop1", "norm preservation (point 2)", point2, opts.tolerance),
          finish("prop1", "gradient norm preservation (point 3)", point3, opts.tolerance),
          finish("prop1", "non-orthogonal counterexample", counter, opts.tolerance)};
}

double relative_error(double analytic, double numeric) noexcept {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

namespace {

// Fourth-order central difference of f along one coordinate of x.
double numeric_partial(const std::function<double()>& f, double& x) {
  const double h = 1e-3 * std::max(1.0, std::abs(x));
  const double x0 = x;
  x = x0 + h;
  const double f1 = f();
  x = x0 - h;
  const double fm1 = f();
  x = x0 + 2 * h;
  const double f2 = f();
  x = x0 - 2 * h;
  const double fm2 = f();
  x = x0;
  return (8.0 * (f1 - fm1) - (f2 - fm2)) / (12.0 * h);
}

struct Shape {
  std::size_t rows, cols;
};

Shape random_shape(Rng& rng) { return {1 + rng.next() % 8, 1 + rng.next() % 8}; }

// One matrix-input scalar function: compare `grad(w)` with FD at sampled
// entries over opts.shapes random shapes.
CheckCase matrix_case(const std::string& name, std::uint64_t seed, std::uint64_t id,
                      const GradientOptions& opts, double tol, std::size_t min_rows,
                      const std::function<double(const Matrix&, std::uint64_t)>& f,
                      const std::function<Matrix(const Matrix&, std::uint64_t)>& grad) {
  Worst worst;
  for (std::size_t s = 0; s < opts.shapes; ++s) {
    const std::uint64_t case_seed = derive_seed(seed, id, s);
    Rng rng(case_seed);
    Shape sh = random_shape(rng);
    sh.rows = std::max(sh.rows, min_rows);
    Matrix w = random_normal(sh.rows, sh.cols, rng, 1.0 / std::sqrt(static_cast<double>(sh.rows)));
    const std::uint64_t fseed = rng.next();
    Matrix g = grad(w, fseed);
    if (opts.inject_fault) g = scale(g, 1.01);
    for (std::size_t e = 0; e < opts.entries; ++e) {
      const std::size_t k = rng.next() % w.size();
      double& coord = w.data()[k];
      const double num = numeric_partial([&] { return f(w, fseed); }, coord);
      const double err = relative_error(g.data()[k], num);
      worst.see(err <= tol, err, [&] {
        std::ostringstream os;
        os.precision(17);
        os << "case_seed=" << case_seed << " entry=" << k << " analytic=" << g.data()[k]
           << " numeric=" << num << " W=" << describe(w);
        return os.str();
      });
    }
  }
  return finish("gradients", name, worst, tol);
}

ssl::TrainConfig small_net_config(Rng& rng, ssl::Method method) {
  ssl::TrainConfig c;
  c.method = method;
  c.data.dim = 2 + rng.next() % 5;
  c.dims.hidden = 2 + rng.next() % 5;
  c.dims.repr = 2 + rng.next() % 4;
  if (rng.next() % 4 == 0) c.dims.proj.reset();
  else c.dims.proj = 2 + rng.next() % 4;
  c.batch_size = 4 + rng.next() % 5;
  c.temperature = 0.5;
  return c;
}

// Step-level check: perturb one online parameter, re-run the step with the
// same augmentation stream, and compare against the returned gradient.
CheckCase step_case(const std::string& name, std::uint64_t seed, std::uint64_t id,
                    const GradientOptions& opts, ssl::Method method,
                    const std::function<double(const ssl::DualNetState&, const Matrix&,
                                               const ssl::TrainConfig&, std::uint64_t,
                                               std::vector<Matrix>*)>& run) {
  Worst worst;
  for (std::size_t s = 0; s < opts.shapes; ++s) {
    const std::uint64_t case_seed = derive_seed(seed, id, s);
    Rng rng(case_seed);
    const ssl::TrainConfig cfg = small_net_config(rng, method);
    Rng init(rng.next()), target(rng.next());
    ssl::DualNetState state = ssl::make_dual_state(cfg, init, target);
    // Zero biases plus a fully masked row give a zero embedding, where the
    // cosine guard makes the loss too curved for finite differences.
    for (ssl::Net* net : {&state.encoder, &state.projector, &state.predictor,
                          &state.target_encoder, &state.target_projector}) {
      for (auto& l : net->layers) l.bias = random_normal(1, l.bias.cols(), rng, 0.5);
    }
    const Matrix batch = random_normal(cfg.batch_size, cfg.data.dim, rng);
    const std::uint64_t aug_seed = rng.next();
    std::vector<Matrix> grads;
    run(state, batch, cfg, aug_seed, &grads);
    const std::vector<Matrix*> params = ssl::online_parameters(state);
    std::size_t total = 0;
    for (const Matrix* p : params) total += p->size();
    for (std::size_t e = 0; e < opts.entries; ++e) {
      std::size_t k = rng.next() % total;
      std::size_t which = 0;
      while (k >= params[which]->size()) k -= params[which++]->size();
      double& coord = params[which]->data()[k];
      const double num =
          numeric_partial([&] { return run(state, batch, cfg, aug_seed, nullptr); }, coord);
      double ana = grads[which].data()[k];
      if (opts.inject_fault) ana *= 1.01;
      const double err = relative_error(ana, num);
      worst.see(err <= opts.tolerance, err, [&] {
        std::ostringstream os;
        os.precision(17);
        os << "case_seed=" << case_seed << " parameter=" << which << " entry=" << k
           << " analytic=" << ana << " numeric=" << num;
        return os.str();
      });
    }
  }
  return finish("gradients", name, worst, opts.tolerance);
}

}  // namespace

std::vector<CheckCase> run_gradient_suite(std::uint64_t seed, const GradientOptions& opts) {
  using autodiff::Tape;
  std::vector<CheckCase> out;
  const auto so_value = [](const Matrix& w, std::uint64_t) { return so_loss(w); };
  out.push_back(matrix_case("so_grad closed form", seed, 21, opts, opts.so_tolerance, 1, so_value,
                            [](const Matrix& w, std::uint64_t) { return so_grad(w); }));
  out.push_back(matrix_case("so_loss tape", seed, 22, opts, opts.so_tolerance, 1, so_value,
                            [](const Matrix& w, std::uint64_t) {
                              Tape t;
                              const auto v = t.param(w);
                              t.backward(taped::so_loss(t, v));
                              return t.grad(v);
                            }));
  out.push_back(matrix_case("srip_loss tape", seed, 23, opts, opts.tolerance, 1,
                            [](const Matrix& w, std::uint64_t s) { return srip_loss(w, s); },
                            [](const Matrix& w, std::uint64_t s) { return srip_grad(w, s); }));
  out.push_back(matrix_case(
      "vicreg variance tape", seed, 24, opts, opts.tolerance, 2,
      [](const Matrix& h, std::uint64_t) { return vicreg_variance_loss(scale(h, 0.5), 1.0, 1e-4); },
      [](const Matrix& h, std::uint64_t) {
        Tape t;
        const auto v = t.param(h);
        t.backward(taped::vicreg_variance_loss(t, t.scale(v, 0.5), 1.0, 1e-4));
        return t.grad(v);
      }));
  out.push_back(matrix_case(
      "vicreg covariance tape", seed, 25, opts, opts.tolerance, 2,
      [](const Matrix& h, std::uint64_t) { return vicreg_covariance_loss(h); },
      [](const Matrix& h, std::uint64_t) {
        Tape t;
        const auto v = t.param(h);
        t.backward(taped::vicreg_covariance_loss(t, v));
        return t.grad(v);
      }));

  out.push_back(step_case(
      "byol_step", seed, 26, opts, ssl::Method::byol,
      [](const ssl::DualNetState& st, const Matrix& b, const ssl::TrainConfig& c, std::uint64_t a,
         std::vector<Matrix>* g) {
        Rng rng(a);
        ssl::StepResult r = ssl::byol_step(st, b, c, rng);
        if (g) *g = std::move(r.grads);
        return r.loss_ssl;
      }));
  out.push_back(step_case(
      "infonce_step", seed, 27, opts, ssl::Method::infonce,
      [](const ssl::DualNetState& st, const Matrix& b, const ssl::TrainConfig& c, std::uint64_t a,
         std::vector<Matrix>* g) {
        Rng rng(a);
        ssl::StepResult r = ssl::infonce_step(st, b, c, rng);
        if (g) *g = std::move(r.grads);
        return r.loss_ssl;
      }));
  out.push_back(step_case(
      "combined objective (whitening + SO)", seed, 28, opts, ssl::Method::byol,
      [](const ssl::DualNetState& st, const Matrix& b, const ssl::TrainConfig& c, std::uint64_t a,
         std::vector<Matrix>* g) {
        ssl::TrainConfig cc = c;
        cc.regularizer.kind = RegularizerKind::so;
        cc.regularizer.gamma = 0.1;
        cc.regularizer.vicreg_gamma = 0.5;
        Rng rng(a);
        const Matrix v1 = ssl::augment(b, cc.augmentation, rng);
        const Matrix v2 = ssl::augment(b, cc.augmentation, rng);
        ssl::StepResult r = ssl::evaluate_objective(st, v1, v2, cc, 0, {true, true});
        if (g) *g = std::move(r.grads);
        return r.combined;
      }));
  return out;
}

}  // namespace ortho::cli
