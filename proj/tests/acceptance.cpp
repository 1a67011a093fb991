// Acceptance gate: one PASS/FAIL line per criterion, exit 0 iff all pass.
// Tolerances and runtime limits are the contract values.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "ortho/cli.hpp"
#include "ortho/io.hpp"
#include "ortho/linalg.hpp"
#include "ortho/regularizers.hpp"
#include "ortho/spectra.hpp"
#include "ortho/ssl/train.hpp"

using namespace ortho;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failed = 0;

void report(int id, const char* title, const Outcome& o, double secs) {
  std::printf("criterion %2d %s  %-34s %s (%.2f s)\n", id, o.pass ? "PASS" : "FAIL", title,
              o.detail.c_str(), secs);
  std::fflush(stdout);
  if (!o.pass) ++g_failed;
}

template <class... Args>
std::string sprintf_str(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome regularizer_exactness() {
  Rng rng(101);
  double max_so = 0.0, max_srip = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t r = 1 + rng.next() % 32, c = 1 + rng.next() % 32;
    const Matrix q = random_orthogonal(r, c, rng);
    max_so = std::max(max_so, so_loss(q));
    max_srip = std::max(max_srip, std::abs(srip_loss(q, rng.next())));
  }
  const double so2 = so_loss(scale(Matrix::identity(2), 2.0));
  // W = diag(2, 1): W^T W - I = diag(3, 0)
  double srip_dev = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    srip_dev = std::max(srip_dev, std::abs(srip_loss(Matrix::diagonal({2.0, 1.0}), s) - 3.0));
  }
  const bool pass = max_so <= 1e-12 && max_srip <= 1e-12 && so2 == 18.0 && srip_dev <= 1e-9;
  return {pass, sprintf_str("max so %.2e, max srip %.2e, so(2I)=%.17g, |srip diag(3,0)-3| %.2e", max_so,
                    max_srip, so2, srip_dev)};
}

Outcome gradient_fidelity() {
  const auto cases = cli::run_gradient_suite(0);
  double worst = 0.0;
  bool pass = !cases.empty();
  std::string failed;
  for (const auto& c : cases) {
    worst = std::max(worst, c.measured);
    if (!c.passed) {
      pass = false;
      failed += " " + c.name;
    }
  }
  return {pass, sprintf_str("%zu cases x 20 shapes x 10 entries, worst rel err %.2e%s", cases.size(), worst,
                    failed.empty() ? "" : (", failed:" + failed).c_str())};
}

Outcome power_iteration_bound() {
  Rng rng(303);
  double worst_excess = -1e300, worst_recon = 0.0;
  bool pass = true;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 2 + rng.next() % 31;
    const Matrix g = random_normal(n, n, rng);
    const Matrix a = scale(add(g, transpose(g)), 0.5);
    const Eigensystem e = sym_eig(a);
    const Matrix rec =
        matmul(matmul(e.eigenvectors, Matrix::diagonal(e.eigenvalues)), transpose(e.eigenvectors));
    const double recon = frobenius(sub(rec, a)) / (1.0 + frobenius(a));
    double exact = 0.0;
    for (double v : e.eigenvalues) exact = std::max(exact, std::abs(v));
    const double est = power_iter_specnorm(a, rng.next());
    worst_excess = std::max(worst_excess, est - exact);
    worst_recon = std::max(worst_recon, recon);
    pass = pass && recon <= 1e-8 && est <= exact + 1e-9;
  }
  return {pass, sprintf_str("max(estimate - exact) %.2e, max relative reconstruction %.2e", worst_excess,
                    worst_recon)};
}

Outcome proposition1() {
  const auto cases = cli::run_prop1_suite(0);
  bool pass = !cases.empty();
  double worst = 0.0;
  for (const auto& c : cases) {
    pass = pass && c.passed;
    worst = std::max(worst, c.measured);
  }
  return {pass, sprintf_str("%zu cases (incl. the expected diag(2,1) failure), max deviation %.2e",
                    cases.size(), worst)};
}

Outcome definition1() {
  const auto s = normalized_eigenvalues(Matrix::from_rows({{1, 0}, {-1, 0}, {0, 2}, {0, -2}}));
  const double d0 = std::abs(s.normalized.at(0) - 1.0), d1 = std::abs(s.normalized.at(1) - 0.25);
  Rng rng(505);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 3 + rng.next() % 60, d = 1 + rng.next() % 12;
    const Matrix t = random_normal(n, d, rng);
    const double c = std::exp(4.0 * rng.normal());
    const auto a = normalized_eigenvalues(t), b = normalized_eigenvalues(scale(t, c));
    for (std::size_t k = 0; k < a.normalized.size(); ++k) {
      worst = std::max(worst, std::abs(a.normalized[k] - b.normalized[k]));
    }
  }
  const bool pass = d0 <= 1e-12 && d1 <= 1e-12 && worst <= 1e-10;
  return {pass, sprintf_str("[%.17g, %.17g], scale invariance max diff %.2e", s.normalized[0],
                    s.normalized[1], worst)};
}

// The shared experiment behind criteria 6, 7, 8 and 10.
struct Arm {
  const char* name;
  std::function<void(ssl::TrainConfig&)> setup;
  std::vector<ssl::TrainLog> logs;
  double seconds = 0.0;

  double median_of(const std::function<std::optional<double>(const ssl::TrainLog&)>& f) const {
    std::vector<double> v;
    for (const auto& l : logs) v.push_back(f(l).value_or(NAN));
    return median(v);
  }
  double weight_er() const {
    return median_of([](const ssl::TrainLog& l) { return l.deepest_weight_effective_rank; });
  }
  double repr_er() const {
    return median_of([](const ssl::TrainLog& l) { return l.representation_effective_rank; });
  }
  double probe() const {
    return median_of([](const ssl::TrainLog& l) { return l.probe_accuracy; });
  }
};

ssl::TrainConfig protocol(std::uint64_t seed) {
  ssl::TrainConfig c;  // BYOL-lite, 20->64->32, 5000 points, 4 clusters, 200 epochs, batch 256
  c.seed = seed;
  return c;
}

void run_arm(Arm& arm) {
  const auto t0 = Clock::now();
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    ssl::TrainConfig c = protocol(seed);
    arm.setup(c);
    arm.logs.push_back(ssl::train(c).log);
    const auto& l = arm.logs.back();
    std::printf("  run %-14s seed %llu  weight ER %8.4f  repr ER %7.4f  probe %.4f%s\n", arm.name,
                static_cast<unsigned long long>(seed), l.deepest_weight_effective_rank.value_or(NAN),
                l.representation_effective_rank.value_or(NAN), l.probe_accuracy.value_or(NAN),
                l.diverged ? "  DIVERGED" : "");
    std::fflush(stdout);
  }
  arm.seconds = seconds_since(t0);
}

Outcome io_contract() {
  Rng rng(909);
  int round_trips = 0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t r = rng.next() % 65, c = rng.next() % 65;
    Matrix m(r, c);
    for (double& v : m.data()) v = rng.normal() * std::exp(20.0 * rng.normal());
    const Matrix back = io::decode_matx(io::encode_matx(m));
    round_trips += back.rows() == r && back.cols() == c &&
                   std::memcmp(back.data().data(), m.data().data(), m.size() * 8) == 0;
  }

  // every enumeration order of the (c_in, h, s) axes, plus random row shuffles
  int perm_mismatch = 0, perms = 0;
  for (const io::ConvShape sh : {io::ConvShape{3, 2, 2, 2}, io::ConvShape{5, 3, 3, 3},
                                 io::ConvShape{16, 4, 3, 3}, io::ConvShape{2, 1, 5, 3}}) {
    std::vector<double> f(sh.size());
    for (double& v : f) v = rng.normal();
    const Matrix base = io::conv_reshape(f, sh);
    const double ref = so_loss(base);
    const std::size_t dims[3] = {sh.in_channels, sh.height, sh.width};
    int axes[3] = {0, 1, 2};
    do {
      Matrix w(sh.fan_in(), sh.out_channels);
      for (std::size_t ci = 0; ci < sh.in_channels; ++ci)
        for (std::size_t h = 0; h < sh.height; ++h)
          for (std::size_t s = 0; s < sh.width; ++s) {
            const std::size_t idx[3] = {ci, h, s};
            const std::size_t row =
                (idx[axes[0]] * dims[axes[1]] + idx[axes[1]]) * dims[axes[2]] + idx[axes[2]];
            for (std::size_t o = 0; o < sh.out_channels; ++o) {
              w(row, o) = base(io::conv_row_index(sh, ci, h, s), o);
            }
          }
      perm_mismatch += so_loss(w) != ref;
      ++perms;
    } while (std::next_permutation(axes, axes + 3));
    std::vector<std::size_t> order(base.rows());
    std::iota(order.begin(), order.end(), 0);
    for (int k = 0; k < 20; ++k) {
      std::shuffle(order.begin(), order.end(), rng.engine());
      Matrix w(base.rows(), base.cols());
      for (std::size_t r = 0; r < base.rows(); ++r)
        for (std::size_t c = 0; c < base.cols(); ++c) w(r, c) = base(order[r], c);
      perm_mismatch += so_loss(w) != ref;
      ++perms;
    }
  }

  int detected = 0;
  for (int i = 0; i < 100; ++i) {
    const Matrix m = random_normal(1 + rng.next() % 20, 1 + rng.next() % 20, rng);
    auto bytes = io::encode_matx(m);
    const std::size_t pos = io::kMatxHeaderSize + rng.next() % (bytes.size() - io::kMatxHeaderSize);
    bytes[pos] ^= static_cast<std::uint8_t>(1u << (rng.next() % 8));
    try {
      io::decode_matx(bytes);
    } catch (const io::MatxError& e) {
      detected += e.code() == io::MatxErrc::crc_mismatch;
    }
  }
  const bool pass = round_trips == 200 && perm_mismatch == 0 && detected == 100;
  return {pass, sprintf_str("round trips %d/200, so_loss ulp mismatches %d/%d, CRC detections %d/100",
                    round_trips, perm_mismatch, perms, detected)};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  auto timed = [](int id, const char* title, Outcome (*fn)(), double limit) {
    const auto t0 = Clock::now();
    Outcome o = fn();
    const double s = seconds_since(t0);
    if (s >= limit) {
      o.pass = false;
      o.detail += sprintf_str(", over the %.0f s limit", limit);
    }
    report(id, title, o, s);
  };
  timed(1, "regularizer exactness", regularizer_exactness, 1.0);
  timed(2, "gradient fidelity", gradient_fidelity, 30.0);
  timed(3, "power-iteration lower bound", power_iteration_bound, 30.0);
  timed(4, "orthogonal-layer propagation suite", proposition1, 10.0);
  timed(5, "normalized spectrum oracle", definition1, 5.0);

  std::printf("  training 12 runs (none, so, srip, whitening x 3 seeds)\n");
  std::fflush(stdout);
  Arm none{"none", [](ssl::TrainConfig& c) { c.regularizer.kind = RegularizerKind::none; }, {}, 0};
  Arm so{"so", [](ssl::TrainConfig& c) { c.regularizer.kind = RegularizerKind::so; }, {}, 0};
  Arm srip{"srip", [](ssl::TrainConfig& c) { c.regularizer.kind = RegularizerKind::srip; }, {}, 0};
  Arm whiten{"vicreg-whiten",
             [](ssl::TrainConfig& c) {
               c.regularizer.kind = RegularizerKind::vicreg_whiten;
               c.whiten_target = ssl::WhitenTarget::projector;
               c.regularizer.vicreg_gamma = 0.03;
             },
             {},
             0};
  for (Arm* a : {&none, &so, &srip, &whiten}) run_arm(*a);

  {
    const double secs = none.seconds + so.seconds + srip.seconds;
    const bool pass = so.repr_er() > none.repr_er() && so.weight_er() > none.weight_er() &&
                      srip.repr_er() > none.repr_er() && srip.weight_er() > none.weight_er() &&
                      secs < 600.0;
    report(6, "OR raises effective rank", {pass, sprintf_str("median repr/weight ER: none %.4f/%.4f, so %.4f/%.4f, srip %.4f/%.4f",
                                                    none.repr_er(), none.weight_er(), so.repr_er(),
                                                    so.weight_er(), srip.repr_er(), srip.weight_er())},
           secs);
  }
  {
    const double secs = none.seconds + so.seconds + srip.seconds + whiten.seconds;
    const bool pass = whiten.repr_er() > none.repr_er() && whiten.weight_er() <= none.weight_er() &&
                      so.repr_er() > none.repr_er() && so.weight_er() > none.weight_er() &&
                      secs < 600.0;
    report(7, "whitening vs OR", {pass, sprintf_str("median repr/weight ER: whitening %.4f/%.4f vs none %.4f/%.4f",
                                           whiten.repr_er(), whiten.weight_er(), none.repr_er(),
                                           none.weight_er())},
           secs);
  }
  {
    const auto t0 = Clock::now();
    ssl::TrainConfig c = protocol(0);
    c.regularizer.kind = RegularizerKind::so;
    c.regularizer.gamma = 0.0;
    const ssl::TrainLog zero = ssl::train(c).log;
    const bool identical = zero == none.logs[0] &&
                           ssl::train_log_to_json(zero).dump() ==
                               ssl::train_log_to_json(none.logs[0]).dump();
    double worst = 0.0;
    std::size_t steps = 0;
    for (const Arm* a : {&none, &so, &srip, &whiten})
      for (const auto& log : a->logs) {
        for (const auto& s : log.steps) {
          worst = std::max(worst, std::abs(s.combined - (s.loss_ssl + log.gamma * s.loss_or)));
          ++steps;
        }
        for (const auto& e : log.epochs) {
          worst = std::max(worst, std::abs(e.combined - (e.loss_ssl + log.gamma * e.loss_or)));
        }
      }
    report(8, "loss bookkeeping",
           {identical && worst <= 1e-12 && steps > 0,
            sprintf_str("gamma=0 vs none bit-identical: %s, max |combined - parts| %.2e over %zu steps",
                identical ? "yes" : "no", worst, steps)},
           seconds_since(t0));
  }
  timed(9, "IO contract", io_contract, 1e9);
  {
    const double chance = 0.25;
    const bool pass = so.probe() >= chance + 0.3 && srip.probe() >= chance + 0.3 &&
                      so.probe() >= none.probe() - 0.02 && srip.probe() >= none.probe() - 0.02;
    report(10, "probe sanity", {pass, sprintf_str("median probe accuracy: none %.4f, so %.4f, srip %.4f (chance %.2f)",
                                         none.probe(), so.probe(), srip.probe(), chance)},
           0.0);
  }

  std::printf("acceptance: %d/10 passed\n", 10 - g_failed);
  return g_failed == 0 ? 0 : 1;
}
