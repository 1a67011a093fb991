#include <cstdlib>
#include <sstream>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "ortho/cli.hpp"
#include "ortho/io.hpp"
#include "ortho/linalg.hpp"
#include "test_util.hpp"

using namespace ortho;
using namespace ortho::cli;
namespace fs = std::filesystem;

namespace {

const char* kSmallRun =
    "# tiny run for tests\n"
    "seed = 3\n"
    "epochs = 3\n"
    "batch_size = 50\n"
    "data.n_samples = 400\n"
    "data.dim = 8\n"
    "data.n_clusters = 3\n"
    "dims.hidden = 12\n"
    "dims.repr = 6\n"
    "dims.proj = 6\n"
    "probe.epochs = 50\n"
    "regularizer.kind = so\n";

fs::path write_config(const fs::path& dir, const std::string& text,
                      const std::string& name = "run.cfg") {
  const fs::path p = dir / name;
  io::write_text(p, text);
  return p;
}

int train_into(const fs::path& cfg, const fs::path& out, std::vector<Setting> overrides = {}) {
  std::ostringstream o, e;
  return cmd_train({cfg, out, std::move(overrides)}, o, e);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config parsing") {
  const auto s = parse_config_text("a = 1\n  # note\n\nregularizer.kind=srip # trailing\nvicreg-gamma = 2\n", "t");
  REQUIRE(s.size() == 3);
  CHECK(s[0] == Setting{"a", "1"});
  CHECK(s[1] == Setting{"regularizer.kind", "srip"});
  CHECK(s[2] == Setting{"vicreg_gamma", "2"});
  CHECK_THROWS_AS(parse_config_text("epochs =\n", "t"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("just words\n", "t"), ConfigError);

  ssl::TrainConfig c;
  apply_setting(c, "regularizer.kind", "vicreg-whiten");
  CHECK(c.regularizer.kind == RegularizerKind::vicreg_whiten);
  apply_setting(c, "data.n-clusters", "7");
  CHECK(c.data.n_clusters == 7u);
  apply_setting(c, "dims.proj", "none");
  CHECK_FALSE(c.dims.proj.has_value());
  CHECK_THROWS_AS(apply_setting(c, "regularizer.gamm", "1"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "epochs", "12x"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "lr", "fast"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "method", "simclr"), ConfigError);
}

TEST_CASE("precedence: flag over file over env over default") {
  const auto dir = testutil::scratch_dir("cli_prec");
  const auto cfg = write_config(dir, "seed = 5\nepochs = 7\n");
  CHECK(resolve_config(std::nullopt, {}, nullptr).epochs == ssl::TrainConfig{}.epochs);
  CHECK(resolve_config(std::nullopt, {}, "9").seed == 9u);
  CHECK(resolve_config(cfg, {}, "9").seed == 5u);
  const auto r = resolve_config(cfg, {{"epochs", "2"}, {"seed", "1"}}, "9");
  CHECK(r.epochs == 2u);
  CHECK(r.seed == 1u);
  CHECK_THROWS_AS(resolve_config(cfg, {{"batch_size", "1"}}, nullptr), ConfigError);
  CHECK_THROWS_AS(resolve_config(dir / "absent.cfg", {}, nullptr), ConfigError);
  CHECK_THROWS_AS(resolve_config(std::nullopt, {}, "abc"), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("rendered config parses back to the same config") {
  ssl::TrainConfig c = resolve_config(std::nullopt, {{"lr", "0.1"}, {"regularizer.kind", "srip"},
                                                     {"dims.proj", "none"}, {"ema_tau", "0.3"}},
                                      nullptr);
  const std::string text = render_config(c);
  ssl::TrainConfig back;
  for (const auto& [k, v] : parse_config_text(text, "rendered")) apply_setting(back, k, v);
  CHECK(render_config(back) == text);
  CHECK(parse_config_text(text, "rendered").size() == config_keys().size());
}

TEST_CASE("train writes every artifact and is repeatable") {
  const auto dir = testutil::scratch_dir("cli_train");
  const auto cfg = write_config(dir, kSmallRun);
  REQUIRE(train_into(cfg, dir / "a") == kExitOk);
  REQUIRE(train_into(cfg, dir / "b") == kExitOk);
  for (const char* name : {kResolvedConfigName, kTrainLogName, "report.csv", "report.json",
                           "checkpoint/manifest.json"}) {
    CHECK(fs::exists(dir / "a" / name));
    CHECK(io::read_text(dir / "a" / name) == io::read_text(dir / "b" / name));
  }
  const auto layers = io::load_bundle(dir / "a" / kCheckpointDirName);
  CHECK(layers.size() == 2u);
  CHECK(io::read_text(dir / "a" / kResolvedConfigName).find("regularizer.kind = so") != std::string::npos);

  // gamma 0 on the command line reproduces the unregularized log
  REQUIRE(train_into(cfg, dir / "g0", {{"regularizer.gamma", "0"}}) == kExitOk);
  REQUIRE(train_into(cfg, dir / "none", {{"regularizer.kind", "none"}}) == kExitOk);
  CHECK(io::read_text(dir / "g0" / kTrainLogName) == io::read_text(dir / "none" / kTrainLogName));

  const auto bad = write_config(dir, std::string(kSmallRun) + "epochs =\n", "bad.cfg");
  std::ostringstream o, e;
  CHECK(cmd_train({bad, dir / "c", {}}, o, e) == kExitInputError);
  CHECK(e.str().find("epochs") != std::string::npos);
  CHECK(train_into(cfg, dir / "d", {{"no_such_key", "1"}}) == kExitInputError);

  CHECK(train_into(cfg, dir / "div", {{"lr", "1e150"}, {"activation", "relu"}}) == kExitDivergence);
  CHECK(fs::exists(dir / "div" / kTrainLogName));
  fs::remove_all(dir);
}

TEST_CASE("analyze") {
  const auto dir = testutil::scratch_dir("cli_analyze");
  Rng rng(1);
  std::vector<LayerSpec> layers = {
      {"l0", LayerKind::linear, {12, 12}, random_orthogonal(12, 12, rng)},
      {"l1", LayerKind::linear, {12, 6}, random_orthogonal(12, 6, rng)},
  };
  io::save_bundle(dir / "bundle", layers);

  // all sign patterns of 4 coordinates: zero mean, covariance (16/15) I
  Matrix iso(16, 4);
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 4; ++j) iso(i, j) = (i >> j) & 1 ? 1.0 : -1.0;
  io::write_matx(iso, dir / "iso.matx");

  std::ostringstream o, e;
  REQUIRE(cmd_analyze({dir / "bundle", {dir / "iso.matx"}, dir / "out", Format::json, false}, o, e) ==
          kExitOk);
  const CollapseReport r = io::import_report_json(dir / "out" / "report.json");
  for (const char* name : {"l0", "l1"}) {
    const StageSummary* s = r.find(name);
    REQUIRE(s != nullptr);
    // centering removes one direction; everything else is flat
    const auto& n = s->spectrum.normalized;
    for (std::size_t k = 0; k + 1 < n.size(); ++k) CHECK(n[k] == doctest::Approx(1.0).epsilon(1e-9));
  }
  const StageSummary* f = r.find("iso");
  REQUIRE(f != nullptr);
  CHECK(*f->effective_rank == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(fs::exists(dir / "out" / "correlation" / "l0.csv"));

  REQUIRE(cmd_analyze({dir / "bundle", {}, dir / "out_csv", Format::csv, false}, o, e) == kExitOk);
  CHECK(io::read_text(dir / "out_csv" / "report.csv").rfind("stage,index,raw,normalized,nonpositive_flag\n", 0) == 0);

  // corrupt one payload byte of a layer file
  const auto manifest = nlohmann::json::parse(io::read_text(dir / "bundle" / io::kManifestName));
  const fs::path victim = dir / "bundle" / manifest["layers"][1]["file"].get<std::string>();
  std::string bytes = io::read_text(victim);
  bytes[40] ^= 0x10;
  io::write_text(victim, bytes);
  std::ostringstream o2, e2;
  CHECK(cmd_analyze({dir / "bundle", {}, dir / "out2", Format::csv, false}, o2, e2) == kExitInputError);
  CHECK(e2.str().find(victim.filename().string()) != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("check exit codes and repeatability") {
  std::ostringstream a, b, e;
  CHECK(cmd_check({Suite::prop1, 4, false}, a, e) == kExitOk);
  CHECK(cmd_check({Suite::prop1, 4, false}, b, e) == kExitOk);
  CHECK(a.str() == b.str());
  std::ostringstream g;
  CHECK(cmd_check({Suite::gradients, 0, false}, g, e) == kExitOk);
  std::ostringstream f;
  CHECK(cmd_check({Suite::gradients, 0, true}, f, e) == kExitPropertyFailure);
  CHECK(f.str().find("FAIL") != std::string::npos);
  CHECK(f.str().find("inputs:") != std::string::npos);
}

TEST_CASE("compare") {
  const auto dir = testutil::scratch_dir("cli_compare");
  const auto cfg = write_config(dir, kSmallRun);
  REQUIRE(train_into(cfg, dir / "so") == kExitOk);
  REQUIRE(train_into(cfg, dir / "none", {{"regularizer.kind", "none"}}) == kExitOk);

  std::ostringstream o, e;
  REQUIRE(cmd_compare({{dir / "so", dir / "so"}, dir / "self.json"}, o, e) == kExitOk);
  const auto self = nlohmann::json::parse(io::read_text(dir / "self.json"));
  REQUIRE(self["runs"].size() == 2);
  CHECK(self["runs"][0] == self["runs"][1]);
  CHECK(fs::exists(dir / "self.csv"));

  REQUIRE(cmd_compare({{dir / "so", dir / "none"}, dir / "both.json"}, o, e) == kExitOk);
  const auto both = nlohmann::json::parse(io::read_text(dir / "both.json"));
  CHECK(both["medians"].contains("so"));
  CHECK(both["medians"].contains("none"));
  const std::string first = io::read_text(dir / "both.json");
  REQUIRE(cmd_compare({{dir / "so", dir / "none"}, dir / "both.json"}, o, e) == kExitOk);
  CHECK(io::read_text(dir / "both.json") == first);

  fs::create_directories(dir / "empty");
  CHECK(cmd_compare({{dir / "so", dir / "empty"}, dir / "x.json"}, o, e) == kExitInputError);
  io::write_text(dir / "none" / kTrainLogName, "{\"broken\": ");
  CHECK(cmd_compare({{dir / "so", dir / "none"}, dir / "x.json"}, o, e) == kExitInputError);
  CHECK(cmd_compare({{dir / "so"}, dir / "x.json"}, o, e) == kExitInputError);
  fs::remove_all(dir);
}

}
