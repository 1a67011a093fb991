#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <ostream>

#include <nlohmann/json.hpp>

#include "ortho/cli.hpp"
#include "ortho/errors.hpp"
#include "ortho/io.hpp"
#include "ortho/spectra.hpp"
#include "ortho/ssl/train.hpp"

namespace ortho::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  ssl::TrainConfig cfg;
  try {
    cfg = resolve_config(args.config, args.overrides, std::getenv("ORTHO_SEED"));
    ensure_dir(args.out);
    io::write_text(args.out / kResolvedConfigName, render_config(cfg));
  } catch (const std::exception& e) {
    err << "train: " << e.what() << "\n";
    return kExitInputError;
  }

  const ssl::TrainResult result = ssl::train(cfg);
  const ssl::TrainLog& log = result.log;
  try {
    io::write_text(args.out / kTrainLogName, dump(ssl::train_log_to_json(log)));
    const std::vector<LayerSpec> specs = ssl::encoder_specs(result.state);
    io::save_bundle(args.out / kCheckpointDirName, specs);
    io::export_report(log.final_report, io::ReportFormat::csv,
                      args.out / (std::string(kReportStem) + ".csv"));
    io::export_report(log.final_report, io::ReportFormat::json,
                      args.out / (std::string(kReportStem) + ".json"));
  } catch (const std::exception& e) {
    err << "train: " << e.what() << "\n";
    return kExitInputError;
  }
  if (log.diverged) {
    err << "train: diverged (" << log.divergence << "); last finite state written to "
        << args.out.string() << "\n";
    return kExitDivergence;
  }
  char line[256];
  std::snprintf(line, sizeof line,
                "train: %zu epochs, final loss_ssl %.6g, loss_or %.6g, effective rank "
                "(deepest weight %.4f, representations %.4f), probe accuracy %.4f\n",
                log.epochs.size(), log.epochs.back().loss_ssl, log.epochs.back().loss_or,
                log.deepest_weight_effective_rank.value_or(NAN),
                log.representation_effective_rank.value_or(NAN),
                log.probe_accuracy.value_or(NAN));
  out << line;
  return kExitOk;
}

int cmd_analyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err) {
  std::vector<LayerSpec> layers;
  std::vector<FeatureStage> features;
  try {
    layers = io::load_bundle(args.bundle);
    for (const auto& p : args.features) features.emplace_back(p.stem().string(), io::read_matx(p));
  } catch (const std::exception& e) {
    err << "analyze: " << e.what() << "\n";
    return kExitInputError;
  }

  CollapseOptions opts;
  opts.weight_axis = args.weight_axis_cols ? WeightAxis::cols : WeightAxis::rows;
  const CollapseReport report = collapse_report(layers, features, opts);
  try {
    ensure_dir(args.out);
    const bool csv = args.format == Format::csv;
    io::export_report(report, csv ? io::ReportFormat::csv : io::ReportFormat::json,
                      args.out / (std::string(kReportStem) + (csv ? ".csv" : ".json")));
    const fs::path corr_dir = args.out / "correlation";
    ensure_dir(corr_dir);
    for (const auto& l : layers) {
      const Matrix samples = args.weight_axis_cols ? transpose(l.weight) : l.weight;
      if (samples.rows() < 2) {
        err << "analyze: " << l.name << ": too few rows for a correlation matrix, skipped\n";
        continue;
      }
      io::write_text(corr_dir / (l.name + ".csv"), io::matrix_to_csv(correlation_matrix(samples)));
    }
  } catch (const std::exception& e) {
    err << "analyze: " << e.what() << "\n";
    return kExitInputError;
  }

  for (const auto& s : report.stages) {
    char line[256];
    if (!s.error.empty()) {
      std::snprintf(line, sizeof line, "%-28s error: %s\n", s.spectrum.source.c_str(),
                    s.error.c_str());
    } else {
      std::snprintf(line, sizeof line, "%-28s dim %3zu  effective rank %8.4f\n",
                    s.spectrum.source.c_str(), s.spectrum.dim, s.effective_rank.value_or(NAN));
    }
    out << line;
  }
  return kExitOk;
}

int cmd_check(const CheckArgs& args, std::ostream& out, std::ostream& /*err*/) {
  std::vector<CheckCase> cases;
  if (args.suite == Suite::prop1 || args.suite == Suite::all) {
    const auto p = run_prop1_suite(args.seed);
    cases.insert(cases.end(), p.begin(), p.end());
  }
  if (args.suite == Suite::gradients || args.suite == Suite::all) {
    GradientOptions g;
    g.inject_fault = args.inject_fault;
    const auto r = run_gradient_suite(args.seed, g);
    cases.insert(cases.end(), r.begin(), r.end());
  }
  bool ok = true;
  for (const auto& c : cases) {
    char line[256];
    std::snprintf(line, sizeof line, "%-4s %-10s %-40s max err %.3e (tol %.1e)\n",
                  c.passed ? "PASS" : "FAIL", c.suite.c_str(), c.name.c_str(), c.measured,
                  c.tolerance);
    out << line;
    if (!c.passed) {
      out << "     inputs: " << c.inputs << "\n";
      ok = false;
    }
  }
  return ok ? kExitOk : kExitPropertyFailure;
}

namespace {

struct RunSummary {
  std::string dir;
  std::string kind;
  std::string method;
  std::uint64_t seed = 0;
  ssl::TrainLog log;
};

RunSummary load_run(const fs::path& dir) {
  RunSummary r;
  r.dir = dir.string();
  const auto settings =
      parse_config_text(io::read_text(dir / kResolvedConfigName), (dir / kResolvedConfigName).string());
  ssl::TrainConfig cfg;
  for (const auto& [k, v] : settings) apply_setting(cfg, k, v);
  r.kind = std::string(to_string(cfg.regularizer.kind));
  r.method = cfg.method == ssl::Method::byol ? "byol" : "infonce";
  r.seed = cfg.seed;
  const fs::path log_path = dir / kTrainLogName;
  try {
    r.log = ssl::train_log_from_json(json::parse(io::read_text(log_path)));
  } catch (const json::exception& e) {
    throw std::runtime_error(log_path.string() + ": malformed train log: " + e.what());
  }
  return r;
}

std::optional<double> median(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string csv_opt(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

}  // namespace

int cmd_compare(const CompareArgs& args, std::ostream& out, std::ostream& err) {
  if (args.runs.size() < 2) {
    err << "compare: need at least 2 run directories\n";
    return kExitInputError;
  }
  std::vector<RunSummary> runs;
  try {
    for (const auto& d : args.runs) runs.push_back(load_run(d));
  } catch (const std::exception& e) {
    err << "compare: " << e.what() << "\n";
    return kExitInputError;
  }

  json jruns = json::array();
  std::string csv =
      "run,method,kind,seed,gamma,deepest_weight_effective_rank,representation_effective_rank,"
      "probe_accuracy,final_loss_ssl,final_loss_or,final_combined\n";
  std::map<std::string, std::vector<const RunSummary*>> by_kind;
  for (const auto& r : runs) {
    json curve = {{"loss_ssl", json::array()},
                  {"loss_or", json::array()},
                  {"combined", json::array()},
                  {"effective_rank", json::array()}};
    for (const auto& e : r.log.epochs) {
      curve["loss_ssl"].push_back(e.loss_ssl);
      curve["loss_or"].push_back(e.loss_or);
      curve["combined"].push_back(e.combined);
      curve["effective_rank"].push_back(opt(e.effective_rank));
    }
    jruns.push_back({{"run", r.dir},
                     {"method", r.method},
                     {"kind", r.kind},
                     {"seed", r.seed},
                     {"gamma", r.log.gamma},
                     {"deepest_weight_effective_rank", opt(r.log.deepest_weight_effective_rank)},
                     {"representation_effective_rank", opt(r.log.representation_effective_rank)},
                     {"probe_accuracy", opt(r.log.probe_accuracy)},
                     {"curves", std::move(curve)}});
    const auto last = r.log.epochs.empty() ? ssl::EpochLog{} : r.log.epochs.back();
    csv += r.dir + "," + r.method + "," + r.kind + "," + std::to_string(r.seed) + "," +
           csv_opt(r.log.gamma) + "," + csv_opt(r.log.deepest_weight_effective_rank) + "," +
           csv_opt(r.log.representation_effective_rank) + "," + csv_opt(r.log.probe_accuracy) +
           "," + csv_opt(last.loss_ssl) + "," + csv_opt(last.loss_or) + "," +
           csv_opt(last.combined) + "\n";
    by_kind[r.kind].push_back(&r);
  }

  json medians = json::object();
  for (const auto& [kind, members] : by_kind) {
    std::vector<double> w, z, p;
    for (const RunSummary* r : members) {
      if (r->log.deepest_weight_effective_rank) w.push_back(*r->log.deepest_weight_effective_rank);
      if (r->log.representation_effective_rank) z.push_back(*r->log.representation_effective_rank);
      if (r->log.probe_accuracy) p.push_back(*r->log.probe_accuracy);
    }
    medians[kind] = {{"runs", members.size()},
                     {"deepest_weight_effective_rank", opt(median(w))},
                     {"representation_effective_rank", opt(median(z))},
                     {"probe_accuracy", opt(median(p))}};
    char line[256];
    std::snprintf(line, sizeof line,
                  "%-14s runs %zu  median ER deepest weight %8.4f  representations %8.4f  probe "
                  "%.4f\n",
                  kind.c_str(), members.size(), median(w).value_or(NAN), median(z).value_or(NAN),
                  median(p).value_or(NAN));
    out << line;
  }

  try {
    if (args.out.has_parent_path()) ensure_dir(args.out.parent_path());
    io::write_text(args.out, dump({{"runs", std::move(jruns)}, {"medians", std::move(medians)}}));
    fs::path csv_path = args.out;
    csv_path.replace_extension(".csv");
    if (csv_path == args.out) csv_path += ".csv";
    io::write_text(csv_path, csv);
  } catch (const std::exception& e) {
    err << "compare: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitOk;
}

}  // namespace ortho::cli
