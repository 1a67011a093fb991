#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <string>

#include "ortho/cli.hpp"

namespace {

// Turn leftover `--key value` / `--key=value` tokens into config overrides.
bool collect_overrides(const std::vector<std::string>& extras,
                       std::vector<ortho::cli::Setting>& out, std::string& error) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& tok = extras[i];
    if (tok.rfind("--", 0) != 0) {
      error = "unexpected argument '" + tok + "'";
      return false;
    }
    const std::string body = tok.substr(2);
    if (const auto eq = body.find('='); eq != std::string::npos) {
      out.emplace_back(body.substr(0, eq), body.substr(eq + 1));
    } else if (i + 1 < extras.size() && extras[i + 1].rfind("--", 0) != 0) {
      out.emplace_back(body, extras[++i]);
    } else {
      error = "missing value for '" + tok + "'";
      return false;
    }
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace ortho::cli;
  CLI::App app{"Orthogonality regularization and dimensional-collapse toolkit"};
  app.require_subcommand(1);

  TrainArgs train;
  std::string train_config;
  auto* t = app.add_subcommand("train", "Run an SSL training experiment");
  t->add_option("--config", train_config, "key = value config file");
  t->add_option("--out", train.out, "output directory")->required();
  t->allow_extras();

  AnalyzeArgs analyze;
  std::string format = "csv";
  std::string axis = "rows";
  auto* a = app.add_subcommand("analyze", "Eigenspectrum report for a checkpoint bundle");
  a->add_option("--bundle", analyze.bundle, "bundle directory")->required();
  a->add_option("--features", analyze.features, "feature MATX files (stage = file stem)");
  a->add_option("--out", analyze.out, "output directory")->required();
  a->add_option("--format", format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  a->add_option("--weight-axis", axis, "rows|cols: which axis of W holds the samples")
      ->check(CLI::IsMember({"rows", "cols"}));

  CheckArgs check;
  std::string suite = "all";
  auto* c = app.add_subcommand("check", "Run property suites");
  c->add_option("--suite", suite, "prop1|gradients|all")
      ->check(CLI::IsMember({"prop1", "gradients", "all"}));
  c->add_option("--seed", check.seed, "suite seed");
  c->add_flag("--inject-fault", check.inject_fault)->group("");

  CompareArgs compare;
  auto* m = app.add_subcommand("compare", "Merge several training runs");
  m->add_option("--runs", compare.runs, "run directories")->required();
  m->add_option("--out", compare.out, "merged JSON path (CSV written alongside)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }

  if (t->parsed()) {
    if (!train_config.empty()) train.config = train_config;
    std::string error;
    if (!collect_overrides(t->remaining(), train.overrides, error)) {
      std::cerr << "train: " << error << "\n";
      return kExitInputError;
    }
    return cmd_train(train, std::cout, std::cerr);
  }
  if (a->parsed()) {
    analyze.format = format == "json" ? Format::json : Format::csv;
    analyze.weight_axis_cols = axis == "cols";
    return cmd_analyze(analyze, std::cout, std::cerr);
  }
  if (c->parsed()) {
    check.suite = suite == "prop1" ? Suite::prop1 : suite == "gradients" ? Suite::gradients : Suite::all;
    return cmd_check(check, std::cout, std::cerr);
  }
  return cmd_compare(compare, std::cout, std::cerr);
}
