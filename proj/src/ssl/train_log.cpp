#include <stdexcept>

#include "ortho/io.hpp"
#include "ortho/ssl/train.hpp"

namespace ortho::ssl {

using nlohmann::json;

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> get_opt(const json& j, const char* key) {
  const json& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

}  // namespace

json train_log_to_json(const TrainLog& log) {
  json steps = json::array();
  for (const auto& s : log.steps) {
    steps.push_back({{"step", s.step},
                     {"loss_ssl", s.loss_ssl},
                     {"loss_whiten", s.loss_whiten},
                     {"loss_or", s.loss_or},
                     {"combined", s.combined}});
  }
  json epochs = json::array();
  for (const auto& e : log.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"loss_ssl", e.loss_ssl},
                      {"loss_whiten", e.loss_whiten},
                      {"loss_or", e.loss_or},
                      {"combined", e.combined},
                      {"effective_rank", opt(e.effective_rank)}});
  }
  return {{"gamma", log.gamma},
          {"diverged", log.diverged},
          {"divergence", log.divergence},
          {"epochs", std::move(epochs)},
          {"steps", std::move(steps)},
          {"final",
           {{"deepest_weight_effective_rank", opt(log.deepest_weight_effective_rank)},
            {"representation_effective_rank", opt(log.representation_effective_rank)},
            {"probe_accuracy", opt(log.probe_accuracy)},
            {"report", io::report_to_json(log.final_report)}}}};
}

TrainLog train_log_from_json(const json& j) {
  TrainLog log;
  log.gamma = j.at("gamma").get<double>();
  log.diverged = j.at("diverged").get<bool>();
  log.divergence = j.at("divergence").get<std::string>();
  for (const auto& s : j.at("steps")) {
    log.steps.push_back({s.at("step").get<std::size_t>(), s.at("loss_ssl").get<double>(),
                         s.at("loss_whiten").get<double>(), s.at("loss_or").get<double>(),
                         s.at("combined").get<double>()});
  }
  for (const auto& e : j.at("epochs")) {
    EpochLog el;
    el.epoch = e.at("epoch").get<std::size_t>();
    el.loss_ssl = e.at("loss_ssl").get<double>();
    el.loss_whiten = e.at("loss_whiten").get<double>();
    el.loss_or = e.at("loss_or").get<double>();
    el.combined = e.at("combined").get<double>();
    el.effective_rank = get_opt(e, "effective_rank");
    log.epochs.push_back(el);
  }
  const json& f = j.at("final");
  log.deepest_weight_effective_rank = get_opt(f, "deepest_weight_effective_rank");
  log.representation_effective_rank = get_opt(f, "representation_effective_rank");
  log.probe_accuracy = get_opt(f, "probe_accuracy");
  log.final_report = io::report_from_json(f.at("report"));
  return log;
}

}  // namespace ortho::ssl
