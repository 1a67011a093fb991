#include <algorithm>
#include <charconv>
#include <functional>
#include <sstream>

#include "ortho/cli.hpp"
#include "ortho/io.hpp"

namespace ortho::cli {

using ssl::TrainConfig;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

// shortest text that parses back to the same double
std::string fmt_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  throw ConfigError("config key '" + key + "': cannot parse '" + value + "' as " + want);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  return static_cast<std::size_t>(to_u64(key, v));
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "a boolean");
}

struct Field {
  const char* key;
  std::function<void(TrainConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

#define SIZE_FIELD(name, member)                                                          \
  Field {                                                                                 \
    name, [](TrainConfig& c, const std::string& k, const std::string& v) {                \
      c.member = to_size(k, v);                                                           \
    },                                                                                    \
        [](const TrainConfig& c) { return std::to_string(c.member); }                     \
  }
#define DOUBLE_FIELD(name, member)                                                        \
  Field {                                                                                 \
    name, [](TrainConfig& c, const std::string& k, const std::string& v) {                \
      c.member = to_double(k, v);                                                         \
    },                                                                                    \
        [](const TrainConfig& c) { return fmt_double(c.member); }                         \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"seed", [](TrainConfig& c, const std::string& k, const std::string& v) { c.seed = to_u64(k, v); },
       [](const TrainConfig& c) { return std::to_string(c.seed); }},
      {"method",
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         if (v == "byol") c.method = ssl::Method::byol;
         else if (v == "infonce") c.method = ssl::Method::infonce;
         else bad_value(k, v, "byol|infonce");
       },
       [](const TrainConfig& c) { return std::string(c.method == ssl::Method::byol ? "byol" : "infonce"); }},
      {"activation",
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         if (v == "tanh") c.activation = ssl::Activation::tanh;
         else if (v == "relu") c.activation = ssl::Activation::relu;
         else bad_value(k, v, "tanh|relu");
       },
       [](const TrainConfig& c) { return std::string(c.activation == ssl::Activation::tanh ? "tanh" : "relu"); }},
      SIZE_FIELD("epochs", epochs),
      SIZE_FIELD("batch_size", batch_size),
      DOUBLE_FIELD("lr", lr),
      DOUBLE_FIELD("ema_tau", ema_tau),
      DOUBLE_FIELD("temperature", temperature),
      {"regularizer.kind",
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         try {
           c.regularizer.kind = regularizer_kind_from_string(v);
         } catch (const std::exception&) {
           bad_value(k, v, "none|so|srip|vicreg-whiten");
         }
       },
       [](const TrainConfig& c) { return std::string(to_string(c.regularizer.kind)); }},
      {"regularizer.gamma",
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         if (v == "auto") c.regularizer.gamma.reset();
         else c.regularizer.gamma = to_double(k, v);
       },
       [](const TrainConfig& c) {
         return c.regularizer.gamma ? fmt_double(*c.regularizer.gamma) : std::string("auto");
       }},
      {"regularizer.gamma_preset",
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         if (v == "toy") c.gamma_preset = ssl::GammaPreset::toy;
         else if (v == "recipe") c.gamma_preset = ssl::GammaPreset::recipe;
         else bad_value(k, v, "toy|recipe");
       },
       [](const TrainConfig& c) {
         return std::string(c.gamma_preset == ssl::GammaPreset::toy ? "toy" : "recipe");
       }},
      {"regularizer.srip_seed",
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         c.regularizer.srip_seed = to_u64(k, v);
       },
       [](const TrainConfig& c) { return std::to_string(c.regularizer.srip_seed); }},
      DOUBLE_FIELD("regularizer.vicreg_gamma", regularizer.vicreg_gamma),
      DOUBLE_FIELD("regularizer.vicreg_threshold", regularizer.vicreg_threshold),
      DOUBLE_FIELD("regularizer.vicreg_epsilon", regularizer.vicreg_epsilon),
      {"regularizer.cov_divisor",
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         if (v == "n_minus_1") c.regularizer.cov_divisor = CovDivisor::n_minus_1;
         else if (v == "n") c.regularizer.cov_divisor = CovDivisor::n;
         else bad_value(k, v, "n_minus_1|n");
       },
       [](const TrainConfig& c) {
         return std::string(c.regularizer.cov_divisor == CovDivisor::n ? "n" : "n_minus_1");
       }},
      {"regularizer.whiten_target",
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         if (v == "predictor") c.whiten_target = ssl::WhitenTarget::predictor;
         else if (v == "projector") c.whiten_target = ssl::WhitenTarget::projector;
         else bad_value(k, v, "predictor|projector");
       },
       [](const TrainConfig& c) {
         return std::string(c.whiten_target == ssl::WhitenTarget::predictor ? "predictor" : "projector");
       }},
      SIZE_FIELD("data.n_samples", data.n_samples),
      SIZE_FIELD("data.dim", data.dim),
      SIZE_FIELD("data.n_clusters", data.n_clusters),
      DOUBLE_FIELD("data.cluster_std", data.cluster_std),
      DOUBLE_FIELD("augmentation.noise_std", augmentation.noise_std),
      DOUBLE_FIELD("augmentation.mask_prob", augmentation.mask_prob),
      SIZE_FIELD("dims.hidden", dims.hidden),
      SIZE_FIELD("dims.repr", dims.repr),
      {"dims.proj",
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         if (v == "none") c.dims.proj.reset();
         else c.dims.proj = to_size(k, v);
       },
       [](const TrainConfig& c) {
         return c.dims.proj ? std::to_string(*c.dims.proj) : std::string("none");
       }},
      {"conv.enabled",
       [](TrainConfig& c, const std::string& k, const std::string& v) { c.conv.enabled = to_bool(k, v); },
       [](const TrainConfig& c) { return std::string(c.conv.enabled ? "true" : "false"); }},
      SIZE_FIELD("conv.in_channels", conv.in_channels),
      SIZE_FIELD("conv.height", conv.height),
      SIZE_FIELD("conv.width", conv.width),
      SIZE_FIELD("conv.out_channels", conv.out_channels),
      SIZE_FIELD("conv.kernel_h", conv.kernel_h),
      SIZE_FIELD("conv.kernel_w", conv.kernel_w),
      SIZE_FIELD("probe.epochs", probe.epochs),
      DOUBLE_FIELD("probe.lr", probe.lr),
      {"spectra.weight_axis",
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         if (v == "rows") c.spectra.weight_axis = WeightAxis::rows;
         else if (v == "cols") c.spectra.weight_axis = WeightAxis::cols;
         else bad_value(k, v, "rows|cols");
       },
       [](const TrainConfig& c) {
         return std::string(c.spectra.weight_axis == WeightAxis::rows ? "rows" : "cols");
       }},
      DOUBLE_FIELD("spectra.decay_hi", spectra.decay_hi),
      DOUBLE_FIELD("spectra.decay_lo", spectra.decay_lo),
      {"spectra.cov_divisor",
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         if (v == "n_minus_1") c.spectra.divisor = CovDivisor::n_minus_1;
         else if (v == "n") c.spectra.divisor = CovDivisor::n;
         else bad_value(k, v, "n_minus_1|n");
       },
       [](const TrainConfig& c) {
         return std::string(c.spectra.divisor == CovDivisor::n ? "n" : "n_minus_1");
       }},
  };
  return table;
}

#undef SIZE_FIELD
#undef DOUBLE_FIELD

}  // namespace

std::vector<Setting> parse_config_text(const std::string& text, const std::string& origin) {
  std::vector<Setting> out;
  std::istringstream in(text);
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = origin + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    std::string key = normalize_key(trim(std::string_view(body).substr(0, eq)));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": missing key");
    if (value.empty()) throw ConfigError(where + ": missing value for '" + key + "'");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

void apply_setting(TrainConfig& cfg, const std::string& raw_key, const std::string& value) {
  const std::string key = normalize_key(raw_key);
  if (value.empty()) throw ConfigError("config key '" + key + "': missing value");
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(cfg, key, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

TrainConfig resolve_config(const std::optional<std::filesystem::path>& file,
                           const std::vector<Setting>& overrides, const char* env_seed) {
  TrainConfig cfg;
  if (env_seed && *env_seed) apply_setting(cfg, "seed", env_seed);
  if (file) {
    std::string text;
    try {
      text = io::read_text(*file);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    for (const auto& [k, v] : parse_config_text(text, file->string())) apply_setting(cfg, k, v);
  }
  for (const auto& [k, v] : overrides) apply_setting(cfg, k, v);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return cfg;
}

std::string render_config(const TrainConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(cfg) + "\n";
  out += "# OR weight in effect: " + fmt_double(cfg.or_gamma()) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.emplace_back(f.key);
  return keys;
}

}  // namespace ortho::cli
