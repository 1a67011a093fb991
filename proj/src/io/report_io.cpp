#include <cstdio>
#include <fstream>
#include <sstream>

#include "ortho/io.hpp"

namespace ortho::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
json optional_to_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<T>();
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path.string() + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string matrix_to_csv(const Matrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += fmt_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

json report_to_json(const CollapseReport& report) {
  json stages = json::array();
  for (const auto& st : report.stages) {
    const auto& sp = st.spectrum;
    stages.push_back({{"source", sp.source},
                      {"kind", st.kind == StageKind::weight ? "weight" : "feature"},
                      {"dim", sp.dim},
                      {"raw", sp.raw},
                      {"normalized", sp.normalized},
                      {"nonpositive_count", sp.nonpositive_count},
                      {"degenerate", sp.degenerate},
                      {"effective_rank", optional_to_json(st.effective_rank)},
                      {"decay_hi_index", optional_to_json(st.decay_hi_index)},
                      {"decay_lo_index", optional_to_json(st.decay_lo_index)},
                      {"error", st.error}});
  }
  return {{"decay_hi", report.decay_hi}, {"decay_lo", report.decay_lo}, {"stages", stages}};
}

CollapseReport report_from_json(const json& j) {
  CollapseReport report;
  report.decay_hi = j.at("decay_hi").get<double>();
  report.decay_lo = j.at("decay_lo").get<double>();
  for (const auto& s : j.at("stages")) {
    StageSummary st;
    const auto kind = s.at("kind").get<std::string>();
    if (kind != "weight" && kind != "feature") {
      throw std::invalid_argument("report: unknown stage kind '" + kind + "'");
    }
    st.kind = kind == "weight" ? StageKind::weight : StageKind::feature;
    st.spectrum.source = s.at("source").get<std::string>();
    st.spectrum.dim = s.at("dim").get<std::size_t>();
    st.spectrum.raw = s.at("raw").get<std::vector<double>>();
    st.spectrum.normalized = s.at("normalized").get<std::vector<double>>();
    st.spectrum.nonpositive_count = s.at("nonpositive_count").get<std::size_t>();
    st.spectrum.degenerate = s.at("degenerate").get<bool>();
    st.effective_rank = optional_from_json<double>(s.at("effective_rank"));
    st.decay_hi_index = optional_from_json<std::size_t>(s.at("decay_hi_index"));
    st.decay_lo_index = optional_from_json<std::size_t>(s.at("decay_lo_index"));
    st.error = s.at("error").get<std::string>();
    report.stages.push_back(std::move(st));
  }
  return report;
}

std::string report_to_csv(const CollapseReport& report) {
  std::string out = "stage,index,raw,normalized,nonpositive_flag\n";
  for (const auto& st : report.stages) {
    const auto& sp = st.spectrum;
    for (std::size_t i = 0; i < sp.raw.size(); ++i) {
      out += sp.source;
      out += ',' + std::to_string(i) + ',' + fmt_double(sp.raw[i]) + ',' +
             fmt_double(sp.normalized[i]) + ',' + (sp.raw[i] <= 0.0 ? "1" : "0") + '\n';
    }
  }
  return out;
}

void export_report(const CollapseReport& report, ReportFormat format, const fs::path& path) {
  if (format == ReportFormat::csv) {
    write_text(path, report_to_csv(report));
  } else {
    write_text(path, report_to_json(report).dump(2) + "\n");
  }
}

CollapseReport import_report_json(const fs::path& path) {
  try {
    return report_from_json(json::parse(read_text(path)));
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": invalid report JSON (" + e.what() + ")");
  }
}

}  // namespace ortho::io
