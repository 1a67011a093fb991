#pragma once

// Persistence: MATX matrix files, checkpoint bundles, the conv-filter
// reshape, and collapse-report export.
//
// MATX layout (all integers little-endian):
//   offset 0   "MATX"              4 bytes
//   offset 4   version = 1         u16
//   offset 6   dtype   = 1 (f64)   u8
//   offset 7   rows                u64
//   offset 15  cols                u64
//   offset 23  payload             rows*cols f64, row-major
//   then       CRC-32 of payload   u32

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ortho/matrix.hpp"
#include "ortho/regularizers.hpp"
#include "ortho/spectra.hpp"

namespace ortho::io {

inline constexpr std::uint16_t kMatxVersion = 1;
inline constexpr std::uint8_t kMatxDtypeF64 = 1;
inline constexpr std::size_t kMatxHeaderSize = 23;

enum class MatxErrc { io = 1, bad_magic, bad_version, bad_dtype, truncated, crc_mismatch };

const char* to_string(MatxErrc code) noexcept;

class MatxError : public std::runtime_error {
 public:
  MatxError(MatxErrc code, const std::string& context, const std::string& detail);
  MatxErrc code() const noexcept { return code_; }

 private:
  MatxErrc code_;
};

std::uint32_t crc32(std::span<const std::uint8_t> bytes) noexcept;

std::vector<std::uint8_t> encode_matx(const Matrix& m);
/// `context` (usually the path) prefixes error messages.
Matrix decode_matx(std::span<const std::uint8_t> bytes, const std::string& context = "<memory>");
void write_matx(const Matrix& m, const std::filesystem::path& path);
Matrix read_matx(const std::filesystem::path& path);

/// Axis sizes of a conv filter stored as (C_out, C_in, H, S).
struct ConvShape {
  std::size_t out_channels = 1;
  std::size_t in_channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t fan_in() const noexcept { return in_channels * height * width; }
  std::size_t size() const noexcept { return out_channels * fan_in(); }
};

/// Row of the reshaped matrix holding filter tap (c_in, h, s):
/// c_in varies slowest, then h, then s.
constexpr std::size_t conv_row_index(const ConvShape& shape, std::size_t c_in, std::size_t h,
                                     std::size_t s) noexcept {
  return (c_in * shape.height + h) * shape.width + s;
}

/// Filter flattened C_out-major -> (S*H*C_in) x C_out weight matrix.
Matrix conv_reshape(std::span<const double> filter, const ConvShape& shape);
/// Inverse of conv_reshape.
std::vector<double> conv_unreshape(const Matrix& weight, const ConvShape& shape);
ConvShape conv_shape_from(std::span<const std::size_t> raw_shape);

class BundleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kManifestName = "manifest.json";

/// Writes manifest.json plus one MATX per layer into `dir`. Conv layers are
/// stored in raw filter order as a C_out x (C_in*H*S) matrix.
void save_bundle(const std::filesystem::path& dir, std::span<const LayerSpec> layers);
/// Layers in manifest order; conv weights come back reshaped.
std::vector<LayerSpec> load_bundle(const std::filesystem::path& dir);

enum class ReportFormat { csv, json };

nlohmann::json report_to_json(const CollapseReport& report);
CollapseReport report_from_json(const nlohmann::json& j);
/// Header `stage,index,raw,normalized,nonpositive_flag`, one row per eigenvalue.
std::string report_to_csv(const CollapseReport& report);
void export_report(const CollapseReport& report, ReportFormat format,
                   const std::filesystem::path& path);
CollapseReport import_report_json(const std::filesystem::path& path);

/// Writes `text` to `path`, throwing std::runtime_error with the path on failure.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
/// Matrix as CSV rows (no header), %.17g.
std::string matrix_to_csv(const Matrix& m);

}  // namespace ortho::io
