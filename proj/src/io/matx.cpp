#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include <zlib.h>

#include "ortho/io.hpp"

namespace ortho::io {

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(u & 0xffu));
    u = static_cast<U>(u >> 8);
  }
}

template <typename T>
T get_le(const std::uint8_t* p) {
  std::make_unsigned_t<T> u = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) u = static_cast<decltype(u)>((u << 8) | p[i]);
  return static_cast<T>(u);
}

}  // namespace

const char* to_string(MatxErrc code) noexcept {
  switch (code) {
    case MatxErrc::io:
      return "io error";
    case MatxErrc::bad_magic:
      return "bad magic";
    case MatxErrc::bad_version:
      return "unsupported version";
    case MatxErrc::bad_dtype:
      return "unsupported dtype";
    case MatxErrc::truncated:
      return "truncated file";
    case MatxErrc::crc_mismatch:
      return "CRC mismatch";
  }
  return "unknown";
}

MatxError::MatxError(MatxErrc code, const std::string& context, const std::string& detail)
    : std::runtime_error(context + ": " + to_string(code) + (detail.empty() ? "" : " (" + detail + ")")),
      code_(code) {}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) noexcept {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks
  std::size_t off = 0;
  while (off < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - off, 1u << 30);
    crc = ::crc32(crc, bytes.data() + off, static_cast<uInt>(n));
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_matx(const Matrix& m) {
  std::vector<std::uint8_t> out;
  out.reserve(kMatxHeaderSize + m.size() * 8 + 4);
  for (const char c : {'M', 'A', 'T', 'X'}) out.push_back(static_cast<std::uint8_t>(c));
  put_le<std::uint16_t>(out, kMatxVersion);
  put_le<std::uint8_t>(out, kMatxDtypeF64);
  put_le<std::uint64_t>(out, m.rows());
  put_le<std::uint64_t>(out, m.cols());
  for (double v : m.data()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  const std::uint32_t crc =
      crc32(std::span<const std::uint8_t>(out).subspan(kMatxHeaderSize, m.size() * 8));
  put_le<std::uint32_t>(out, crc);
  return out;
}

Matrix decode_matx(std::span<const std::uint8_t> bytes, const std::string& context) {
  if (bytes.size() < 4) throw MatxError(MatxErrc::truncated, context, "missing magic");
  if (std::memcmp(bytes.data(), "MATX", 4) != 0) throw MatxError(MatxErrc::bad_magic, context, "");
  if (bytes.size() < kMatxHeaderSize) throw MatxError(MatxErrc::truncated, context, "short header");
  const auto version = get_le<std::uint16_t>(bytes.data() + 4);
  if (version != kMatxVersion) {
    throw MatxError(MatxErrc::bad_version, context, "version " + std::to_string(version));
  }
  const auto dtype = bytes[6];
  if (dtype != kMatxDtypeF64) {
    throw MatxError(MatxErrc::bad_dtype, context, "dtype " + std::to_string(dtype));
  }
  const auto rows = get_le<std::uint64_t>(bytes.data() + 7);
  const auto cols = get_le<std::uint64_t>(bytes.data() + 15);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / 8;
  if (cols != 0 && rows > limit / cols) {
    throw MatxError(MatxErrc::truncated, context, "implausible shape");
  }
  const std::uint64_t payload = rows * cols * 8;
  if (bytes.size() - kMatxHeaderSize < payload + 4) {
    throw MatxError(MatxErrc::truncated, context,
                    "expected " + std::to_string(kMatxHeaderSize + payload + 4) + " bytes, got " +
                        std::to_string(bytes.size()));
  }
  const auto body = bytes.subspan(kMatxHeaderSize, payload);
  const auto stored = get_le<std::uint32_t>(bytes.data() + kMatxHeaderSize + payload);
  if (crc32(body) != stored) throw MatxError(MatxErrc::crc_mismatch, context, "");

  std::vector<double> data(rows * cols);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = std::bit_cast<double>(get_le<std::uint64_t>(body.data() + 8 * i));
  }
  return Matrix(rows, cols, std::move(data));
}

void write_matx(const Matrix& m, const std::filesystem::path& path) {
  const auto bytes = encode_matx(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw MatxError(MatxErrc::io, path.string(), "cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw MatxError(MatxErrc::io, path.string(), "write failed");
}

Matrix read_matx(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MatxError(MatxErrc::io, path.string(), "cannot open for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_matx(bytes, path.string());
}

}  // namespace ortho::io
