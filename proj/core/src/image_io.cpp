#include "kol/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>

#include "kol/errors.hpp"

namespace kol {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

void require_real(const Tensor& t, const char* what) {
  if (t.is_complex()) throw ArgumentError(std::string(what) + ": complex tensors are not supported");
}

std::uint32_t float_bits(float f) { return std::bit_cast<std::uint32_t>(f); }

}  // namespace

ImageFormat image_format_from_string(const std::string& s) {
  if (s == "pgm16") return ImageFormat::pgm16;
  if (s == "raw" || s == "raw-f32le") return ImageFormat::raw_f32;
  throw ArgumentError("unknown image format '" + s + "'");
}

std::string to_string(ImageFormat f) { return f == ImageFormat::pgm16 ? "pgm16" : "raw-f32le"; }

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  std::filesystem::path p = path;
  p += ".json";
  return p;
}

void export_pgm16(const Tensor& image, const std::filesystem::path& path) {
  require_real(image, "export_pgm16");
  if (image.rank() != 2) throw ArgumentError("export_pgm16 needs a 2-D tensor, got " + shape_string(image.shape()));
  const auto v = image.values();
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericalError("export_pgm16: image contains non-finite values");
  }
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it, hi = *hi_it;
  const std::size_t h = image.dim(0), w = image.dim(1);

  std::string data;
  data.reserve(2 * v.size());
  for (double x : v) {
    const long q = hi > lo ? std::lround((x - lo) / (hi - lo) * 65535.0) : 32768;
    const auto u = static_cast<std::uint16_t>(std::clamp(q, 0L, 65535L));
    data.push_back(static_cast<char>(u >> 8));
    data.push_back(static_cast<char>(u & 0xff));
  }
  auto out = open_out(path);
  out << "P5\n" << w << " " << h << "\n65535\n";
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  finish(out, path);
  write_json({{"format", "pgm16"}, {"width", w}, {"height", h}, {"maxval", 65535}, {"window", {{"min", lo}, {"max", hi}}}},
             sidecar_path(path));
}

Tensor import_pgm16(const std::filesystem::path& path) {
  const std::string bytes = read_all(path);
  std::istringstream head(bytes);
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  head >> magic >> w >> h >> maxval;
  if (!head || magic != "P5" || maxval != 65535 || w == 0 || h == 0) {
    throw IoError("'" + path.string() + "' is not a 16-bit P5 image");
  }
  const auto offset = static_cast<std::size_t>(head.tellg()) + 1;
  if (bytes.size() != offset + 2 * w * h) throw IoError("'" + path.string() + "' has a truncated pixel block");
  const nlohmann::json side = read_json(sidecar_path(path));
  const double lo = side.at("window").at("min").get<double>();
  const double hi = side.at("window").at("max").get<double>();
  Tensor t({h, w});
  auto v = t.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto b0 = static_cast<unsigned char>(bytes[offset + 2 * i]);
    const auto b1 = static_cast<unsigned char>(bytes[offset + 2 * i + 1]);
    const double q = static_cast<double>((b0 << 8) | b1);
    v[i] = hi > lo ? (q == 65535.0 ? hi : lo + q / 65535.0 * (hi - lo)) : lo;
  }
  return t;
}

void export_raw(const Tensor& t, const std::filesystem::path& path) {
  require_real(t, "export_raw");
  std::string data;
  data.reserve(4 * t.size());
  for (double x : t.values()) {
    const std::uint32_t b = float_bits(static_cast<float>(x));
    for (int k = 0; k < 4; ++k) data.push_back(static_cast<char>((b >> (8 * k)) & 0xff));
  }
  auto out = open_out(path);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  finish(out, path);
  write_json({{"shape", t.shape()}, {"dtype", "float32"}, {"order", "row-major"}, {"endianness", "little"}},
             sidecar_path(path));
}

Tensor import_raw(const std::filesystem::path& path) {
  const nlohmann::json side = read_json(sidecar_path(path));
  if (side.value("dtype", "") != "float32" || side.value("endianness", "") != "little" ||
      side.value("order", "") != "row-major") {
    throw IoError("'" + sidecar_path(path).string() + "' does not describe a float32 little-endian row-major dump");
  }
  const Shape shape = side.at("shape").get<Shape>();
  const std::string bytes = read_all(path);
  if (bytes.size() != 4 * shape_size(shape)) throw IoError("'" + path.string() + "' size disagrees with its sidecar");
  Tensor t(shape);
  auto v = t.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uint32_t b = 0;
    for (int k = 0; k < 4; ++k) b |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 * i + k])) << (8 * k);
    v[i] = static_cast<double>(std::bit_cast<float>(b));
  }
  return t;
}

void export_image(const Tensor& t, const std::filesystem::path& path, ImageFormat format) {
  if (format == ImageFormat::pgm16) {
    export_pgm16(t, path);
  } else {
    export_raw(t, path);
  }
}

Tensor import_image(const std::filesystem::path& path, ImageFormat format) {
  return format == ImageFormat::pgm16 ? import_pgm16(path) : import_raw(path);
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) { write_text(j.dump(2) + "\n", path); }

nlohmann::json read_json(const std::filesystem::path& path) {
  const std::string text = read_all(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << text;
  finish(out, path);
}

}  // namespace kol
