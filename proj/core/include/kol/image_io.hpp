#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "kol/tensor.hpp"

namespace kol {

enum class ImageFormat { pgm16, raw_f32 };

ImageFormat image_format_from_string(const std::string& s);
std::string to_string(ImageFormat f);

/// Sidecar file next to an image: "<path>.json".
std::filesystem::path sidecar_path(const std::filesystem::path& path);

/// Writes a 2-D real tensor as a 16-bit big-endian binary PGM (P5, maxval
/// 65535), mapping [min, max] linearly onto [0, 65535]. The window goes to the
/// sidecar. A constant image becomes mid gray.
void export_pgm16(const Tensor& image, const std::filesystem::path& path);
/// Inverse of export_pgm16 through the sidecar window.
Tensor import_pgm16(const std::filesystem::path& path);

/// Raw float32 little-endian row-major dump with a sidecar
/// {"shape", "dtype": "float32", "order": "row-major", "endianness": "little"}.
void export_raw(const Tensor& t, const std::filesystem::path& path);
Tensor import_raw(const std::filesystem::path& path);

void export_image(const Tensor& t, const std::filesystem::path& path, ImageFormat format);
Tensor import_image(const std::filesystem::path& path, ImageFormat format);

/// Pretty-printed JSON with a trailing newline.
void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);

}  // namespace kol
