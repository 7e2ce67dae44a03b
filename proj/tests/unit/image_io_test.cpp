#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "kol/errors.hpp"
#include "kol/image_io.hpp"
#include "oracles.hpp"

using namespace kol;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("kol_io_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("a constant image exports as uniform mid gray") {
  TempDir dir("const");
  export_pgm16(Tensor({3, 5}, 7.25), dir.path / "c.pgm");
  const std::string b = bytes(dir.path / "c.pgm");
  const std::string header = "P5\n5 3\n65535\n";
  REQUIRE(b.rfind(header, 0) == 0);
  REQUIRE(b.size() == header.size() + 30);
  for (std::size_t i = header.size(); i < b.size(); i += 2) {
    const unsigned v = (static_cast<unsigned char>(b[i]) << 8) | static_cast<unsigned char>(b[i + 1]);
    CHECK(v == 32768);
  }
  CHECK(fs::exists(sidecar_path(dir.path / "c.pgm")));
}

TEST_CASE("raw float32 round trip is exact for float-representable data") {
  TempDir dir("raw");
  Tensor t = oracle::random_tensor({4, 6}, 3);
  for (double& v : t.values()) v = static_cast<float>(v);
  export_raw(t, dir.path / "t.raw");
  CHECK(fs::file_size(dir.path / "t.raw") == 24 * sizeof(float));
  const Tensor back = import_raw(dir.path / "t.raw");
  CHECK(back.shape() == t.shape());
  CHECK(back.identical(t));
  const auto meta = read_json(sidecar_path(dir.path / "t.raw"));
  CHECK(meta.at("dtype") == "float32");
  CHECK(meta.at("endianness") == "little");
}

TEST_CASE("PGM export, import and re-export is idempotent") {
  TempDir dir("pgm");
  const Tensor img = oracle::random_tensor({256, 256}, 4, -3.0, 5.0);
  export_pgm16(img, dir.path / "a.pgm");
  const Tensor back = import_pgm16(dir.path / "a.pgm");
  CHECK(back.shape() == img.shape());
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(std::fabs(back[i] - img[i]) <= 8.0 / 65535.0);
  export_pgm16(back, dir.path / "b.pgm");
  CHECK(bytes(dir.path / "a.pgm") == bytes(dir.path / "b.pgm"));
}

TEST_CASE("format names and bad inputs") {
  TempDir dir("bad");
  CHECK(image_format_from_string(to_string(ImageFormat::raw_f32)) == ImageFormat::raw_f32);
  CHECK_THROWS_AS(image_format_from_string("tiff"), ArgumentError);
  CHECK_THROWS_AS(export_pgm16(Tensor({2, 2, 2}), dir.path / "x.pgm"), ArgumentError);
  CHECK_THROWS_AS(import_raw(dir.path / "missing.raw"), IoError);
}
