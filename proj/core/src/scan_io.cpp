#include "beambind/scan_io.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "beambind/errors.hpp"

namespace bb {
namespace {

std::vector<char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw DataError("cannot open file: " + path.string());
  const std::streamsize size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<char> buf(static_cast<std::size_t>(size));
  if (size > 0 && !in.read(buf.data(), size)) {
    throw DataError("failed to read file: " + path.string());
  }
  return buf;
}

float load_f32le(const char* p) {
  std::uint32_t u = static_cast<std::uint8_t>(p[0]) | static_cast<std::uint8_t>(p[1]) << 8 |
                    static_cast<std::uint8_t>(p[2]) << 16 |
                    static_cast<std::uint32_t>(static_cast<std::uint8_t>(p[3])) << 24;
  float f;
  std::memcpy(&f, &u, sizeof(f));
  return f;
}

std::uint32_t load_u32le(const char* p) {
  return static_cast<std::uint8_t>(p[0]) | static_cast<std::uint8_t>(p[1]) << 8 |
         static_cast<std::uint8_t>(p[2]) << 16 |
         static_cast<std::uint32_t>(static_cast<std::uint8_t>(p[3])) << 24;
}

void store_f32le(float f, char* p) {
  std::uint32_t u;
  std::memcpy(&u, &f, sizeof(u));
  p[0] = static_cast<char>(u & 0xFF);
  p[1] = static_cast<char>((u >> 8) & 0xFF);
  p[2] = static_cast<char>((u >> 16) & 0xFF);
  p[3] = static_cast<char>((u >> 24) & 0xFF);
}

void store_u32le(std::uint32_t u, char* p) {
  p[0] = static_cast<char>(u & 0xFF);
  p[1] = static_cast<char>((u >> 8) & 0xFF);
  p[2] = static_cast<char>((u >> 16) & 0xFF);
  p[3] = static_cast<char>((u >> 24) & 0xFF);
}

}  // namespace

PointCloud read_scan(const std::filesystem::path& scan_path,
                     const std::optional<std::filesystem::path>& label_path) {
  const std::vector<char> bytes = read_all(scan_path);
  if (bytes.size() % 16 != 0) {
    throw DataError("truncated scan file (size " + std::to_string(bytes.size()) +
                    " is not a multiple of 16): " + scan_path.string());
  }
  const std::size_t n = bytes.size() / 16;

  std::vector<char> label_bytes;
  if (label_path) {
    label_bytes = read_all(*label_path);
    if (label_bytes.size() % 4 != 0) {
      throw DataError("truncated label file: " + label_path->string());
    }
    if (label_bytes.size() / 4 != n) {
      throw DataError("scan has " + std::to_string(n) + " points but label file has " +
                      std::to_string(label_bytes.size() / 4) + ": " + label_path->string());
    }
  }

  PointCloud cloud;
  cloud.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const char* rec = bytes.data() + i * 16;
    std::array<float, 3> p{load_f32le(rec), load_f32le(rec + 4), load_f32le(rec + 8)};
    const float inten = load_f32le(rec + 12);
    std::uint32_t lbl = kUnlabeledId;
    if (label_path) lbl = load_u32le(label_bytes.data() + i * 4) & 0xFFFFu;
    cloud.push_point(p, inten, lbl, kNoBeam, static_cast<std::uint32_t>(i));
  }
  return cloud;
}

void write_scan(const PointCloud& cloud, const std::filesystem::path& scan_path,
                const std::optional<std::filesystem::path>& label_path) {
  check_consistent(cloud);
  const std::size_t n = cloud.size();

  std::vector<char> bytes(n * 16);
  for (std::size_t i = 0; i < n; ++i) {
    char* rec = bytes.data() + i * 16;
    store_f32le(cloud.xyz[i][0], rec);
    store_f32le(cloud.xyz[i][1], rec + 4);
    store_f32le(cloud.xyz[i][2], rec + 8);
    store_f32le(cloud.intensity[i], rec + 12);
  }
  std::ofstream out(scan_path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + scan_path.string());
  if (!bytes.empty()) out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + scan_path.string());

  if (label_path) {
    std::vector<char> lbl(n * 4);
    for (std::size_t i = 0; i < n; ++i) {
      store_u32le(cloud.label[i] & 0xFFFFu, lbl.data() + i * 4);
    }
    std::ofstream lout(*label_path, std::ios::binary | std::ios::trunc);
    if (!lout) throw DataError("cannot open for writing: " + label_path->string());
    if (!lbl.empty()) lout.write(lbl.data(), static_cast<std::streamsize>(lbl.size()));
    if (!lout) throw DataError("write failed: " + label_path->string());
  }
}

}  // namespace bb
