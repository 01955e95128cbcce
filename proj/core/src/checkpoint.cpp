#include "beambind/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "beambind/errors.hpp"

namespace bb {
namespace {

constexpr char kMagic[4] = {'B', 'B', 'C', 'P'};
constexpr std::uint32_t kVersion = 1;

struct Writer {
  std::vector<char> buf;

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, sizeof(v));
    u64(v);
  }
  void f64s(const std::vector<double>& xs) {
    u64(xs.size());
    for (double x : xs) f64(x);
  }
};

struct Reader {
  const std::vector<char>& buf;
  std::size_t pos = 0;

  void need(std::size_t n) {
    if (pos + n > buf.size()) throw DataError("truncated checkpoint");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[pos++])) << (8 * i);
    }
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf[pos++])) << (8 * i);
    }
    return v;
  }
  double f64() {
    const std::uint64_t v = u64();
    double d;
    std::memcpy(&d, &v, sizeof(d));
    return d;
  }
  std::vector<double> f64s() {
    const std::uint64_t n = u64();
    if (n > (buf.size() - pos) / 8) throw DataError("truncated checkpoint");
    std::vector<double> xs(n);
    for (auto& x : xs) x = f64();
    return xs;
  }
};

void write_linear(Writer& w, const Linear& l) {
  w.u64(l.w.rows);
  w.u64(l.w.cols);
  w.f64s(l.w.v);
  w.f64s(l.b);
}

Linear read_linear(Reader& r) {
  Linear l;
  const std::uint64_t rows = r.u64();
  const std::uint64_t cols = r.u64();
  l.w.rows = rows;
  l.w.cols = cols;
  l.w.v = r.f64s();
  l.b = r.f64s();
  if (l.w.v.size() != rows * cols || l.b.size() != rows) {
    throw DataError("checkpoint layer shape mismatch");
  }
  return l;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  Writer w;
  w.buf.insert(w.buf.end(), kMagic, kMagic + 4);
  w.u32(kVersion);

  const NetConfig& c = ckpt.params.config;
  w.u32(static_cast<std::uint32_t>(c.hidden));
  w.u32(static_cast<std::uint32_t>(c.feature_dim));
  w.u32(static_cast<std::uint32_t>(c.g_hidden));
  w.u32(static_cast<std::uint32_t>(c.proj_dim));
  w.u32(static_cast<std::uint32_t>(c.n_classes));
  w.u32(static_cast<std::uint32_t>(c.n_beams));
  w.f64(c.coord_scale);

  w.u32(static_cast<std::uint32_t>(ckpt.params.backbone.size()));
  for (const auto& l : ckpt.params.backbone) write_linear(w, l);
  w.u32(static_cast<std::uint32_t>(ckpt.params.projector.size()));
  for (const auto& l : ckpt.params.projector) write_linear(w, l);
  write_linear(w, ckpt.params.classifier);

  w.f64(ckpt.bank.momentum);
  w.u32(static_cast<std::uint32_t>(ckpt.bank.dim));
  w.u32(static_cast<std::uint32_t>(ckpt.bank.entries.size()));
  for (const auto& [cls, entry] : ckpt.bank.entries) {
    w.u32(cls);
    w.u32(entry.seen ? 1 : 0);
    w.f64s(entry.value);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path.string());
  out.write(w.buf.data(), static_cast<std::streamsize>(w.buf.size()));
  if (!out) throw DataError("checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  const std::streamsize size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<char> buf(static_cast<std::size_t>(size));
  if (size > 0 && !in.read(buf.data(), size)) {
    throw DataError("failed to read checkpoint: " + path.string());
  }

  Reader r{buf};
  r.need(4);
  if (std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw DataError("not a beambind checkpoint: " + path.string());
  }
  r.pos = 4;
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }

  Checkpoint ckpt;
  NetConfig& c = ckpt.params.config;
  c.hidden = static_cast<int>(r.u32());
  c.feature_dim = static_cast<int>(r.u32());
  c.g_hidden = static_cast<int>(r.u32());
  c.proj_dim = static_cast<int>(r.u32());
  c.n_classes = static_cast<int>(r.u32());
  c.n_beams = static_cast<int>(r.u32());
  c.coord_scale = r.f64();

  const std::uint32_t n_backbone = r.u32();
  for (std::uint32_t i = 0; i < n_backbone; ++i) ckpt.params.backbone.push_back(read_linear(r));
  const std::uint32_t n_proj = r.u32();
  for (std::uint32_t i = 0; i < n_proj; ++i) ckpt.params.projector.push_back(read_linear(r));
  ckpt.params.classifier = read_linear(r);

  ckpt.bank.momentum = r.f64();
  ckpt.bank.dim = static_cast<int>(r.u32());
  const std::uint32_t n_entries = r.u32();
  for (std::uint32_t i = 0; i < n_entries; ++i) {
    const std::uint32_t cls = r.u32();
    PrototypeBank::Entry entry;
    entry.seen = r.u32() != 0;
    entry.value = r.f64s();
    if (static_cast<int>(entry.value.size()) != ckpt.bank.dim) {
      throw DataError("checkpoint prototype dim mismatch");
    }
    ckpt.bank.entries[cls] = std::move(entry);
  }
  return ckpt;
}

}  // namespace bb
