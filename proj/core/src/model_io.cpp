#include "tnad/model_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace tnad {
namespace {

constexpr std::array<char, 4> kMagic{'T', 'N', 'A', 'D'};

void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b.data(), 4);
}

void put_f64(std::ostream& os, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  os.write(b.data(), 8);
}

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  std::uint32_t u32(const char* what) {
    std::array<unsigned char, 4> b{};
    read(b.data(), 4, what);
    return std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 | std::uint32_t{b[2]} << 16 |
           std::uint32_t{b[3]} << 24;
  }

  double f64(const char* what) {
    std::array<unsigned char, 8> b{};
    read(b.data(), 8, what);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t{b[i]} << (8 * i);
    return std::bit_cast<double>(bits);
  }

  void read(unsigned char* dst, std::size_t n, const char* what) {
    is_.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n)
      throw FormatError(std::string("model file truncated while reading ") + what + " at byte " +
                        std::to_string(offset_));
    offset_ += n;
  }

  std::size_t offset() const { return offset_; }

 private:
  std::istream& is_;
  std::size_t offset_ = 0;
};

}  // namespace

void write_model(std::ostream& os, const MpoModel& model, const EmbeddingSpec& embedding) {
  const auto& s = model.shape();
  os.write(kMagic.data(), kMagic.size());
  put_u32(os, kModelFormatVersion);
  put_u32(os, static_cast<std::uint32_t>(s.sites));
  put_u32(os, static_cast<std::uint32_t>(s.physical_dim));
  put_u32(os, static_cast<std::uint32_t>(s.bond_dim));
  put_u32(os, static_cast<std::uint32_t>(s.spacing));
  put_u32(os, embedding.kind == EmbeddingKind::trigonometric ? 0u : 1u);
  put_u32(os, static_cast<std::uint32_t>(embedding.physical_dim));
  for (std::size_t i = 0; i < s.sites; ++i) {
    const DenseTensor& core = model.core(i);
    put_u32(os, static_cast<std::uint32_t>(i));
    for (std::size_t a = 0; a < 4; ++a)
      put_u32(os, a < core.rank() ? static_cast<std::uint32_t>(core.dim(a)) : 0u);
    for (double v : core.data()) put_f64(os, v);
  }
  if (!os) throw std::runtime_error("failed writing model");
}

SavedModel read_model(std::istream& is) {
  Reader r(is);
  std::array<unsigned char, 4> magic{};
  r.read(magic.data(), 4, "magic");
  if (std::memcmp(magic.data(), kMagic.data(), 4) != 0) throw FormatError("not a tnad model file (bad magic at byte 0)");
  const std::uint32_t version = r.u32("format version");
  if (version != kModelFormatVersion)
    throw FormatError("unsupported model format version " + std::to_string(version) + " (expected " +
                      std::to_string(kModelFormatVersion) + ")");
  MpoShape shape;
  shape.sites = r.u32("N");
  shape.physical_dim = r.u32("p");
  shape.bond_dim = r.u32("b");
  shape.spacing = r.u32("S");
  EmbeddingSpec embedding;
  const std::uint32_t kind = r.u32("embedding kind");
  if (kind > 1) throw FormatError("unknown embedding kind " + std::to_string(kind));
  embedding.kind = kind == 0 ? EmbeddingKind::trigonometric : EmbeddingKind::fourier;
  embedding.physical_dim = r.u32("embedding p");
  try {
    shape.validate();
    embedding.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid model header: ") + e.what());
  }
  if (embedding.physical_dim != shape.physical_dim)
    throw FormatError("embedding dimension does not match model physical dimension");
  if (shape.sites > (1u << 20) || shape.bond_dim > 4096 || shape.physical_dim > 4096)
    throw FormatError("model header dimensions out of range");

  std::vector<DenseTensor> cores;
  cores.reserve(shape.sites);
  for (std::size_t i = 0; i < shape.sites; ++i) {
    const std::uint32_t site = r.u32("site index");
    if (site != i) throw FormatError("core record " + std::to_string(i) + " carries site index " + std::to_string(site));
    Shape dims;
    for (int a = 0; a < 4; ++a) {
      const std::uint32_t d = r.u32("axis size");
      if (d != 0) dims.push_back(d);
    }
    if (dims != shape.core_shape(i))
      throw FormatError("core " + std::to_string(i) + " has shape " + shape_string(dims) + ", expected " +
                        shape_string(shape.core_shape(i)));
    std::vector<double> data(shape_size(dims));
    for (double& v : data) v = r.f64("core entries");
    cores.emplace_back(std::move(dims), std::move(data));
  }
  try {
    return SavedModel{MpoModel(shape, std::move(cores)), embedding};
  } catch (const std::exception& e) {
    throw FormatError(std::string("invalid model: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const MpoModel& model, const EmbeddingSpec& embedding) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_model(os, model, embedding);
}

SavedModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open model file " + path.string());
  return read_model(is);
}

}  // namespace tnad
