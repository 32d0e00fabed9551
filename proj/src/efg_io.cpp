#include "efg/efg_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace efg {
namespace {

static_assert(std::endian::native == std::endian::little, "byte swapping not implemented");

constexpr std::array<char, 4> kGridMagic{'E', 'F', 'G', 'R'};
constexpr std::array<char, 4> kStackMagic{'E', 'F', 'G', 'S'};
constexpr std::uint8_t kFixedScaleBit = 0x80;

template <class T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in, const char* what) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw InputError(std::string("truncated file while reading ") + what);
  }
  return value;
}

void expect_magic(std::istream& in, const std::array<char, 4>& magic) {
  std::array<char, 4> got{};
  if (!in.read(got.data(), 4)) throw InputError("truncated file while reading magic");
  if (got != magic) throw InputError("bad magic: not a " + std::string(magic.data(), 4) + " file");
}

}  // namespace

void write_efg(std::ostream& out, const ParamGrid& grid) {
  out.write(kGridMagic.data(), 4);
  put<std::uint32_t>(out, kEfgVersion);
  std::uint8_t variant = static_cast<std::uint8_t>(grid.variant());
  if (!grid.config().learnable_scale) variant |= kFixedScaleBit;
  put<std::uint8_t>(out, variant);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(grid.degree()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.resolution()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.channels()));
  std::vector<float> payload(grid.data().begin(), grid.data().end());
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (!out) throw InputError("failed to write parameter grid");
}

ParamGrid read_efg(std::istream& in) {
  expect_magic(in, kGridMagic);
  const auto version = get<std::uint32_t>(in, "version");
  if (version != kEfgVersion) {
    throw InputError("unsupported .efg version " + std::to_string(version));
  }
  const auto variant_byte = get<std::uint8_t>(in, "variant");
  const auto degree_byte = get<std::uint8_t>(in, "degree");
  const auto resolution = get<std::uint32_t>(in, "resolution");
  const auto channels = get<std::uint32_t>(in, "channels");

  GridConfig config;
  config.variant = static_cast<Variant>(variant_byte & ~kFixedScaleBit);
  config.degree = static_cast<Degree>(degree_byte);
  config.resolution = static_cast<int>(resolution);
  config.learnable_scale = (variant_byte & kFixedScaleBit) == 0;
  if (resolution == 0 || resolution > 1024) throw InputError("bad resolution in header");
  try {
    validate(config);
  } catch (const ConfigError& e) {
    throw InputError(std::string("bad header: ") + e.what());
  }
  ParamGrid grid(config);
  if (static_cast<int>(channels) != grid.channels()) {
    throw InputError("header channel count " + std::to_string(channels) + " does not match layout (" +
                     std::to_string(grid.channels()) + ")");
  }
  std::vector<float> payload(grid.data().size());
  const auto bytes = static_cast<std::streamsize>(payload.size() * sizeof(float));
  if (!in.read(reinterpret_cast<char*>(payload.data()), bytes) || in.gcount() != bytes) {
    throw InputError("truncated .efg payload");
  }
  std::copy(payload.begin(), payload.end(), grid.data().begin());
  return grid;
}

void save_efg(const std::filesystem::path& path, const ParamGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  write_efg(out, grid);
}

ParamGrid load_efg(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  ParamGrid grid = read_efg(in);
  if (in.peek() != std::char_traits<char>::eof()) {
    throw InputError(path.string() + ": trailing bytes after payload");
  }
  return grid;
}

void save_stack(const std::filesystem::path& path, const std::vector<ParamGrid>& bands) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  out.write(kStackMagic.data(), 4);
  put<std::uint32_t>(out, kEfgVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(bands.size()));
  for (const ParamGrid& band : bands) write_efg(out, band);
}

std::vector<ParamGrid> load_stack(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  expect_magic(in, kStackMagic);
  const auto version = get<std::uint32_t>(in, "version");
  if (version != kEfgVersion) throw InputError("unsupported stack version");
  const auto count = get<std::uint32_t>(in, "band count");
  if (count == 0 || count > 4096) throw InputError("bad band count in stack header");
  std::vector<ParamGrid> bands;
  for (std::uint32_t b = 0; b < count; ++b) bands.push_back(read_efg(in));
  return bands;
}

}  // namespace efg
