#include "efg/param_grid.hpp"

#include <cmath>
#include <random>
#include <string>

namespace efg {

Variant parse_variant(std::string_view text) {
  if (text == "trilinear") return Variant::Trilinear;
  if (text == "nrbf") return Variant::Nrbf;
  if (text == "func" || text == "funcinterp") return Variant::FuncInterp;
  if (text == "offset" || text == "offsetonly") return Variant::OffsetOnly;
  if (text == "combined") return Variant::Combined;
  throw ConfigError("unknown variant '" + std::string(text) + "'");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Trilinear: return "trilinear";
    case Variant::Nrbf: return "nrbf";
    case Variant::FuncInterp: return "func";
    case Variant::OffsetOnly: return "offset";
    case Variant::Combined: return "combined";
  }
  return "?";
}

void validate(const GridConfig& config) {
  if (config.resolution < 1) {
    throw ConfigError("resolution must be >= 1, got " + std::to_string(config.resolution));
  }
  if (config.resolution > 1024) {
    throw ConfigError("resolution " + std::to_string(config.resolution) + " is too large");
  }
  if (static_cast<unsigned>(config.variant) > static_cast<unsigned>(Variant::Combined)) {
    throw ConfigError("unknown variant");
  }
  if (static_cast<unsigned>(config.degree) > static_cast<unsigned>(Degree::Cube)) {
    throw ConfigError("unknown degree");
  }
  if ((config.variant == Variant::Nrbf || config.variant == Variant::Trilinear) &&
      config.degree != Degree::Constant) {
    throw ConfigError(to_string(config.variant) + " stores scalar values; degree must be 0");
  }
}

ChannelLayout::ChannelLayout(const GridConfig& config) {
  validate(config);
  const int nc = coeff_count(config.degree);
  auto add = [&](ChannelRole role, int n) {
    const int first = channels_;
    for (int k = 0; k < n; ++k) roles_.push_back(role);
    channels_ += n;
    return first;
  };
  auto add_bank = [&](bool with_offset) {
    BankLayout bank;
    if (with_offset) bank.offset = add(ChannelRole::Offset, 3);
    bank.ncoeff = nc;
    bank.coeff = add(ChannelRole::Coefficient, nc);
    if (config.learnable_scale) bank.log_scale = add(ChannelRole::LogScale, 1);
    banks_.push_back(bank);
  };

  switch (config.variant) {
    case Variant::Trilinear: {
      BankLayout bank;
      bank.ncoeff = 1;
      bank.coeff = add(ChannelRole::Coefficient, 1);
      banks_.push_back(bank);
      break;
    }
    case Variant::Nrbf:
    case Variant::FuncInterp:
      add_bank(false);
      break;
    case Variant::OffsetOnly:
      add_bank(true);
      break;
    case Variant::Combined:
      add_bank(false);
      add_bank(true);
      break;
  }
}

int channel_count(const GridConfig& config) { return ChannelLayout(config).channels(); }

std::int64_t param_count(Variant variant, Degree degree, int resolution, bool learnable_scale) {
  const GridConfig config{variant, degree, resolution, learnable_scale};
  const auto r = static_cast<std::int64_t>(resolution);
  return r * r * r * channel_count(config);
}

double lattice_coordinate(int index, int resolution) {
  if (resolution == 1) return 0.0;
  return -1.0 + 2.0 * static_cast<double>(index) / static_cast<double>(resolution - 1);
}

ParamGrid::ParamGrid(const GridConfig& config) : config_(config), layout_(config) {
  const auto r = static_cast<std::int64_t>(config.resolution);
  key_count_ = r * r * r;
  data_.assign(static_cast<std::size_t>(key_count_ * layout_.channels()), 0.0);
  for (const BankLayout& bank : layout_.banks()) {
    if (bank.log_scale < 0) continue;
    for (std::int64_t i = 0; i < key_count_; ++i) at(i, bank.log_scale) = kInitialLogScale;
  }
}

Vec3 ParamGrid::lattice_point(std::int64_t key) const {
  const int r = config_.resolution;
  const int ix = static_cast<int>(key % r);
  const int iy = static_cast<int>((key / r) % r);
  const int iz = static_cast<int>(key / (static_cast<std::int64_t>(r) * r));
  return {lattice_coordinate(ix, r), lattice_coordinate(iy, r), lattice_coordinate(iz, r)};
}

Vec3 ParamGrid::key_position(int bank, std::int64_t key) const {
  const BankLayout& b = layout_.banks()[static_cast<std::size_t>(bank)];
  Vec3 p = lattice_point(key);
  if (b.offset >= 0) {
    p += Vec3(at(key, b.offset), at(key, b.offset + 1), at(key, b.offset + 2));
  }
  return p;
}

double ParamGrid::scale(int bank, std::int64_t key) const {
  const BankLayout& b = layout_.banks()[static_cast<std::size_t>(bank)];
  return std::exp(b.log_scale >= 0 ? at(key, b.log_scale) : kInitialLogScale);
}

PolyValue ParamGrid::value(int bank, std::int64_t key) const {
  const BankLayout& b = layout_.banks()[static_cast<std::size_t>(bank)];
  PolyValue f;
  f.degree = config_.variant == Variant::Trilinear ? Degree::Constant : config_.degree;
  f.coeffs.resize(static_cast<std::size_t>(b.ncoeff));
  for (int k = 0; k < b.ncoeff; ++k) f.coeffs[static_cast<std::size_t>(k)] = at(key, b.coeff + k);
  return f;
}

bool operator==(const ParamGrid& a, const ParamGrid& b) {
  return a.config_.variant == b.config_.variant && a.config_.degree == b.config_.degree &&
         a.config_.resolution == b.config_.resolution &&
         a.config_.learnable_scale == b.config_.learnable_scale && a.data_ == b.data_;
}

ParamGrid init_grid(const GridConfig& config, const InitSpec& spec) {
  ParamGrid grid(config);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> constant(0.0, spec.constant_stddev);
  for (std::int64_t i = 0; i < grid.key_count(); ++i) {
    for (const BankLayout& bank : grid.layout().banks()) {
      grid.at(i, bank.coeff) = spec.constant_stddev > 0.0 ? constant(rng) : 0.0;
      if (bank.log_scale >= 0) grid.at(i, bank.log_scale) = spec.log_scale;
    }
  }
  return grid;
}

}  // namespace efg
