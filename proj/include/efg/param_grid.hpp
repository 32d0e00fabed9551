#pragma once

#include "efg/poly.hpp"
#include "efg/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace efg {

enum class Variant : std::uint8_t {
  Trilinear = 0,   // scalar per lattice node, 8-corner blend
  Nrbf = 1,        // softmax-normalized Gaussian RBF with scalar values
  FuncInterp = 2,  // softmax-normalized RBF interpolating polynomials
  OffsetOnly = 3,  // a single bank of keys displaced from the lattice
  Combined = 4,    // fixed lattice bank plus displaced offset bank
};

Variant parse_variant(std::string_view text);
std::string to_string(Variant v);

/// Shape of a parameter grid; everything else is derived from this.
struct GridConfig {
  Variant variant = Variant::Combined;
  Degree degree = Degree::Linear;
  int resolution = 8;
  /// When false the scale is fixed at the initial value and not stored.
  bool learnable_scale = true;
};

/// Channel positions of one bank of keys inside a key's channel block.
/// A negative index means the field is not stored.
struct BankLayout {
  int offset = -1;  // 3 channels: displacement from the lattice point
  int coeff = 0;    // first polynomial coefficient
  int ncoeff = 0;
  int log_scale = -1;
};

enum class ChannelRole : std::uint8_t { Coefficient, LogScale, Offset };

/// Per-key channel layout. Channel order (key-major, channel-minor):
///   Trilinear   [value]
///   Nrbf        [value, log_scale]
///   FuncInterp  [phi..., log_scale]
///   OffsetOnly  [offset xyz, phi..., log_scale]
///   Combined    [phi..., log_scale, offset xyz, phi'..., log_scale']
/// `log_scale` is omitted when the scale is not learnable.
class ChannelLayout {
 public:
  explicit ChannelLayout(const GridConfig& config);

  int channels() const { return channels_; }
  std::span<const BankLayout> banks() const { return {banks_.data(), banks_.size()}; }
  ChannelRole role(int channel) const { return roles_.at(static_cast<std::size_t>(channel)); }

 private:
  int channels_ = 0;
  std::vector<BankLayout> banks_;
  std::vector<ChannelRole> roles_;
};

/// Channels per key (the "Ch" column of the ablation table).
int channel_count(const GridConfig& config);

/// R^3 * C. Throws ConfigError for invalid combinations.
std::int64_t param_count(Variant variant, Degree degree, int resolution, bool learnable_scale = true);

/// Validates a configuration, throwing ConfigError when it is unusable.
void validate(const GridConfig& config);

/// Scale the grid is initialized with; 1/exp(7) ~ 0.009 is the initial radius.
inline constexpr double kInitialLogScale = 7.0;

/// Dense R^3 x C parameter grid over the normalized domain [-1,1]^3.
///
/// Lattice keys are implicit: key index i = ix + R*(iy + R*iz) sits at
/// -1 + 2*ix/(R-1) along x (the domain center when R == 1).
class ParamGrid {
 public:
  explicit ParamGrid(const GridConfig& config);

  const GridConfig& config() const { return config_; }
  const ChannelLayout& layout() const { return layout_; }
  Variant variant() const { return config_.variant; }
  Degree degree() const { return config_.degree; }
  int resolution() const { return config_.resolution; }
  int channels() const { return layout_.channels(); }
  std::int64_t key_count() const { return key_count_; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  double& at(std::int64_t key, int channel) {
    return data_[static_cast<std::size_t>(key * layout_.channels() + channel)];
  }
  double at(std::int64_t key, int channel) const {
    return data_[static_cast<std::size_t>(key * layout_.channels() + channel)];
  }

  Vec3 lattice_point(std::int64_t key) const;
  /// Key position of `bank`: the lattice point, plus the offset if the bank has one.
  Vec3 key_position(int bank, std::int64_t key) const;
  double scale(int bank, std::int64_t key) const;
  PolyValue value(int bank, std::int64_t key) const;

  friend bool operator==(const ParamGrid& a, const ParamGrid& b);

 private:
  GridConfig config_;
  ChannelLayout layout_;
  std::int64_t key_count_ = 0;
  std::vector<double> data_;
};

double lattice_coordinate(int index, int resolution);

struct InitSpec {
  std::uint64_t seed = 0;
  /// Standard deviation of the constant term; higher-order terms start at zero.
  double constant_stddev = 0.1;
  double log_scale = kInitialLogScale;
};

/// Lattice keys, log-scales at `spec.log_scale`, constant terms drawn from
/// N(0, stddev^2), zero offsets.
ParamGrid init_grid(const GridConfig& config, const InitSpec& spec = {});

}  // namespace efg
