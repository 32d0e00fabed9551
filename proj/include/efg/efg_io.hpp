#pragma once

#include "efg/param_grid.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace efg {

/// `.efg` parameter file, little-endian:
///   "EFGR" | version u32 | variant u8 | degree u8 | R u32 | C u32 | R^3*C float32
/// Bit 7 of the variant byte marks a grid whose scales are fixed (not stored).
/// Payload is key-major, channel-minor in ChannelLayout order.
inline constexpr std::uint32_t kEfgVersion = 1;

void write_efg(std::ostream& out, const ParamGrid& grid);
ParamGrid read_efg(std::istream& in);

void save_efg(const std::filesystem::path& path, const ParamGrid& grid);
/// Throws InputError for a missing, truncated or corrupt file.
ParamGrid load_efg(const std::filesystem::path& path);

/// Stack file: "EFGS" | version u32 | band count u32 | band records (.efg each).
void save_stack(const std::filesystem::path& path, const std::vector<ParamGrid>& bands);
std::vector<ParamGrid> load_stack(const std::filesystem::path& path);

}  // namespace efg
