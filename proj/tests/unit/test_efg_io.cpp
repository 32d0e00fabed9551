#include "efg/efg_io.hpp"

#include "../support/random_grid.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace efg;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("efg_io_" + name);
}

ParamGrid float_exact_grid(const GridConfig& c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParamGrid g = efg::testing::random_grid(c, rng);
  for (double& v : g.data()) v = static_cast<float>(v);
  return g;
}

}  // namespace

TEST(EfgIo, RoundTripAllVariants) {
  const GridConfig configs[] = {{Variant::Trilinear, Degree::Constant, 3, true},
                                {Variant::Nrbf, Degree::Constant, 2, false},
                                {Variant::FuncInterp, Degree::Cubic, 2, true},
                                {Variant::FuncInterp, Degree::Cube, 2, true},
                                {Variant::OffsetOnly, Degree::Linear, 3, true},
                                {Variant::Combined, Degree::Quadratic, 2, false}};
  std::uint64_t seed = 1;
  for (const auto& c : configs) {
    const ParamGrid g = float_exact_grid(c, seed++);
    std::stringstream s;
    write_efg(s, g);
    EXPECT_EQ(s.str().size(), 4 + 4 + 1 + 1 + 4 + 4 + g.data().size() * 4);
    const ParamGrid back = read_efg(s);
    EXPECT_TRUE(back == g) << to_string(c.variant);
    EXPECT_EQ(back.config().learnable_scale, c.learnable_scale);
  }
}

TEST(EfgIo, HeaderBytes) {
  ParamGrid g({Variant::Combined, Degree::Linear, 2, false});
  std::stringstream s;
  write_efg(s, g);
  const std::string bytes = s.str();
  EXPECT_EQ(bytes.substr(0, 4), "EFGR");
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 0x80u | 4u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[9]), 1u);
}

TEST(EfgIo, RejectsCorruptInput) {
  const ParamGrid g = float_exact_grid({Variant::FuncInterp, Degree::Linear, 2, true}, 7);
  std::stringstream s;
  write_efg(s, g);
  const std::string good = s.str();

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  std::stringstream a(bad_magic);
  EXPECT_THROW(read_efg(a), InputError);

  std::string bad_version = good;
  bad_version[4] = 9;
  std::stringstream b(bad_version);
  EXPECT_THROW(read_efg(b), InputError);

  std::stringstream c(good.substr(0, good.size() - 3));
  EXPECT_THROW(read_efg(c), InputError);

  std::string bad_channels = good;
  bad_channels[14] = 7;
  std::stringstream d(bad_channels);
  EXPECT_THROW(read_efg(d), InputError);

  std::string bad_degree = good;
  bad_degree[9] = 9;
  std::stringstream e(bad_degree);
  EXPECT_THROW(read_efg(e), InputError);
}

TEST(EfgIo, FileRoundTripAndTrailingBytes) {
  const ParamGrid g = float_exact_grid({Variant::OffsetOnly, Degree::Constant, 3, true}, 3);
  const auto path = temp_path("grid.efg");
  save_efg(path, g);
  EXPECT_TRUE(load_efg(path) == g);
  {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out << "junk";
  }
  EXPECT_THROW(load_efg(path), InputError);
  EXPECT_THROW(load_efg(temp_path("missing.efg")), InputError);
  std::filesystem::remove(path);
}

TEST(EfgIo, StackRoundTrip) {
  std::vector<ParamGrid> bands;
  for (std::uint64_t b = 0; b < 3; ++b) bands.push_back(float_exact_grid({Variant::FuncInterp, Degree::Linear, 2, true}, b));
  const auto path = temp_path("bands.stack");
  save_stack(path, bands);
  const auto back = load_stack(path);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t b = 0; b < 3; ++b) EXPECT_TRUE(back[b] == bands[b]);
  std::filesystem::remove(path);
}
