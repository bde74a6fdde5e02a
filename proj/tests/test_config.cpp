#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <set>
#include <string>

#include "mqe/config.hpp"

using namespace mqe;

namespace {

EnvConfig load(const std::string& text) {
  EnvConfig cfg;
  for (const auto& [k, v] : parse_config_text(text).entries) apply_override(cfg, k, v);
  return cfg;
}

}  // namespace

TEST(Config, DefaultsDumpAndReloadIdentically) {
  const EnvConfig defaults;
  const std::string text = dump_config(defaults);
  EXPECT_EQ(load(text), defaults);
  EXPECT_EQ(dump_config(load(text)), text);
}

TEST(Config, ModifiedConfigRoundTrips) {
  EnvConfig cfg;
  apply_override(cfg, "physics.substeps", "6");
  apply_override(cfg, "sheep.noise_sigma", "0.1");
  apply_override(cfg, "reward.narrow_gate.gate_crossing", "7.25");
  apply_override(cfg, "blocks.narrow_gate", "Flat(3x6); WallWithGate(1.0, 0.5, 1x6); Flat(3x6)");
  apply_override(cfg, "locomotion.vx_max", "0.1");
  EXPECT_EQ(cfg.physics.substeps, 6);
  EXPECT_EQ(cfg.reward_scales.at("narrow_gate.gate_crossing"), 7.25);
  EXPECT_EQ(load(dump_config(cfg)), cfg);
}

TEST(Config, DoublesRoundTripExactly) {
  EnvConfig cfg;
  apply_override(cfg, "task.spacing_clip", "0.1");
  cfg.task.spacing_clip = 1.0 / 3.0;
  EXPECT_EQ(load(dump_config(cfg)).task.spacing_clip, 1.0 / 3.0);
  EXPECT_EQ(format_double(0.1), "0.1");
}

TEST(Config, UnknownKeyRejected) {
  EnvConfig cfg;
  EXPECT_THROW(apply_override(cfg, "physics.warp_drive", "1"), ConfigError);
  EXPECT_THROW(apply_override(cfg, "reward.narrow_gate.teleport", "1"), ConfigError);
  EXPECT_THROW(apply_override(cfg, "blocks.bogus", "Flat(4x6)"), ConfigError);
}

TEST(Config, MalformedValuesRejectedAndConfigUnchanged) {
  EnvConfig cfg;
  const EnvConfig before = cfg;
  EXPECT_THROW(apply_override(cfg, "physics.gravity", "fast"), ConfigError);
  EXPECT_THROW(apply_override(cfg, "physics.gravity", "-1"), ConfigError);
  EXPECT_THROW(apply_override(cfg, "physics.substeps", "2.5"), ConfigError);
  EXPECT_THROW(apply_override(cfg, "blocks.narrow_gate", "Flat(4x6); Lava(1)"), ConfigError);
  EXPECT_EQ(cfg, before);
}

TEST(Config, GravityIsShared) {
  EnvConfig cfg;
  apply_override(cfg, "physics.gravity", "3.71");
  EXPECT_EQ(cfg.locomotion.gravity, 3.71);
}

TEST(Config, CommentsAndBlankLines) {
  const auto doc = parse_config_text("# header\n\n physics.substeps = 2  # inline\n");
  ASSERT_EQ(doc.entries.size(), 1u);
  EXPECT_EQ(doc.entries[0].first, "physics.substeps");
  EXPECT_EQ(doc.entries[0].second, "2");
  EXPECT_THROW(parse_config_text("no equals sign here"), ConfigError);
}

TEST(Config, FileLoad) {
  const std::string path = ::testing::TempDir() + "mqe_cfg_test.txt";
  {
    std::ofstream f(path);
    f << "sheep.k_repulse = 5\n";
  }
  const auto doc = load_config_file(path);
  ASSERT_EQ(doc.entries.size(), 1u);
  EXPECT_EQ(doc.entries[0].second, "5");
  std::remove(path.c_str());
  EXPECT_THROW(load_config_file(path), ConfigError);
}

TEST(Config, EveryDumpedKeyIsDocumented) {
  std::set<std::string> keys;
  for (const auto& k : config_keys()) {
    EXPECT_FALSE(k.description.empty()) << k.key;
    keys.insert(k.key);
  }
  for (const auto& [k, v] : parse_config_text(dump_config(EnvConfig{})).entries)
    EXPECT_TRUE(keys.contains(k)) << k;
}
