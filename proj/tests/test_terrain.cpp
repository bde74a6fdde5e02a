#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mqe/terrain.hpp"

using namespace mqe;

namespace {

std::vector<BlockSpec> gate_track() {
  return {BlockSpec::flat(4, 6), BlockSpec::wall_with_gate(0.8, 0, 1, 6), BlockSpec::flat(4, 6)};
}

}  // namespace

TEST(Terrain, GateAnchorFromAffinePlacement) {
  const auto blocks = gate_track();
  const Arena a = compose_track(blocks, {0, 0});
  EXPECT_EQ(a.anchor("gate_center"), (Vec2{4.5, 0.0}));
  EXPECT_EQ(a.lo, (Vec2{0.0, -3.0}));
  EXPECT_EQ(a.hi, (Vec2{9.0, 3.0}));
}

TEST(Terrain, EmptyBlockListIsAnError) {
  EXPECT_THROW(compose_track({}, {0, 0}), ConfigError);
  EXPECT_THROW(parse_block_list("  "), ConfigError);
}

TEST(Terrain, TranslationShiftsEveryAnchor) {
  const auto blocks = gate_track();
  const Arena a = compose_track(blocks, {0, 0});
  const Arena b = compose_track(blocks, {0, 20});
  ASSERT_EQ(a.anchors.size(), b.anchors.size());
  for (const auto& [label, p] : a.anchors) {
    EXPECT_EQ(b.anchor(label), p + Vec2(0, 20)) << label;
  }
  ASSERT_EQ(a.walls.size(), b.walls.size());
  for (std::size_t i = 0; i < a.walls.size(); ++i) {
    EXPECT_EQ(b.walls[i].a, a.walls[i].a + Vec2(0, 20));
    EXPECT_EQ(b.walls[i].b, a.walls[i].b + Vec2(0, 20));
  }
}

TEST(Terrain, UnknownAnchorThrows) {
  const auto blocks = gate_track();
  EXPECT_THROW(compose_track(blocks, {0, 0}).anchor("nowhere"), ConfigError);
}

TEST(Terrain, FlatAndPlatformHeights) {
  const std::vector<BlockSpec> blocks = {BlockSpec::flat(4, 6), BlockSpec::platform(1.0, 2, 6)};
  const Arena a = compose_track(blocks, {0, 0});
  EXPECT_EQ(height_at(a, 1.3, -2.0), 0.0);
  EXPECT_EQ(height_at(a, 5.0, 0.5), 1.0);
}

TEST(Terrain, SeesawPlankHeight) {
  const std::vector<BlockSpec> blocks = {BlockSpec::seesaw(3.0, 1.0, 0.5, 6)};
  const Arena a = compose_track(blocks, {0, 0});
  ASSERT_TRUE(a.seesaw.has_value());
  const double x = a.seesaw->pivot_x + 1.0;
  EXPECT_NEAR(height_at(a, x, 0.0, 0.1), 0.5 + std::sin(0.1), 1e-15);
  EXPECT_NEAR(height_at(a, x, 0.0, 0.1), 0.5998, 1e-4);
  EXPECT_EQ(height_at(a, x, 2.0, 0.1), 0.0);
}

TEST(Terrain, OutsideEveryBlockIsVoid) {
  const auto blocks = gate_track();
  const Arena a = compose_track(blocks, {0, 0});
  EXPECT_EQ(height_at(a, -1.0, 0.0), kVoidHeight);
  EXPECT_EQ(height_at(a, 4.0, 3.5), kVoidHeight);
  EXPECT_TRUE(std::isinf(height_at(a, 100.0, 0.0)));
}

TEST(Terrain, SumoRingDropsAtTheEdge) {
  const std::vector<BlockSpec> blocks = {BlockSpec::sumo_ring(1.5, 0.6, 5.0)};
  const Arena a = compose_track(blocks, {0, 0});
  const Vec2 c = a.anchor("ring_center");
  EXPECT_EQ(height_at(a, c.x + 1.4, c.y), 0.6);
  EXPECT_EQ(height_at(a, c.x + 1.6, c.y), 0.0);
}

TEST(Terrain, GateWiderThanWallRejected) {
  const std::vector<BlockSpec> blocks = {BlockSpec::wall_with_gate(7.0, 0, 1, 6)};
  EXPECT_THROW(compose_track(blocks, {0, 0}), ConfigError);
}

TEST(Terrain, OverlappingExplicitStartRejected) {
  std::vector<BlockSpec> blocks = gate_track();
  blocks[1].x_start = 2.0;
  EXPECT_THROW(compose_track(blocks, {0, 0}), ConfigError);
}

TEST(Terrain, BlockListRoundTrip) {
  const std::string text =
      "Flat(4x6); WallWithGate(0.8, 0.5, 1x6); Platform(0.5, 2x6); Seesaw(3, 1, 0.25, 6); "
      "Bridge(0.45, 4, 0.6, 6); WalledArena(6x4); FootballPitch(8, 5, 1.2); SumoRing(1.5, 0.6, 5)";
  const auto blocks = parse_block_list(text);
  ASSERT_EQ(blocks.size(), 8u);
  EXPECT_EQ(blocks[1].gate_offset, 0.5);
  EXPECT_EQ(parse_block_list(format_block_list(blocks)), blocks);
}

TEST(Terrain, BlockListErrorsNameTheProblem) {
  try {
    parse_block_list("Flat(4x6); Volcano(3)");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("Volcano"), std::string::npos);
  }
  EXPECT_THROW(parse_block_list("Flat(4x)"), ConfigError);
  EXPECT_THROW(parse_block_list("WallWithGate(0.8, 1x6)"), ConfigError);
}

TEST(Spawn, SameSeedSamePoses) {
  const std::vector<SpawnRect> rects = {{0, 3, -2, 2, -1, 1}, {0, 3, -2, 2, -1, 1}};
  const std::vector<double> radii = {0.35, 0.35};
  Rng a(42), b(42);
  EXPECT_EQ(spawn_layout(rects, radii, 0.175, a), spawn_layout(rects, radii, 0.175, b));
}

TEST(Spawn, DegenerateRectangleIsAnError) {
  const std::vector<SpawnRect> rects = {{1, 1, 0, 0, 0, 0}, {1, 1, 0, 0, 0, 0}};
  const std::vector<double> radii = {0.35, 0.35};
  Rng rng(1);
  EXPECT_THROW(spawn_layout(rects, radii, 0.175, rng), ConfigError);
}

TEST(Spawn, SeparationHoldsForMixedRadii) {
  std::vector<SpawnRect> rects(12, SpawnRect{0, 3, -2, 2, 0, 0});
  std::vector<double> radii;
  for (int i = 0; i < 12; ++i) radii.push_back(i < 2 ? 0.35 : 0.2);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const auto poses = spawn_layout(rects, radii, 0.175, rng);
    for (std::size_t i = 0; i < poses.size(); ++i) {
      EXPECT_GE(poses[i].pos.x, 0.0);
      EXPECT_LE(poses[i].pos.x, 3.0);
      for (std::size_t j = 0; j < i; ++j)
        EXPECT_GE(norm(poses[i].pos - poses[j].pos), radii[i] + radii[j] + 0.175 - 1e-12);
    }
  }
}
