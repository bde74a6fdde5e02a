#include "mqe/terrain.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace mqe {

std::string_view to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::Flat: return "Flat";
    case BlockKind::WallWithGate: return "WallWithGate";
    case BlockKind::Platform: return "Platform";
    case BlockKind::Seesaw: return "Seesaw";
    case BlockKind::Bridge: return "Bridge";
    case BlockKind::WalledArena: return "WalledArena";
    case BlockKind::FootballPitch: return "FootballPitch";
    case BlockKind::SumoRing: return "SumoRing";
  }
  return "?";
}

BlockSpec BlockSpec::flat(double len_x, double len_y) {
  BlockSpec b;
  b.kind = BlockKind::Flat;
  b.len_x = len_x;
  b.len_y = len_y;
  return b;
}

BlockSpec BlockSpec::wall_with_gate(double gate_width, double gate_offset, double len_x,
                                    double len_y) {
  BlockSpec b = flat(len_x, len_y);
  b.kind = BlockKind::WallWithGate;
  b.gate_width = gate_width;
  b.gate_offset = gate_offset;
  return b;
}

BlockSpec BlockSpec::platform(double height, double len_x, double len_y) {
  BlockSpec b = flat(len_x, len_y);
  b.kind = BlockKind::Platform;
  b.height = height;
  return b;
}

BlockSpec BlockSpec::seesaw(double plank_len, double plank_width, double pivot_height,
                            double len_y) {
  BlockSpec b = flat(plank_len, len_y);
  b.kind = BlockKind::Seesaw;
  b.plank_len = plank_len;
  b.plank_width = plank_width;
  b.pivot_height = pivot_height;
  return b;
}

BlockSpec BlockSpec::bridge(double width, double length, double deck_height, double len_y) {
  BlockSpec b = flat(length, len_y);
  b.kind = BlockKind::Bridge;
  b.side_walls = false;
  b.bridge_width = width;
  b.deck_height = deck_height;
  return b;
}

BlockSpec BlockSpec::walled_arena(double w, double h) {
  BlockSpec b = flat(w, h);
  b.kind = BlockKind::WalledArena;
  b.side_walls = false;
  b.arena_w = w;
  b.arena_h = h;
  return b;
}

BlockSpec BlockSpec::football_pitch(double length, double width, double goal_width) {
  BlockSpec b;
  b.kind = BlockKind::FootballPitch;
  b.side_walls = false;
  b.pitch_length = length;
  b.pitch_width = width;
  b.goal_width = goal_width;
  b.len_x = length + 2.0 * b.goal_depth;
  b.len_y = width;
  return b;
}

BlockSpec BlockSpec::sumo_ring(double radius, double platform_height, double extent) {
  BlockSpec b = flat(extent, extent);
  b.kind = BlockKind::SumoRing;
  b.side_walls = false;
  b.ring_radius = radius;
  b.platform_height = platform_height;
  return b;
}

Vec2 Arena::anchor(const std::string& label) const {
  auto it = anchors.find(label);
  if (it == anchors.end()) throw ConfigError("arena has no anchor '" + label + "'");
  return it->second;
}

namespace {

void validate(const BlockSpec& b, std::size_t index) {
  const std::string where = "block " + std::to_string(index) + " (" +
                            std::string(to_string(b.kind)) + "): ";
  if (!(b.len_x > 0.0) || !(b.len_y > 0.0)) throw ConfigError(where + "extent must be positive");
  switch (b.kind) {
    case BlockKind::WallWithGate:
      if (!(b.gate_width > 0.0) || !(b.gate_width < b.len_y))
        throw ConfigError(where + "gate_width must be in (0, wall length)");
      if (std::abs(b.gate_offset) + 0.5 * b.gate_width > 0.5 * b.len_y)
        throw ConfigError(where + "gate does not fit inside the wall");
      break;
    case BlockKind::Seesaw:
      if (!(b.plank_width > 0.0) || b.plank_width > b.len_y || !(b.pivot_height > 0.0) ||
          2.0 * b.pivot_height >= b.plank_len)
        throw ConfigError(where + "invalid plank geometry");
      break;
    case BlockKind::Bridge:
      if (!(b.bridge_width > 0.0) || b.bridge_width > b.len_y || !(b.deck_height > 0.0))
        throw ConfigError(where + "invalid bridge geometry");
      break;
    case BlockKind::WalledArena:
      if (b.arena_w > b.len_x || b.arena_h > b.len_y)
        throw ConfigError(where + "arena larger than its block");
      break;
    case BlockKind::FootballPitch:
      if (!(b.goal_width > 0.0) || b.goal_width >= b.pitch_width ||
          b.pitch_length + 2.0 * b.goal_depth > b.len_x + 1e-12)
        throw ConfigError(where + "invalid pitch geometry");
      break;
    case BlockKind::SumoRing:
      if (!(b.ring_radius > 0.0) || 2.0 * b.ring_radius > std::min(b.len_x, b.len_y))
        throw ConfigError(where + "ring does not fit inside its block");
      break;
    default:
      break;
  }
}

void add_anchor(Arena& arena, const std::string& label, Vec2 p) {
  if (!arena.anchors.contains(label)) {
    arena.anchors.emplace(label, p);
    return;
  }
  for (int k = 2;; ++k) {
    std::string alt = label + "_" + std::to_string(k);
    if (!arena.anchors.contains(alt)) {
      arena.anchors.emplace(alt, p);
      return;
    }
  }
}

void emit_block(Arena& arena, const PlacedBlock& pb) {
  const BlockSpec& b = pb.spec;
  const double xm = 0.5 * (pb.x0 + pb.x1);
  const double yc = pb.yc;
  if (b.side_walls) {
    arena.walls.push_back({{pb.x0, pb.y0}, {pb.x1, pb.y0}});
    arena.walls.push_back({{pb.x0, pb.y1}, {pb.x1, pb.y1}});
  }
  switch (b.kind) {
    case BlockKind::Flat:
      add_anchor(arena, "flat_center", {xm, yc});
      break;
    case BlockKind::WallWithGate: {
      const double g_lo = yc + b.gate_offset - 0.5 * b.gate_width;
      const double g_hi = yc + b.gate_offset + 0.5 * b.gate_width;
      arena.walls.push_back({{xm, pb.y0}, {xm, g_lo}});
      arena.walls.push_back({{xm, g_hi}, {xm, pb.y1}});
      add_anchor(arena, "gate_center", {xm, yc + b.gate_offset});
      break;
    }
    case BlockKind::Platform:
      add_anchor(arena, "platform_center", {xm, yc});
      break;
    case BlockKind::Seesaw: {
      SeesawGeometry g;
      g.x_near = pb.x0;
      g.x_far = pb.x1;
      g.pivot_x = xm;
      g.y_center = yc;
      g.half_width = 0.5 * b.plank_width;
      g.pivot_height = b.pivot_height;
      g.max_angle = std::asin(2.0 * b.pivot_height / b.plank_len);
      if (!arena.seesaw) arena.seesaw = g;
      add_anchor(arena, "seesaw_center", {xm, yc});
      add_anchor(arena, "seesaw_near", {pb.x0, yc});
      add_anchor(arena, "platform_edge", {pb.x1, yc});
      break;
    }
    case BlockKind::Bridge:
      add_anchor(arena, "bridge_near", {pb.x0, yc});
      add_anchor(arena, "bridge_far", {pb.x1, yc});
      add_anchor(arena, "bridge_center", {xm, yc});
      break;
    case BlockKind::WalledArena: {
      const double hx = 0.5 * b.arena_w;
      const double hy = 0.5 * b.arena_h;
      const Vec2 c{xm, yc};
      arena.walls.push_back({c + Vec2{-hx, -hy}, c + Vec2{hx, -hy}});
      arena.walls.push_back({c + Vec2{hx, -hy}, c + Vec2{hx, hy}});
      arena.walls.push_back({c + Vec2{hx, hy}, c + Vec2{-hx, hy}});
      arena.walls.push_back({c + Vec2{-hx, hy}, c + Vec2{-hx, -hy}});
      add_anchor(arena, "arena_center", c);
      add_anchor(arena, "baseline_neg", {xm - 0.3 * b.arena_w, yc});
      add_anchor(arena, "baseline_pos", {xm + 0.3 * b.arena_w, yc});
      break;
    }
    case BlockKind::FootballPitch: {
      const double hl = 0.5 * b.pitch_length;
      const double hw = 0.5 * b.pitch_width;
      const double hg = 0.5 * b.goal_width;
      const double back = hl + b.goal_depth;
      const Vec2 c{xm, yc};
      arena.walls.push_back({c + Vec2{-hl, -hw}, c + Vec2{hl, -hw}});
      arena.walls.push_back({c + Vec2{-hl, hw}, c + Vec2{hl, hw}});
      for (double sx : {-1.0, 1.0}) {
        arena.walls.push_back({c + Vec2{sx * hl, -hw}, c + Vec2{sx * hl, -hg}});
        arena.walls.push_back({c + Vec2{sx * hl, hg}, c + Vec2{sx * hl, hw}});
        arena.walls.push_back({c + Vec2{sx * hl, -hg}, c + Vec2{sx * back, -hg}});
        arena.walls.push_back({c + Vec2{sx * hl, hg}, c + Vec2{sx * back, hg}});
        arena.walls.push_back({c + Vec2{sx * back, -hg}, c + Vec2{sx * back, hg}});
      }
      add_anchor(arena, "pitch_center", c);
      add_anchor(arena, "goal_center", c + Vec2{hl, 0.0});
      add_anchor(arena, "own_goal_center", c + Vec2{-hl, 0.0});
      break;
    }
    case BlockKind::SumoRing:
      add_anchor(arena, "ring_center", {xm, yc});
      break;
  }
}

}  // namespace

Arena compose_track(std::span<const BlockSpec> blocks, Vec2 origin) {
  if (blocks.empty()) throw ConfigError("compose_track: block list is empty");
  Arena arena;
  double cursor = origin.x;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const BlockSpec& b = blocks[i];
    validate(b, i);
    PlacedBlock pb;
    pb.spec = b;
    pb.x0 = b.x_start ? origin.x + *b.x_start : cursor;
    if (i > 0 && pb.x0 < cursor - 1e-12) {
      throw ConfigError("compose_track: block " + std::to_string(i - 1) + " (" +
                        std::string(to_string(blocks[i - 1].kind)) + ") overlaps block " +
                        std::to_string(i) + " (" + std::string(to_string(b.kind)) + ")");
    }
    pb.x1 = pb.x0 + b.len_x;
    pb.yc = origin.y;
    pb.y0 = origin.y - 0.5 * b.len_y;
    pb.y1 = origin.y + 0.5 * b.len_y;
    cursor = pb.x1;
    arena.blocks.push_back(pb);
  }
  for (const PlacedBlock& pb : arena.blocks) emit_block(arena, pb);

  const PlacedBlock& first = arena.blocks.front();
  const PlacedBlock& last = arena.blocks.back();
  if (first.spec.side_walls) arena.walls.push_back({{first.x0, first.y0}, {first.x0, first.y1}});
  if (last.spec.side_walls) arena.walls.push_back({{last.x1, last.y0}, {last.x1, last.y1}});

  arena.lo = {first.x0, first.y0};
  arena.hi = {last.x1, first.y1};
  for (const PlacedBlock& pb : arena.blocks) {
    arena.lo.y = std::min(arena.lo.y, pb.y0);
    arena.hi.y = std::max(arena.hi.y, pb.y1);
  }
  return arena;
}

double height_at(const Arena& arena, double x, double y, double seesaw_angle) {
  for (const PlacedBlock& pb : arena.blocks) {
    if (x < pb.x0 || x > pb.x1 || y < pb.y0 || y > pb.y1) continue;
    const BlockSpec& b = pb.spec;
    switch (b.kind) {
      case BlockKind::Flat:
      case BlockKind::WallWithGate:
      case BlockKind::WalledArena:
      case BlockKind::FootballPitch:
        return 0.0;
      case BlockKind::Platform:
        return b.height;
      case BlockKind::Seesaw: {
        const double xm = 0.5 * (pb.x0 + pb.x1);
        if (std::abs(y - pb.yc) <= 0.5 * b.plank_width)
          return b.pivot_height + (x - xm) * std::sin(seesaw_angle);
        return 0.0;
      }
      case BlockKind::Bridge:
        return std::abs(y - pb.yc) <= 0.5 * b.bridge_width ? b.deck_height : 0.0;
      case BlockKind::SumoRing: {
        const double dx = x - 0.5 * (pb.x0 + pb.x1);
        const double dy = y - pb.yc;
        return dx * dx + dy * dy <= b.ring_radius * b.ring_radius ? b.platform_height : 0.0;
      }
    }
  }
  return kVoidHeight;
}

// ---------------------------------------------------------------------------
// Block list text form

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view s, std::string_view ctx) {
  s = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError("block list: bad number '" + std::string(s) + "' in " + std::string(ctx));
  return v;
}

// "4x6" -> (4, 6)
std::pair<double, double> parse_extent(std::string_view s, std::string_view ctx) {
  s = trim(s);
  const auto pos = s.find('x');
  if (pos == std::string_view::npos)
    throw ConfigError("block list: expected extent LxW in " + std::string(ctx));
  return {parse_number(s.substr(0, pos), ctx), parse_number(s.substr(pos + 1), ctx)};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::vector<BlockSpec> parse_block_list(std::string_view text) {
  std::vector<BlockSpec> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(';', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view item = trim(text.substr(start, end - start));
    start = end + 1;
    if (item.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto open = item.find('(');
    if (open == std::string_view::npos || item.back() != ')')
      throw ConfigError("block list: malformed item '" + std::string(item) + "'");
    const std::string_view name = trim(item.substr(0, open));
    std::vector<std::string_view> args;
    std::string_view inner = item.substr(open + 1, item.size() - open - 2);
    std::size_t a = 0;
    while (a <= inner.size()) {
      std::size_t b = inner.find(',', a);
      if (b == std::string_view::npos) b = inner.size();
      args.push_back(trim(inner.substr(a, b - a)));
      a = b + 1;
    }
    auto need = [&](std::size_t n) {
      if (args.size() != n)
        throw ConfigError("block list: " + std::string(name) + " takes " + std::to_string(n) +
                          " arguments");
    };
    const std::string ctx(item);
    if (name == "Flat") {
      need(1);
      auto [lx, ly] = parse_extent(args[0], ctx);
      out.push_back(BlockSpec::flat(lx, ly));
    } else if (name == "WallWithGate") {
      need(3);
      auto [lx, ly] = parse_extent(args[2], ctx);
      out.push_back(BlockSpec::wall_with_gate(parse_number(args[0], ctx),
                                              parse_number(args[1], ctx), lx, ly));
    } else if (name == "Platform") {
      need(2);
      auto [lx, ly] = parse_extent(args[1], ctx);
      out.push_back(BlockSpec::platform(parse_number(args[0], ctx), lx, ly));
    } else if (name == "Seesaw") {
      need(4);
      out.push_back(BlockSpec::seesaw(parse_number(args[0], ctx), parse_number(args[1], ctx),
                                      parse_number(args[2], ctx), parse_number(args[3], ctx)));
    } else if (name == "Bridge") {
      need(4);
      out.push_back(BlockSpec::bridge(parse_number(args[0], ctx), parse_number(args[1], ctx),
                                      parse_number(args[2], ctx), parse_number(args[3], ctx)));
    } else if (name == "WalledArena") {
      need(1);
      auto [w, h] = parse_extent(args[0], ctx);
      out.push_back(BlockSpec::walled_arena(w, h));
    } else if (name == "FootballPitch") {
      need(3);
      out.push_back(BlockSpec::football_pitch(parse_number(args[0], ctx),
                                              parse_number(args[1], ctx),
                                              parse_number(args[2], ctx)));
    } else if (name == "SumoRing") {
      need(3);
      out.push_back(BlockSpec::sumo_ring(parse_number(args[0], ctx), parse_number(args[1], ctx),
                                         parse_number(args[2], ctx)));
    } else {
      throw ConfigError("block list: unknown block kind '" + std::string(name) + "'");
    }
  }
  if (out.empty()) throw ConfigError("block list is empty");
  return out;
}

std::string format_block_list(std::span<const BlockSpec> blocks) {
  std::string s;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const BlockSpec& b = blocks[i];
    if (i) s += "; ";
    s += to_string(b.kind);
    s += '(';
    switch (b.kind) {
      case BlockKind::Flat: s += fmt(b.len_x) + "x" + fmt(b.len_y); break;
      case BlockKind::WallWithGate:
        s += fmt(b.gate_width) + ", " + fmt(b.gate_offset) + ", " + fmt(b.len_x) + "x" +
             fmt(b.len_y);
        break;
      case BlockKind::Platform: s += fmt(b.height) + ", " + fmt(b.len_x) + "x" + fmt(b.len_y); break;
      case BlockKind::Seesaw:
        s += fmt(b.plank_len) + ", " + fmt(b.plank_width) + ", " + fmt(b.pivot_height) + ", " +
             fmt(b.len_y);
        break;
      case BlockKind::Bridge:
        s += fmt(b.bridge_width) + ", " + fmt(b.len_x) + ", " + fmt(b.deck_height) + ", " +
             fmt(b.len_y);
        break;
      case BlockKind::WalledArena: s += fmt(b.arena_w) + "x" + fmt(b.arena_h); break;
      case BlockKind::FootballPitch:
        s += fmt(b.pitch_length) + ", " + fmt(b.pitch_width) + ", " + fmt(b.goal_width);
        break;
      case BlockKind::SumoRing:
        s += fmt(b.ring_radius) + ", " + fmt(b.platform_height) + ", " + fmt(b.len_x);
        break;
    }
    s += ')';
  }
  return s;
}

// ---------------------------------------------------------------------------

std::vector<Pose> spawn_layout(std::span<const SpawnRect> regions, std::span<const double> radii,
                               double margin, Rng& rng) {
  constexpr int kMaxTries = 100;
  if (radii.size() != regions.size()) throw ConfigError("spawn_layout: radii size mismatch");
  std::vector<Pose> placed;
  placed.reserve(regions.size());
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const SpawnRect& r = regions[i];
    auto free_at = [&](Vec2 p) {
      for (std::size_t j = 0; j < placed.size(); ++j) {
        const double sep = radii[i] + radii[j] + margin;
        if (norm2(p - placed[j].pos) < sep * sep) return false;
      }
      return true;
    };
    const double separation = 2.0 * radii[i] + margin;
    Pose pose;
    pose.yaw = rng.uniform(r.yaw_lo, r.yaw_hi);
    bool ok = false;
    for (int t = 0; t < kMaxTries && !ok; ++t) {
      const Vec2 p{rng.uniform(r.x_lo, r.x_hi), rng.uniform(r.y_lo, r.y_hi)};
      if (free_at(p)) {
        pose.pos = p;
        ok = true;
      }
    }
    if (!ok) {
      const int nx = 1 + static_cast<int>(std::floor((r.x_hi - r.x_lo) / separation));
      const int ny = 1 + static_cast<int>(std::floor((r.y_hi - r.y_lo) / separation));
      for (int iy = 0; iy < ny && !ok; ++iy) {
        for (int ix = 0; ix < nx && !ok; ++ix) {
          const Vec2 p{r.x_lo + ix * separation, r.y_lo + iy * separation};
          if (free_at(p)) {
            pose.pos = p;
            ok = true;
          }
        }
      }
    }
    if (!ok) {
      throw ConfigError("spawn_layout: region " + std::to_string(i) +
                        " cannot be placed with margin " + std::to_string(margin) + " m");
    }
    placed.push_back(pose);
  }
  return placed;
}

}  // namespace mqe
