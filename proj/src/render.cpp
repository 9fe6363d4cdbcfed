#include "tilecraft/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "tilecraft/errors.hpp"
#include "tilecraft/rng.hpp"

namespace tilecraft {

namespace {

struct Rgb {
  int r, g, b;
};

// Reference hues per tile slot; packs jitter these.
// Reference colors; the common cells are spaced apart in luminance so they
// stay distinguishable after grayscale downsampling.
constexpr std::array<Rgb, kTileCount> kPalette = {{
    {140, 190, 90},   // ground
    {30, 30, 35},     // wall
    {40, 125, 35},    // tree
    {120, 120, 125},  // stone
    {190, 130, 95},   // iron ore
    {120, 230, 235},  // diamond ore
    {30, 50, 170},    // water
    {160, 105, 45},   // placed table
    {85, 75, 75},     // placed furnace
    {230, 200, 60},   // agent
    {100, 70, 40},    // cow
    {235, 235, 235},  // chicken
    {200, 200, 180},  // sheep
    {240, 150, 160},  // pig
}};

std::uint8_t clamp_channel(int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); }

}  // namespace

std::string pack_id_for(std::uint64_t pack_seed) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(pack_seed));
  return buf;
}

// Draw order: per slot, three base-colour jitter draws then one draw per pixel
// channel; the lighting draw comes last.
TexturePack make_texture_pack(std::uint64_t pack_seed) {
  TexturePack pack;
  pack.pack_id = pack_id_for(pack_seed);
  SplitMix64 rng(pack_seed);
  for (int slot = 0; slot < kTileCount; ++slot) {
    const Rgb ref = kPalette[slot];
    const int base[3] = {ref.r + static_cast<int>(rng.below(41)) - 20,
                         ref.g + static_cast<int>(rng.below(41)) - 20,
                         ref.b + static_cast<int>(rng.below(41)) - 20};
    Tile& tile = pack.tiles[slot];
    for (int i = 0; i < kTileBytes; ++i)
      tile[i] = clamp_channel(base[i % 3] + static_cast<int>(rng.below(25)) - 12);
  }
  pack.lighting = 0.7 + rng.uniform() * 0.6;
  return pack;
}

std::uint8_t lit(std::uint8_t v, double lighting) {
  return static_cast<std::uint8_t>(std::min(255.0, std::floor(v * lighting + 0.5)));
}

Image render_pov(const WorldState& state, const TexturePack& pack) {
  Image img;
  std::array<std::uint8_t, 256> lut;
  for (int v = 0; v < 256; ++v) lut[v] = lit(static_cast<std::uint8_t>(v), pack.lighting);

  const Facing forward = state.agent.facing;
  const Facing right = turn_right(forward);
  for (int row = 0; row < kViewCells; ++row) {
    for (int col = 0; col < kViewCells; ++col) {
      Cell c = step_towards(state.agent.pos, forward, kAgentViewRow - row);
      c = step_towards(c, right, col - kAgentViewCol);
      int slot = code(state.at_or_wall(c));
      if (row == kAgentViewRow && col == kAgentViewCol) {
        slot = kAgentTile;
      } else if (state.in_bounds(c)) {
        if (int a = state.animal_at(c); a >= 0)
          slot = kFirstAnimalTile + static_cast<int>(state.animals[a].kind);
      }
      const Tile& tile = pack.tiles[slot];
      for (int ty = 0; ty < kTileSide; ++ty) {
        std::uint8_t* dst = img.pixel(row * kTileSide + ty, col * kTileSide);
        const std::uint8_t* src = &tile[ty * kTileSide * 3];
        for (int i = 0; i < kTileSide * 3; ++i) dst[i] = lut[src[i]];
      }
    }
  }
  return img;
}

void write_atlas(const TexturePack& pack, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write atlas " + path.string());
  for (const Tile& t : pack.tiles)
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size()));
  if (!out) throw IoError("short write on atlas " + path.string());
}

}  // namespace tilecraft
