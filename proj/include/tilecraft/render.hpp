#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "tilecraft/world.hpp"

namespace tilecraft {

inline constexpr int kTileSide = 8;
inline constexpr int kTileBytes = kTileSide * kTileSide * 3;
inline constexpr int kViewCells = 8;
inline constexpr int kPovSide = kViewCells * kTileSide;  // 64
inline constexpr int kPovBytes = kPovSide * kPovSide * 3;  // 12288

// Agent sits at this (row, col) of the egocentric 8x8 window, facing row 0.
inline constexpr int kAgentViewRow = 4;
inline constexpr int kAgentViewCol = 4;

// 64x64 RGB, row-major, 8-bit channels.
struct Image {
  std::array<std::uint8_t, kPovBytes> pixels{};

  std::uint8_t* pixel(int row, int col) { return &pixels[(row * kPovSide + col) * 3]; }
  const std::uint8_t* pixel(int row, int col) const { return &pixels[(row * kPovSide + col) * 3]; }
  friend bool operator==(const Image&, const Image&) = default;
};

// Tile slots: the nine cell types in code order, then the agent, then animals
// in AnimalKind order.
inline constexpr int kAgentTile = kCellTypeCount;
inline constexpr int kFirstAnimalTile = kCellTypeCount + 1;
inline constexpr int kTileCount = kFirstAnimalTile + kAnimalKindCount;  // 14

using Tile = std::array<std::uint8_t, kTileBytes>;

struct TexturePack {
  std::string pack_id;  // 16 hex digits of the pack seed
  std::array<Tile, kTileCount> tiles{};
  double lighting = 1.0;  // [0.7, 1.3]
  friend bool operator==(const TexturePack&, const TexturePack&) = default;
};

TexturePack make_texture_pack(std::uint64_t pack_seed);
std::string pack_id_for(std::uint64_t pack_seed);

// Lit channel value: floor(v * lighting + 0.5) clamped to 255.
std::uint8_t lit(std::uint8_t v, double lighting);

Image render_pov(const WorldState& state, const TexturePack& pack);

// Raw tile atlas: the 14 tiles concatenated in slot order, 192 bytes each.
void write_atlas(const TexturePack& pack, const std::filesystem::path& path);

}  // namespace tilecraft
