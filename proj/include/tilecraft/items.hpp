#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>

namespace tilecraft {

// Serialized codes are the enumerator values; do not reorder.
enum class ItemId : std::uint8_t {
  Log,
  Planks,
  Stick,
  CraftingTable,
  WoodenPickaxe,
  Cobblestone,
  Furnace,
  StonePickaxe,
  IronOre,
  IronIngot,
  IronPickaxe,
  Diamond,
  IronAxe,
  RawMeatCow,
  RawMeatChicken,
  RawMeatSheep,
  RawMeatPig,
  CookedMeatCow,
  CookedMeatChicken,
  CookedMeatSheep,
  CookedMeatPig,
};
inline constexpr int kItemCount = 21;

enum class CellType : std::uint8_t {
  Ground,
  Wall,
  Tree,
  Stone,
  IronOreBlock,
  DiamondOreBlock,
  Water,
  PlacedTable,
  PlacedFurnace,
};
inline constexpr int kCellTypeCount = 9;

enum class Action : std::uint8_t {
  Noop,
  Forward,
  Backward,
  TurnLeft,
  TurnRight,
  Attack,
  PlaceTable,
  PlaceFurnace,
  CraftPlanks,
  CraftStick,
  CraftTable,
  CraftWoodenPickaxe,
  CraftStonePickaxe,
  CraftIronPickaxe,
  SmeltIronIngot,
  SmeltMeat,
};
inline constexpr int kActionCount = 16;

enum class Facing : std::uint8_t { N, E, S, W };

enum class AnimalKind : std::uint8_t { Cow, Chicken, Sheep, Pig };
inline constexpr int kAnimalKindCount = 4;

enum class Station : std::uint8_t { None, Table, Furnace };

struct Recipe {
  ItemId output;
  int output_count;
  std::array<std::pair<ItemId, int>, 2> inputs;
  int input_count;  // used prefix of `inputs`
  Station station;

  std::span<const std::pair<ItemId, int>> ingredients() const {
    return {inputs.data(), static_cast<std::size_t>(input_count)};
  }
};

constexpr int code(ItemId i) { return static_cast<int>(i); }
constexpr int code(CellType c) { return static_cast<int>(c); }
constexpr int code(Action a) { return static_cast<int>(a); }

std::string_view item_name(ItemId item);
std::optional<ItemId> item_from_name(std::string_view name);
std::optional<ItemId> item_from_code(int code);

std::string_view cell_name(CellType cell);
std::string_view action_name(Action action);
std::string_view animal_name(AnimalKind kind);
std::optional<AnimalKind> animal_from_name(std::string_view name);

// nullopt for codes outside 0..15.
std::optional<Action> action_from_code(int code);

ItemId raw_meat(AnimalKind kind);
ItemId cooked_meat(AnimalKind kind);

// Recipe for a craft/smelt action, nullptr for everything else. SmeltMeat's
// recipe depends on the raw meat held and is resolved by the world.
const Recipe* recipe_for(Action action);

// Recipe producing `item`, nullptr for raw resources.
const Recipe* recipe_producing(ItemId item);

// 0 = none, 1 = wooden, 2 = stone, 3 = iron.
template <typename Inventory>
int pickaxe_tier(const Inventory& inv) {
  if (inv[code(ItemId::IronPickaxe)] > 0) return 3;
  if (inv[code(ItemId::StonePickaxe)] > 0) return 2;
  if (inv[code(ItemId::WoodenPickaxe)] > 0) return 1;
  return 0;
}

}  // namespace tilecraft
