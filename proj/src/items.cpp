#include "tilecraft/items.hpp"

#include <array>

namespace tilecraft {

namespace {

constexpr std::array<std::string_view, kItemCount> kItemNames = {
    "log",           "planks",          "stick",          "crafting_table",   "wooden_pickaxe",
    "cobblestone",   "furnace",         "stone_pickaxe",  "iron_ore",         "iron_ingot",
    "iron_pickaxe",  "diamond",         "iron_axe",       "raw_meat_cow",     "raw_meat_chicken",
    "raw_meat_sheep", "raw_meat_pig",   "cooked_meat_cow", "cooked_meat_chicken",
    "cooked_meat_sheep", "cooked_meat_pig",
};

constexpr std::array<std::string_view, kCellTypeCount> kCellNames = {
    "ground", "wall", "tree", "stone", "iron_ore_block", "diamond_ore_block",
    "water",  "placed_table", "placed_furnace",
};

constexpr std::array<std::string_view, kActionCount> kActionNames = {
    "noop",          "forward",          "backward",     "turn_left",
    "turn_right",    "attack",           "place_table",  "place_furnace",
    "craft_planks",  "craft_stick",      "craft_table",  "craft_wooden_pickaxe",
    "craft_stone_pickaxe", "craft_iron_pickaxe", "smelt_iron_ingot", "smelt_meat",
};

constexpr std::array<std::string_view, kAnimalKindCount> kAnimalNames = {"cow", "chicken", "sheep",
                                                                        "pig"};

using enum ItemId;

constexpr Recipe kPlanks{Planks, 4, {{{Log, 1}, {Log, 0}}}, 1, Station::None};
constexpr Recipe kStick{Stick, 4, {{{Planks, 2}, {Log, 0}}}, 1, Station::None};
constexpr Recipe kTable{CraftingTable, 1, {{{Planks, 4}, {Log, 0}}}, 1, Station::None};
constexpr Recipe kWoodenPickaxe{WoodenPickaxe, 1, {{{Planks, 3}, {Stick, 2}}}, 2, Station::Table};
constexpr Recipe kStonePickaxe{StonePickaxe, 1, {{{Cobblestone, 3}, {Stick, 2}}}, 2, Station::Table};
constexpr Recipe kFurnace{Furnace, 1, {{{Cobblestone, 8}, {Log, 0}}}, 1, Station::Table};
constexpr Recipe kIronPickaxe{IronPickaxe, 1, {{{IronIngot, 3}, {Stick, 2}}}, 2, Station::Table};
constexpr Recipe kIronIngot{IronIngot, 1, {{{IronOre, 1}, {Planks, 1}}}, 2, Station::Furnace};

constexpr std::array<Recipe, kAnimalKindCount> kCookedMeat = {{
    {CookedMeatCow, 1, {{{RawMeatCow, 1}, {Planks, 1}}}, 2, Station::Furnace},
    {CookedMeatChicken, 1, {{{RawMeatChicken, 1}, {Planks, 1}}}, 2, Station::Furnace},
    {CookedMeatSheep, 1, {{{RawMeatSheep, 1}, {Planks, 1}}}, 2, Station::Furnace},
    {CookedMeatPig, 1, {{{RawMeatPig, 1}, {Planks, 1}}}, 2, Station::Furnace},
}};

}  // namespace

std::string_view item_name(ItemId item) { return kItemNames[code(item)]; }

std::optional<ItemId> item_from_name(std::string_view name) {
  for (int i = 0; i < kItemCount; ++i)
    if (kItemNames[i] == name) return static_cast<ItemId>(i);
  return std::nullopt;
}

std::optional<ItemId> item_from_code(int c) {
  if (c < 0 || c >= kItemCount) return std::nullopt;
  return static_cast<ItemId>(c);
}

std::string_view cell_name(CellType cell) { return kCellNames[code(cell)]; }
std::string_view action_name(Action action) { return kActionNames[code(action)]; }
std::string_view animal_name(AnimalKind kind) { return kAnimalNames[static_cast<int>(kind)]; }

std::optional<AnimalKind> animal_from_name(std::string_view name) {
  for (int i = 0; i < kAnimalKindCount; ++i)
    if (kAnimalNames[i] == name) return static_cast<AnimalKind>(i);
  return std::nullopt;
}

std::optional<Action> action_from_code(int c) {
  if (c < 0 || c >= kActionCount) return std::nullopt;
  return static_cast<Action>(c);
}

ItemId raw_meat(AnimalKind kind) {
  return static_cast<ItemId>(code(RawMeatCow) + static_cast<int>(kind));
}

ItemId cooked_meat(AnimalKind kind) {
  return static_cast<ItemId>(code(CookedMeatCow) + static_cast<int>(kind));
}

const Recipe* recipe_for(Action action) {
  switch (action) {
    case Action::CraftPlanks: return &kPlanks;
    case Action::CraftStick: return &kStick;
    case Action::CraftTable: return &kTable;
    case Action::CraftWoodenPickaxe: return &kWoodenPickaxe;
    case Action::CraftStonePickaxe: return &kStonePickaxe;
    case Action::CraftIronPickaxe: return &kIronPickaxe;
    case Action::SmeltIronIngot: return &kIronIngot;
    default: return nullptr;
  }
}

const Recipe* recipe_producing(ItemId item) {
  switch (item) {
    case Planks: return &kPlanks;
    case Stick: return &kStick;
    case CraftingTable: return &kTable;
    case WoodenPickaxe: return &kWoodenPickaxe;
    case StonePickaxe: return &kStonePickaxe;
    case Furnace: return &kFurnace;
    case IronPickaxe: return &kIronPickaxe;
    case IronIngot: return &kIronIngot;
    case CookedMeatCow: return &kCookedMeat[0];
    case CookedMeatChicken: return &kCookedMeat[1];
    case CookedMeatSheep: return &kCookedMeat[2];
    case CookedMeatPig: return &kCookedMeat[3];
    default: return nullptr;
  }
}

}  // namespace tilecraft
