#include <cmath>

#include "doctest.h"
#include "tilecraft/render.hpp"

using namespace tilecraft;

TEST_CASE("packs are deterministic and distinct") {
  auto a = make_texture_pack(1);
  CHECK(a == make_texture_pack(1));
  auto b = make_texture_pack(2);
  CHECK(a.tiles != b.tiles);
  CHECK(a.pack_id == "0000000000000001");
  CHECK(pack_id_for(0xabcdef) == "0000000000abcdef");
  for (std::uint64_t s = 0; s < 200; ++s) {
    double l = make_texture_pack(s).lighting;
    CHECK(l >= 0.7);
    CHECK(l <= 1.3);
  }
}

TEST_CASE("lighting rounds half up and saturates") {
  CHECK(lit(100, 1.0) == 100);
  CHECK(lit(100, 1.3) == 130);
  CHECK(lit(255, 1.3) == 255);
  CHECK(lit(5, 0.7) == 4);  // 3.5 rounds up
  CHECK(lit(0, 1.3) == 0);
}

TEST_CASE("render is a pure function of state and pack") {
  auto w = generate_world(3, GenConfig{});
  auto pack = make_texture_pack(9);
  auto img = render_pov(w, pack);
  CHECK(img == render_pov(w, pack));
  CHECK_FALSE(img == render_pov(w, make_texture_pack(10)));

  // Agent tile at the documented window position.
  const auto& tile = pack.tiles[kAgentTile];
  for (int r = 0; r < kTileSide; ++r)
    for (int c = 0; c < kTileSide; ++c)
      for (int ch = 0; ch < 3; ++ch)
        CHECK(img.pixel(kAgentViewRow * kTileSide + r, kAgentViewCol * kTileSide + c)[ch] ==
              lit(tile[(r * kTileSide + c) * 3 + ch], pack.lighting));
}

TEST_CASE("faced cell is drawn directly above the agent") {
  WorldState w;
  w.side = 20;
  w.grid.assign(400, CellType::Ground);
  w.agent.pos = {10, 10};
  auto pack = make_texture_pack(4);
  for (Facing f : {Facing::N, Facing::E, Facing::S, Facing::W}) {
    w.agent.facing = f;
    auto g = w.grid;
    w.at(w.faced_cell()) = CellType::Stone;
    auto img = render_pov(w, pack);
    const auto& tile = pack.tiles[code(CellType::Stone)];
    CHECK(img.pixel((kAgentViewRow - 1) * kTileSide, kAgentViewCol * kTileSide)[0] ==
          lit(tile[0], pack.lighting));
    w.grid = g;
  }
}
