#include "doctest.h"

#include "rtf/decoding.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace rtf;

TEST_CASE("nearest_match") {
  // (1,3) and (3,1) are both at distance 2 from (1,1); smaller row wins.
  const std::vector<Cell> tie{{3, 1}, {1, 3}};
  CHECK(nearest_match({1, 1}, tie, Direction::BottomRight) == Cell{1, 3});

  const std::vector<Cell> behind{{4, 4}};
  CHECK_FALSE(nearest_match({5, 5}, behind, Direction::BottomRight).has_value());
  CHECK(nearest_match({5, 5}, behind, Direction::UpperLeft) == Cell{4, 4});

  const std::vector<Cell> self{{2, 2}};
  CHECK(nearest_match({2, 2}, self, Direction::BottomRight) == Cell{2, 2});
  CHECK(nearest_match({2, 2}, self, Direction::UpperLeft) == Cell{2, 2});

  const std::vector<Cell> none;
  CHECK_FALSE(nearest_match({0, 0}, none, Direction::BottomRight).has_value());
}

TEST_CASE("walk-through grid: SP, one UL, two BRs on the USA row") {
  TagGrid g(0, 14);
  g.set(12, 0, Tag::SP);  // (USA, Seattle)
  g.set(12, 2, Tag::UL);  // (USA, New)
  g.set(12, 3, Tag::BR);  // (USA, York)
  g.set(12, 4, Tag::BR);  // (USA, City)
  const TripleSet expected{{{12, 12}, 0, {0, 0}}, {{12, 12}, 0, {2, 3}}, {{12, 12}, 0, {2, 4}}};
  CHECK(decode_grid(g) == expected);
}

TEST_CASE("empty grid decodes to nothing") {
  CHECK(decode_grid(TagGrid(0, 5)).empty());
}

TEST_CASE("lone UL falls back to the nearest SP") {
  TagGrid g(0, 8);
  g.set(2, 3, Tag::UL);
  g.set(4, 5, Tag::SP);
  const TripleSet expected{{{4, 4}, 0, {5, 5}}, {{2, 4}, 0, {3, 5}}};
  CHECK(decode_grid(g) == expected);
  CHECK(testing::reference_decode(g) == expected);
}

TEST_CASE("lone BR falls back to an SP on the upper-left") {
  TagGrid g(0, 8);
  g.set(1, 1, Tag::SP);
  g.set(3, 6, Tag::BR);
  const TripleSet expected{{{1, 1}, 0, {1, 1}}, {{1, 3}, 0, {1, 6}}};
  CHECK(decode_grid(g) == expected);
}

TEST_CASE("unmatched corners are dropped") {
  TagGrid g(0, 6);
  g.set(4, 4, Tag::UL);
  g.set(1, 1, Tag::BR);
  CHECK(decode_grid(g).empty());
}

TEST_CASE("decode_all tags triples with relation ids") {
  std::vector<TagGrid> grids{TagGrid(0, 4), TagGrid(1, 4)};
  grids[0].set(1, 2, Tag::SP);
  grids[1].set(1, 2, Tag::SP);
  const TripleSet expected{{{1, 1}, 0, {2, 2}}, {{1, 1}, 1, {2, 2}}};
  CHECK(decode_all(grids, 4, 2) == expected);
  CHECK_THROWS_AS(decode_all(grids, 4, 3), DataError);
  CHECK_THROWS_AS(decode_all(grids, 5, 2), DataError);
}

TEST_CASE("decode matches the reference transcription on random sparse grids") {
  Rng rng(2024);
  for (int iter = 0; iter < 20000; ++iter) {
    const auto g = testing::random_grid(rng, rng.randint(1, 8), 6);
    REQUIRE(decode_grid(g) == testing::reference_decode(g));
  }
}

TEST_CASE("round trip on conflict-free disjoint-entity sets") {
  Rng rng(99);
  for (int iter = 0; iter < 3000; ++iter) {
    const auto c = testing::random_disjoint_case(rng);
    const auto enc = encode_tags(c.n, c.triples, static_cast<std::size_t>(c.relations));
    REQUIRE(enc.conflicts.empty());
    const TripleSet gold(c.triples.begin(), c.triples.end());
    REQUIRE(decode_all(enc.grids, c.n, static_cast<std::size_t>(c.relations)) == gold);
  }
}

TEST_CASE("conflict-free is not sufficient for a round trip when regions nest") {
  // The outer region's UL finds the inner region's BR first.
  const std::vector<RelationalTriple> nested{{{0, 5}, 0, {0, 5}}, {{1, 2}, 0, {1, 2}}};
  const auto enc = encode_tags(6, nested, 1);
  CHECK(enc.conflicts.empty());
  const TripleSet decoded = decode_all(enc.grids, 6, 1);
  CHECK(decoded != TripleSet(nested.begin(), nested.end()));
  CHECK(decoded.count({{0, 2}, 0, {0, 2}}) == 1);
}

TEST_CASE("deleting a BR never yields out-of-range spans") {
  Rng rng(3);
  for (int iter = 0; iter < 1000; ++iter) {
    const auto c = testing::random_disjoint_case(rng);
    const auto enc = encode_tags(c.n, c.triples, static_cast<std::size_t>(c.relations));
    for (const auto& g : enc.grids)
      for (const Cell& br : g.cells_with(Tag::BR)) {
        TagGrid damaged = g;
        damaged.set(br, Tag::None);
        for (const auto& t : decode_grid(damaged)) {
          CHECK(t.subject.valid_for(static_cast<std::size_t>(c.n)));
          CHECK(t.object.valid_for(static_cast<std::size_t>(c.n)));
        }
      }
  }
}

TEST_CASE("transposed grids decode to transposed triples") {
  Rng rng(17);
  for (int iter = 0; iter < 1000; ++iter) {
    const auto c = testing::random_disjoint_case(rng);
    const auto enc = encode_tags(c.n, c.triples, static_cast<std::size_t>(c.relations));
    for (const auto& g : enc.grids) {
      TripleSet swapped;
      for (const auto& t : decode_grid(g)) swapped.insert({t.object, t.relation, t.subject});
      CHECK(decode_grid(g.transposed()) == swapped);
    }
  }
}
