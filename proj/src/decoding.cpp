#include "rtf/decoding.hpp"

#include <string>

namespace rtf {

namespace {

bool in_direction(Cell anchor, Cell c, Direction d) {
  if (d == Direction::BottomRight) return c.row >= anchor.row && c.col >= anchor.col;
  return c.row <= anchor.row && c.col <= anchor.col;
}

long squared_distance(Cell a, Cell b) {
  const long dr = a.row - b.row;
  const long dc = a.col - b.col;
  return dr * dr + dc * dc;
}

}  // namespace

std::optional<Cell> nearest_match(Cell anchor, std::span<const Cell> candidates,
                                  Direction direction) {
  std::optional<Cell> best;
  long best_dist = 0;
  for (const Cell& c : candidates) {
    if (!in_direction(anchor, c, direction)) continue;
    const long dist = squared_distance(anchor, c);
    if (!best || dist < best_dist || (dist == best_dist && c < *best)) {
      best = c;
      best_dist = dist;
    }
  }
  return best;
}

TripleSet decode_grid(const TagGrid& grid) {
  const auto sp = grid.cells_with(Tag::SP);
  const auto ul = grid.cells_with(Tag::UL);
  const auto br = grid.cells_with(Tag::BR);
  const RelationId rel = grid.relation();

  TripleSet out;
  for (const Cell& p : sp) out.insert(triple_of({p, p}, rel));

  for (const Cell& a : ul) {
    auto match = nearest_match(a, br, Direction::BottomRight);
    if (!match) match = nearest_match(a, sp, Direction::BottomRight);
    if (match) out.insert(triple_of({a, *match}, rel));
  }
  for (const Cell& b : br) {
    auto match = nearest_match(b, ul, Direction::UpperLeft);
    if (!match) match = nearest_match(b, sp, Direction::UpperLeft);
    if (match) out.insert(triple_of({*match, b}, rel));
  }
  return out;
}

TripleSet decode_all(std::span<const TagGrid> grids, int n, std::size_t relation_count) {
  if (grids.size() != relation_count)
    throw DataError("expected " + std::to_string(relation_count) + " relation grids, got " +
                    std::to_string(grids.size()));
  TripleSet out;
  for (const auto& g : grids) {
    if (g.size() != n)
      throw DataError("grid size " + std::to_string(g.size()) + " does not match sentence length " +
                      std::to_string(n));
    out.merge(decode_grid(g));
  }
  return out;
}

}  // namespace rtf
