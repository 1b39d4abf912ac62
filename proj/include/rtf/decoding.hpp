#pragma once

#include <optional>
#include <set>
#include <span>
#include <vector>

#include "rtf/core.hpp"
#include "rtf/tagging.hpp"

namespace rtf {

using TripleSet = std::set<RelationalTriple>;

enum class Direction { BottomRight, UpperLeft };

// Nearest candidate (Euclidean) lying weakly in `direction` from `anchor`
// (the anchor's own row/column included). Ties go to the smaller row, then
// the smaller column.
std::optional<Cell> nearest_match(Cell anchor, std::span<const Cell> candidates,
                                  Direction direction);

// Bi-directional decoding of one relation table:
//   SP cells become single-token pairs;
//   each UL pairs with its nearest BR to the bottom-right, else nearest SP;
//   each BR pairs with its nearest UL to the upper-left, else nearest SP.
// Unmatched corners are dropped.
TripleSet decode_grid(const TagGrid& grid);

// Union over all relation tables. Throws DataError if the number of grids
// differs from `relation_count` or a grid is not n x n.
TripleSet decode_all(std::span<const TagGrid> grids, int n, std::size_t relation_count);

}  // namespace rtf
