#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rtf/core.hpp"

namespace rtf {

enum class Tag : std::uint8_t { None = 0, UL = 1, BR = 2, SP = 3 };

inline constexpr int kNumTags = 4;

std::string_view tag_name(Tag tag);
std::optional<Tag> parse_tag(std::string_view name);

// Higher wins when two regions claim the same cell: SP > UL > BR.
int tag_priority(Tag tag);

// N x N table of tags for one relation, row-major, rows = subject tokens.
class TagGrid {
 public:
  TagGrid() = default;
  TagGrid(RelationId relation, int n)
      : relation_(relation), n_(n), cells_(static_cast<std::size_t>(n) * n, Tag::None) {}

  RelationId relation() const { return relation_; }
  int size() const { return n_; }
  Tag at(int row, int col) const { return cells_[index(row, col)]; }
  Tag at(Cell c) const { return at(c.row, c.col); }
  void set(int row, int col, Tag tag) { cells_[index(row, col)] = tag; }
  void set(Cell c, Tag tag) { set(c.row, c.col, tag); }

  std::vector<Cell> cells_with(Tag tag) const;
  std::size_t count(Tag tag) const;

  // Swap subject and object axes; tags are kept as-is.
  TagGrid transposed() const;

  bool operator==(const TagGrid&) const = default;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * n_ + col;
  }

  RelationId relation_ = 0;
  int n_ = 0;
  std::vector<Tag> cells_;
};

struct TagConflict {
  RelationId relation = 0;
  Cell cell;
  std::set<Tag> competing;
};

struct EncodedTags {
  std::vector<TagGrid> grids;  // one per relation, indexed by relation id
  std::vector<TagConflict> conflicts;
};

// Builds one grid per relation from the gold triples. Duplicate triples are
// collapsed first. Throws DataError for invalid spans or relation ids.
EncodedTags encode_tags(const Sentence& sentence,
                        const std::vector<RelationalTriple>& triples,
                        const RelationInventory& inventory);

// Same as encode_tags but only needs the sentence length.
EncodedTags encode_tags(int n, const std::vector<RelationalTriple>& triples,
                        std::size_t relation_count);

// Grid dump: one "relation<TAB>row<TAB>col<TAB>tag" line per non-None cell,
// ordered by (relation name, row, col). Multi-sentence dumps prefix each
// sentence with "#sentence<TAB>id<TAB>N".
void write_grid_cells(std::ostream& out, const std::vector<TagGrid>& grids,
                      const RelationInventory& inventory);

struct GridDumpEntry {
  std::size_t id = 0;
  int n = 0;
  std::vector<TagGrid> grids;
};

void write_grid_dump(std::ostream& out, const std::vector<GridDumpEntry>& entries,
                     const RelationInventory& inventory);

// Throws DataError (with line number) on malformed lines or unknown relations.
std::vector<GridDumpEntry> read_grid_dump(std::istream& in,
                                          const RelationInventory& inventory);

}  // namespace rtf
