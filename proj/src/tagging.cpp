#include "rtf/tagging.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

namespace rtf {

std::string_view tag_name(Tag tag) {
  switch (tag) {
    case Tag::None: return "None";
    case Tag::UL: return "UL";
    case Tag::BR: return "BR";
    case Tag::SP: return "SP";
  }
  return "None";
}

std::optional<Tag> parse_tag(std::string_view name) {
  if (name == "None") return Tag::None;
  if (name == "UL") return Tag::UL;
  if (name == "BR") return Tag::BR;
  if (name == "SP") return Tag::SP;
  return std::nullopt;
}

int tag_priority(Tag tag) {
  switch (tag) {
    case Tag::SP: return 3;
    case Tag::UL: return 2;
    case Tag::BR: return 1;
    case Tag::None: return 0;
  }
  return 0;
}

std::vector<Cell> TagGrid::cells_with(Tag tag) const {
  std::vector<Cell> out;
  for (int r = 0; r < n_; ++r)
    for (int c = 0; c < n_; ++c)
      if (at(r, c) == tag) out.push_back({r, c});
  return out;
}

std::size_t TagGrid::count(Tag tag) const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), tag));
}

TagGrid TagGrid::transposed() const {
  TagGrid t(relation_, n_);
  for (int r = 0; r < n_; ++r)
    for (int c = 0; c < n_; ++c) t.set(c, r, at(r, c));
  return t;
}

EncodedTags encode_tags(int n, const std::vector<RelationalTriple>& triples,
                        std::size_t relation_count) {
  std::set<RelationalTriple> unique(triples.begin(), triples.end());

  // Every tag each cell is asked to hold, per relation.
  std::map<std::pair<RelationId, Cell>, std::set<Tag>> demands;
  for (const auto& t : unique) {
    const EntityPairRegion region = region_of(t);
    if (region.is_point()) {
      demands[{t.relation, region.ul}].insert(Tag::SP);
    } else {
      demands[{t.relation, region.ul}].insert(Tag::UL);
      demands[{t.relation, region.br}].insert(Tag::BR);
    }
  }

  EncodedTags out;
  out.grids.reserve(relation_count);
  for (std::size_t r = 0; r < relation_count; ++r)
    out.grids.emplace_back(static_cast<RelationId>(r), n);

  for (const auto& [key, tags] : demands) {
    const Tag winner = *std::max_element(tags.begin(), tags.end(), [](Tag a, Tag b) {
      return tag_priority(a) < tag_priority(b);
    });
    out.grids[static_cast<std::size_t>(key.first)].set(key.second, winner);
    if (tags.size() >= 2) out.conflicts.push_back({key.first, key.second, tags});
  }
  return out;
}

EncodedTags encode_tags(const Sentence& sentence,
                        const std::vector<RelationalTriple>& triples,
                        const RelationInventory& inventory) {
  validate_triples(sentence, triples, inventory);
  return encode_tags(static_cast<int>(sentence.size()), triples, inventory.size());
}

void write_grid_cells(std::ostream& out, const std::vector<TagGrid>& grids,
                      const RelationInventory& inventory) {
  std::vector<std::tuple<std::string, int, int, Tag>> rows;
  for (const auto& grid : grids) {
    const std::string& name = inventory.name(grid.relation());
    for (int r = 0; r < grid.size(); ++r)
      for (int c = 0; c < grid.size(); ++c)
        if (grid.at(r, c) != Tag::None) rows.emplace_back(name, r, c, grid.at(r, c));
  }
  std::sort(rows.begin(), rows.end());
  for (const auto& [name, r, c, tag] : rows)
    out << name << '\t' << r << '\t' << c << '\t' << tag_name(tag) << '\n';
}

void write_grid_dump(std::ostream& out, const std::vector<GridDumpEntry>& entries,
                     const RelationInventory& inventory) {
  for (const auto& e : entries) {
    out << "#sentence\t" << e.id << '\t' << e.n << '\n';
    write_grid_cells(out, e.grids, inventory);
  }
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, '\t')) fields.push_back(field);
  return fields;
}

int parse_int(const std::string& s, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("line " + std::to_string(line_no) + ": not an integer: '" + s + "'");
  }
}

}  // namespace

std::vector<GridDumpEntry> read_grid_dump(std::istream& in,
                                          const RelationInventory& inventory) {
  std::vector<GridDumpEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields[0] == "#sentence") {
      if (fields.size() != 3)
        throw DataError("line " + std::to_string(line_no) + ": bad sentence header");
      GridDumpEntry e;
      e.id = static_cast<std::size_t>(parse_int(fields[1], line_no));
      e.n = parse_int(fields[2], line_no);
      if (e.n < 1)
        throw DataError("line " + std::to_string(line_no) + ": sentence length < 1");
      for (std::size_t r = 0; r < inventory.size(); ++r)
        e.grids.emplace_back(static_cast<RelationId>(r), e.n);
      entries.push_back(std::move(e));
      continue;
    }
    if (fields.size() != 4)
      throw DataError("line " + std::to_string(line_no) + ": expected 4 tab-separated fields");
    if (entries.empty())
      throw DataError("line " + std::to_string(line_no) + ": cell before any #sentence header");
    auto rel = inventory.find(fields[0]);
    if (!rel)
      throw DataError("line " + std::to_string(line_no) + ": unknown relation '" + fields[0] + "'");
    const int row = parse_int(fields[1], line_no);
    const int col = parse_int(fields[2], line_no);
    auto tag = parse_tag(fields[3]);
    if (!tag) throw DataError("line " + std::to_string(line_no) + ": unknown tag '" + fields[3] + "'");
    auto& e = entries.back();
    if (row < 0 || col < 0 || row >= e.n || col >= e.n)
      throw DataError("line " + std::to_string(line_no) + ": cell outside " +
                      std::to_string(e.n) + "x" + std::to_string(e.n) + " table");
    e.grids[static_cast<std::size_t>(*rel)].set(row, col, *tag);
  }
  return entries;
}

}  // namespace rtf
