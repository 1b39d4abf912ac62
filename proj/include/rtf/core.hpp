#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtf {

using RelationId = int;

// Raised for malformed input data (bad spans, unknown relations, parse errors).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a numeric computation produces NaN/Inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Sentence {
  std::vector<std::string> tokens;

  std::size_t size() const { return tokens.size(); }

  // Whitespace tokenization. Throws DataError on empty text.
  static Sentence from_text(const std::string& text);
  std::string text() const;
};

// Inclusive token interval [start, end].
struct Span {
  int start = 0;
  int end = 0;

  int length() const { return end - start + 1; }
  bool valid_for(std::size_t n) const {
    return start >= 0 && start <= end && static_cast<std::size_t>(end) < n;
  }
  auto operator<=>(const Span&) const = default;
};

bool spans_overlap(const Span& a, const Span& b);

struct RelationalTriple {
  Span subject;
  RelationId relation = 0;
  Span object;

  auto operator<=>(const RelationalTriple&) const = default;
};

struct Cell {
  int row = 0;
  int col = 0;

  auto operator<=>(const Cell&) const = default;
};

// Rectangle on a relation table: rows index the subject, columns the object.
struct EntityPairRegion {
  Cell ul;
  Cell br;

  bool is_point() const { return ul == br; }
  Span subject() const { return {ul.row, br.row}; }
  Span object() const { return {ul.col, br.col}; }
  auto operator<=>(const EntityPairRegion&) const = default;
};

EntityPairRegion region_of(const RelationalTriple& triple);
RelationalTriple triple_of(const EntityPairRegion& region, RelationId relation);

class RelationInventory {
 public:
  RelationInventory() = default;
  // Throws DataError on duplicates or an empty list.
  explicit RelationInventory(std::vector<std::string> names);

  std::size_t size() const { return names_.size(); }
  const std::string& name(RelationId id) const;
  std::optional<RelationId> find(const std::string& name) const;
  bool contains(RelationId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < names_.size();
  }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::map<std::string, RelationId> index_;
};

// One annotated sentence.
struct Example {
  Sentence sentence;
  std::vector<RelationalTriple> triples;
};

// Throws DataError if any span is out of range or a relation id is unknown.
void validate_triples(const Sentence& sentence,
                      const std::vector<RelationalTriple>& triples,
                      const RelationInventory& inventory);

std::string to_string(const Span& span);
std::string to_string(const RelationalTriple& triple);

}  // namespace rtf
