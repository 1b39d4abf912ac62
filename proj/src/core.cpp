#include "rtf/core.hpp"

#include <sstream>

namespace rtf {

Sentence Sentence::from_text(const std::string& text) {
  Sentence s;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) s.tokens.push_back(tok);
  if (s.tokens.empty()) throw DataError("empty sentence text");
  return s;
}

std::string Sentence::text() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

bool spans_overlap(const Span& a, const Span& b) {
  return a.start <= b.end && b.start <= a.end;
}

EntityPairRegion region_of(const RelationalTriple& t) {
  return {{t.subject.start, t.object.start}, {t.subject.end, t.object.end}};
}

RelationalTriple triple_of(const EntityPairRegion& region, RelationId relation) {
  return {region.subject(), relation, region.object()};
}

RelationInventory::RelationInventory(std::vector<std::string> names)
    : names_(std::move(names)) {
  if (names_.empty()) throw DataError("relation inventory is empty");
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) throw DataError("empty relation name");
    if (!index_.emplace(names_[i], static_cast<RelationId>(i)).second)
      throw DataError("duplicate relation name: " + names_[i]);
  }
}

const std::string& RelationInventory::name(RelationId id) const {
  if (!contains(id))
    throw DataError("relation id out of range: " + std::to_string(id));
  return names_[static_cast<std::size_t>(id)];
}

std::optional<RelationId> RelationInventory::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void validate_triples(const Sentence& sentence,
                      const std::vector<RelationalTriple>& triples,
                      const RelationInventory& inventory) {
  const std::size_t n = sentence.size();
  for (const auto& t : triples) {
    if (!t.subject.valid_for(n) || !t.object.valid_for(n))
      throw DataError("span out of range for sentence of length " +
                      std::to_string(n) + ": " + to_string(t));
    if (!inventory.contains(t.relation))
      throw DataError("unknown relation id in " + to_string(t));
  }
}

std::string to_string(const Span& span) {
  return "(" + std::to_string(span.start) + "," + std::to_string(span.end) + ")";
}

std::string to_string(const RelationalTriple& t) {
  return "<" + to_string(t.subject) + " r" + std::to_string(t.relation) + " " +
         to_string(t.object) + ">";
}

}  // namespace rtf
