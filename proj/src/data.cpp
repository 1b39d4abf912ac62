#include "rtf/data.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rtf/random.hpp"

namespace rtf {

namespace {

using json = nlohmann::json;

std::string get_string(const json& obj, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    auto it = obj.find(k);
    if (it != obj.end()) {
      if (!it->is_string()) throw DataError(std::string("field '") + k + "' is not a string");
      return it->get<std::string>();
    }
  }
  std::string names;
  for (const char* k : keys) names += (names.empty() ? "" : " or ") + std::string("'") + k + "'";
  throw DataError("missing field " + names);
}

RawTriple triple_from_array(const json& t) {
  if (!t.is_array() || t.size() != 3 || !t[0].is_string() || !t[1].is_string() || !t[2].is_string())
    throw DataError("triple is not a [subject, relation, object] string array");
  return {t[0].get<std::string>(), t[1].get<std::string>(), t[2].get<std::string>()};
}

RawExample parse_record(const json& rec) {
  if (!rec.is_object()) throw DataError("record is not a JSON object");
  RawExample ex;
  ex.text = get_string(rec, {"text", "sentText"});
  auto list = [&](const char* key) -> const json* {
    auto it = rec.find(key);
    if (it == rec.end()) return nullptr;
    if (!it->is_array()) throw DataError(std::string("field '") + key + "' is not an array");
    return &*it;
  };
  if (const json* l = list("triple_list")) {
    for (const auto& t : *l) ex.triples.push_back(triple_from_array(t));
  } else if (const json* l = list("spo_list")) {
    for (const auto& t : *l) ex.triples.push_back(triple_from_array(t));
  } else if (const json* l = list("relation_list")) {
    for (const auto& t : *l) {
      if (!t.is_object()) throw DataError("relation_list entry is not an object");
      ex.triples.push_back({get_string(t, {"subject"}), get_string(t, {"predicate"}), get_string(t, {"object"})});
    }
  } else if (const json* l = list("relationMentions")) {
    for (const auto& t : *l) {
      if (!t.is_object()) throw DataError("relationMentions entry is not an object");
      ex.triples.push_back({get_string(t, {"em1Text"}), get_string(t, {"label"}), get_string(t, {"em2Text"})});
    }
  } else {
    throw DataError("record has none of triple_list, spo_list, relation_list, relationMentions");
  }
  return ex;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string join(const std::vector<std::string>& tokens, Span s) {
  std::string out;
  for (int i = s.start; i <= s.end; ++i) {
    if (i > s.start) out += ' ';
    out += tokens[static_cast<std::size_t>(i)];
  }
  return out;
}

int to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw DataError("synthetic spec key '" + key + "' expects an integer, got '" + value + "'");
  }
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw DataError("synthetic spec key '" + key + "' expects a number, got '" + value + "'");
  }
}

}  // namespace

CorpusFormat parse_corpus_format(const std::string& name) {
  if (name == "json-lines") return CorpusFormat::JsonLines;
  if (name == "json-array") return CorpusFormat::JsonArray;
  throw DataError("unknown format '" + name + "' (expected json-lines or json-array)");
}

Variant parse_variant(const std::string& name) {
  if (name == "exact") return Variant::Exact;
  if (name == "partial") return Variant::Partial;
  throw DataError("unknown variant '" + name + "' (expected exact or partial)");
}

const char* variant_name(Variant v) { return v == Variant::Partial ? "partial" : "exact"; }

std::vector<RawExample> read_raw_examples(std::istream& in, CorpusFormat format) {
  std::vector<RawExample> out;
  if (format == CorpusFormat::JsonLines) {
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        out.push_back(parse_record(json::parse(line)));
      } catch (const json::exception& e) {
        throw DataError("line " + std::to_string(lineno) + ": " + e.what());
      } catch (const DataError& e) {
        throw DataError("line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    return out;
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(std::string("json array: ") + e.what());
  }
  if (!doc.is_array()) throw DataError("json array: top-level value is not an array");
  for (std::size_t i = 0; i < doc.size(); ++i) {
    try {
      out.push_back(parse_record(doc[i]));
    } catch (const DataError& e) {
      throw DataError("record " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

std::optional<Span> locate_span(std::span<const std::string> tokens, std::span<const std::string> entity) {
  if (entity.empty() || entity.size() > tokens.size()) return std::nullopt;
  const auto it = std::search(tokens.begin(), tokens.end(), entity.begin(), entity.end());
  if (it == tokens.end()) return std::nullopt;
  const int start = static_cast<int>(it - tokens.begin());
  return Span{start, start + static_cast<int>(entity.size()) - 1};
}

RelationInventory read_relation_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open relation file " + path.string());
  std::vector<std::string> names;
  for (std::string line; std::getline(in, line);) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    names.push_back(line.substr(b, e - b + 1));
  }
  return RelationInventory(std::move(names));
}

RelationInventory infer_relations(std::span<const RawExample> raw) {
  std::set<std::string> names;
  for (const auto& ex : raw)
    for (const auto& t : ex.triples) names.insert(t.relation);
  if (names.empty()) return RelationInventory();
  return RelationInventory(std::vector<std::string>(names.begin(), names.end()));
}

Corpus build_corpus(std::span<const RawExample> raw, const RelationInventory& inventory, Variant variant,
                    std::string source) {
  Corpus c;
  c.inventory = inventory;
  c.variant = variant;
  c.source = std::move(source);
  for (const auto& r : raw) {
    ++c.counters.records;
    Example ex;
    ex.sentence.tokens = split_ws(r.text);
    if (ex.sentence.tokens.empty()) {
      ++c.counters.skipped_unlocatable;
      continue;
    }
    const std::span<const std::string> tokens(ex.sentence.tokens);
    bool ok = true;
    auto locate = [&](const std::string& text) -> std::optional<Span> {
      const auto words = split_ws(text);
      auto s = locate_span(tokens, words);
      if (!s) return s;
      const auto rest = tokens.subspan(static_cast<std::size_t>(s->start) + 1);
      if (locate_span(rest, words)) ++c.counters.ambiguous_mentions;
      if (variant == Variant::Partial) s = Span{s->end, s->end};
      return s;
    };
    for (const auto& t : r.triples) {
      const auto rel = inventory.find(t.relation);
      if (!rel) {
        ++c.counters.skipped_unknown_relation;
        ok = false;
        break;
      }
      const auto subj = locate(t.subject);
      const auto obj = locate(t.object);
      if (!subj || !obj) {
        ++c.counters.skipped_unlocatable;
        ok = false;
        break;
      }
      ex.triples.push_back({*subj, *rel, *obj});
    }
    if (!ok) continue;
    ++c.counters.kept;
    c.examples.push_back(std::move(ex));
  }
  return c;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format, Variant variant,
                   const std::optional<RelationInventory>& inventory) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus " + path.string());
  const auto raw = read_raw_examples(in, format);
  return build_corpus(raw, inventory ? *inventory : infer_relations(raw), variant, path.string());
}

void report_counters(std::ostream& out, const Corpus& c) {
  const auto& k = c.counters;
  const std::string where = c.source.empty() ? "" : c.source + ": ";
  if (k.records == 0) out << "warning: " << where << "no examples\n";
  if (k.skipped_unlocatable)
    out << "warning: " << where << "skipped " << k.skipped_unlocatable << " records with unlocatable entities\n";
  if (k.skipped_unknown_relation)
    out << "warning: " << where << "skipped " << k.skipped_unknown_relation << " records with unknown relations\n";
  if (k.ambiguous_mentions)
    out << "warning: " << where << k.ambiguous_mentions
        << " entity strings occur more than once; the first occurrence was used\n";
}

void write_corpus_json_lines(std::ostream& out, const Corpus& c) {
  for (const auto& ex : c.examples) {
    json triples = json::array();
    for (const auto& t : ex.triples)
      triples.push_back({join(ex.sentence.tokens, t.subject), c.inventory.name(t.relation),
                         join(ex.sentence.tokens, t.object)});
    json rec;
    rec["text"] = ex.sentence.text();
    rec["triple_list"] = std::move(triples);
    out << rec.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Synthetic corpora

bool SyntheticSpec::set(const std::string& key, const std::string& value) {
  if (key == "vocab_size") vocab_size = to_int(key, value);
  else if (key == "relations") relations = to_int(key, value);
  else if (key == "min_length") min_length = to_int(key, value);
  else if (key == "max_length") max_length = to_int(key, value);
  else if (key == "min_triples") min_triples = to_int(key, value);
  else if (key == "max_triples") max_triples = to_int(key, value);
  else if (key == "max_entity_length") max_entity_length = to_int(key, value);
  else if (key == "count") count = to_int(key, value);
  else if (key == "seed") seed = static_cast<std::uint64_t>(to_int(key, value));
  else if (key == "mix.normal") mix[0] = to_double(key, value);
  else if (key == "mix.seo") mix[1] = to_double(key, value);
  else if (key == "mix.epo") mix[2] = to_double(key, value);
  else if (key == "mix.hto") mix[3] = to_double(key, value);
  else return false;
  return true;
}

SyntheticSpec read_synthetic_spec(std::istream& in) {
  SyntheticSpec spec;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("line " + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    if (!spec.set(key, trim(line.substr(eq + 1))))
      throw DataError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  return spec;
}

namespace {

enum Kind { kNormal = 0, kSeo = 1, kEpo = 2, kHto = 3 };

// Inclusive triple-count range a sentence kind can realize under the generator settings.
std::pair<int, int> triple_range(int kind, const SyntheticSpec& s) {
  switch (kind) {
    case kNormal: return {std::max(1, s.min_triples), std::min(1, s.max_triples)};
    case kSeo: return {std::max(2, s.min_triples), s.max_triples};
    case kEpo: return {std::max(2, s.min_triples), s.relations >= 2 ? s.max_triples : 0};
    default: return {std::max(1, s.min_triples), s.max_triples};
  }
}

// Entities a sentence of `kind` with `triples` triples contains.
int entity_count(int kind, int triples) {
  switch (kind) {
    case kNormal: return 2;
    case kSeo: return triples + 1;
    case kEpo: return triples;  // subject, B object, triples - 2 A objects
    default: return triples;
  }
}

struct WordClasses {
  std::vector<std::string> fillers;
  std::vector<std::vector<std::string>> subject, a, b, h;  // subject has one class
};

WordClasses make_classes(const SyntheticSpec& s) {
  const int classes = 1 + 3 * s.relations;
  const int per_class = std::max(2, (s.vocab_size * 2 / 3) / classes);
  WordClasses w;
  int next = 0;
  auto take = [&](int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back("e" + std::to_string(next++));
    return out;
  };
  w.subject.push_back(take(per_class));
  for (int r = 0; r < s.relations; ++r) w.a.push_back(take(per_class));
  for (int r = 0; r < s.relations; ++r) w.b.push_back(take(per_class));
  for (int r = 0; r < s.relations; ++r) w.h.push_back(take(per_class));
  for (int i = 0; i < s.vocab_size - next; ++i) w.fillers.push_back("f" + std::to_string(i));
  return w;
}

struct PlannedEntity {
  const std::vector<std::string>* words;
  int length;
  char role;     // 'S', 'A', 'B', 'H'
  int relation;  // for A, B, H
};

}  // namespace

void SyntheticSpec::validate() const {
  if (vocab_size < 1 || relations < 1 || count < 0) throw DataError("synthetic spec: sizes must be positive");
  if (min_length < 2 || max_length < min_length) throw DataError("synthetic spec: need 2 <= min_length <= max_length");
  if (min_triples < 1 || max_triples < min_triples)
    throw DataError("synthetic spec: need 1 <= min_triples <= max_triples");
  if (max_entity_length < 1) throw DataError("synthetic spec: max_entity_length must be >= 1");
  double total = 0;
  for (double m : mix) {
    if (!(m >= 0)) throw DataError("synthetic spec: mix weights must be >= 0");
    total += m;
  }
  if (!(total > 0)) throw DataError("synthetic spec: mix weights sum to zero");
  const int classes = 1 + 3 * relations;
  if (vocab_size < 2 * classes + 2)
    throw DataError("synthetic spec: vocab_size " + std::to_string(vocab_size) + " too small for " +
                    std::to_string(relations) + " relations (need " + std::to_string(2 * classes + 2) + ")");
  static const char* names[] = {"normal", "seo", "epo", "hto"};
  for (int k = 0; k < 4; ++k) {
    if (mix[static_cast<std::size_t>(k)] == 0) continue;
    const auto [lo, hi] = triple_range(k, *this);
    if (lo > hi)
      throw DataError(std::string("synthetic spec: infeasible: mix.") + names[k] +
                      " > 0 but no triple count in range fits that kind");
    const int entities = entity_count(k, lo);
    if (2 * entities - 1 > max_length)
      throw DataError(std::string("synthetic spec: infeasible: mix.") + names[k] + " needs at least " +
                      std::to_string(2 * entities - 1) + " tokens");
  }
}

Corpus generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const WordClasses words = make_classes(spec);
  std::vector<std::string> names;
  for (int r = 0; r < spec.relations; ++r) names.push_back("rel" + std::to_string(r));

  Corpus corpus;
  corpus.inventory = RelationInventory(names);
  corpus.source = "synthetic";
  Rng rng(spec.seed);
  const std::vector<double> weights(spec.mix.begin(), spec.mix.end());

  for (int n = 0; n < spec.count; ++n) {
    const int kind = static_cast<int>(rng.weighted(weights));
    const auto [lo, hi] = triple_range(kind, spec);
    const int t = rng.randint(lo, hi);

    std::vector<PlannedEntity> plan;
    auto rel = [&] { return rng.randint(0, spec.relations - 1); };
    auto add = [&](const std::vector<std::string>& cls, char role, int r) {
      plan.push_back({&cls, 1, role, r});
    };
    switch (kind) {
      case kNormal: {
        add(words.subject[0], 'S', 0);
        const int r = rel();
        add(words.a[static_cast<std::size_t>(r)], 'A', r);
        break;
      }
      case kSeo: {
        add(words.subject[0], 'S', 0);
        for (int i = 0; i < t; ++i) {
          const int r = rel();
          add(words.a[static_cast<std::size_t>(r)], 'A', r);
        }
        break;
      }
      case kEpo: {
        add(words.subject[0], 'S', 0);
        const int r = rel();
        add(words.b[static_cast<std::size_t>(r)], 'B', r);
        for (int i = 2; i < t; ++i) {
          const int ra = rel();
          add(words.a[static_cast<std::size_t>(ra)], 'A', ra);
        }
        break;
      }
      default:
        for (int i = 0; i < t; ++i) {
          const int r = rel();
          add(words.h[static_cast<std::size_t>(r)], 'H', r);
        }
    }

    // Entity lengths, then words drawn without replacement per class.
    const int e = static_cast<int>(plan.size());
    for (int attempt = 0;; ++attempt) {
      int need = e - 1;
      for (auto& p : plan) {
        p.length = attempt < 50 ? rng.randint(1, spec.max_entity_length) : 1;
        need += p.length;
      }
      std::map<const std::vector<std::string>*, int> used;
      for (const auto& p : plan) used[p.words] += p.length;
      bool fits = need <= spec.max_length;
      for (const auto& [cls, k] : used) fits = fits && k <= static_cast<int>(cls->size());
      if (fits) break;
      if (attempt >= 50) throw DataError("synthetic spec: infeasible: entities do not fit in a sentence");
    }
    int entity_tokens = 0;
    for (const auto& p : plan) entity_tokens += p.length;
    const int length = rng.randint(std::max(spec.min_length, entity_tokens + e - 1), spec.max_length);

    std::map<const std::vector<std::string>*, std::vector<std::string>> pools;
    for (const auto& p : plan)
      if (!pools.count(p.words)) {
        auto pool = *p.words;
        rng.shuffle(pool);
        pools[p.words] = std::move(pool);
      }
    std::vector<std::vector<std::string>> surface;
    for (const auto& p : plan) {
      auto& pool = pools[p.words];
      surface.emplace_back(pool.end() - p.length, pool.end());
      pool.resize(pool.size() - static_cast<std::size_t>(p.length));
    }

    // Random entity order; gaps between entities hold at least one filler.
    std::vector<std::size_t> order(plan.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<int> gaps(plan.size() + 1, 0);
    for (std::size_t g = 1; g + 1 < gaps.size(); ++g) gaps[g] = 1;
    for (int extra = length - entity_tokens - (e - 1); extra > 0; --extra)
      ++gaps[static_cast<std::size_t>(rng.randint(0, e))];

    Example ex;
    std::vector<Span> spans(plan.size());
    auto filler = [&] { return words.fillers[static_cast<std::size_t>(rng.randint(0, static_cast<int>(words.fillers.size()) - 1))]; };
    for (std::size_t k = 0; k <= order.size(); ++k) {
      for (int g = 0; g < gaps[k]; ++g) ex.sentence.tokens.push_back(filler());
      if (k == order.size()) break;
      const std::size_t idx = order[k];
      const int start = static_cast<int>(ex.sentence.tokens.size());
      for (const auto& w : surface[idx]) ex.sentence.tokens.push_back(w);
      spans[idx] = {start, start + plan[idx].length - 1};
    }

    for (std::size_t i = 0; i < plan.size(); ++i) {
      const auto& p = plan[i];
      if (p.role == 'H') ex.triples.push_back({spans[i], p.relation, spans[i]});
      if (p.role == 'A') ex.triples.push_back({spans[0], p.relation, spans[i]});
      if (p.role == 'B') {
        ex.triples.push_back({spans[0], p.relation, spans[i]});
        ex.triples.push_back({spans[0], (p.relation + 1) % spec.relations, spans[i]});
      }
    }
    std::sort(ex.triples.begin(), ex.triples.end());
    ex.triples.erase(std::unique(ex.triples.begin(), ex.triples.end()), ex.triples.end());
    corpus.examples.push_back(std::move(ex));
  }
  corpus.counters.records = corpus.counters.kept = corpus.examples.size();
  return corpus;
}

}  // namespace rtf
