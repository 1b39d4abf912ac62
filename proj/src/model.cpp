#include "rtf/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rtf/ops.hpp"

namespace rtf {

namespace {

Tensor uniform_tensor(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<real>(rng.uniform(-bound, bound));
  return t;
}

std::string block_name(int block, const char* part) {
  return "block" + std::to_string(block) + "." + part;
}

int to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "' expects an integer, got '" + value + "'");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ModelConfig

void ModelConfig::validate() const {
  if (hidden < 4) throw std::invalid_argument("hidden size must be >= 4");
  if (bottleneck_width() < 1) throw std::invalid_argument("bottleneck width must be >= 1");
  if (blocks < 1) throw std::invalid_argument("conv block count must be >= 1");
  if (relations < 1) throw std::invalid_argument("relation count must be >= 1");
  if (max_length < 1) throw std::invalid_argument("max length must be >= 1");
  if (window < 0) throw std::invalid_argument("encoder window must be >= 0");
}

std::vector<std::pair<std::string, std::string>> ModelConfig::to_meta() const {
  return {{"vocab_size", std::to_string(vocab_size)},
          {"hidden", std::to_string(hidden)},
          {"bottleneck", std::to_string(bottleneck)},
          {"blocks", std::to_string(blocks)},
          {"relations", std::to_string(relations)},
          {"max_length", std::to_string(max_length)},
          {"window", std::to_string(window)}};
}

bool ModelConfig::set(const std::string& key, const std::string& value) {
  if (key == "vocab_size") vocab_size = to_int(key, value);
  else if (key == "hidden" || key == "d") hidden = to_int(key, value);
  else if (key == "bottleneck") bottleneck = to_int(key, value);
  else if (key == "blocks") blocks = to_int(key, value);
  else if (key == "relations") relations = to_int(key, value);
  else if (key == "max_length") max_length = to_int(key, value);
  else if (key == "window") window = to_int(key, value);
  else return false;
  return true;
}

ModelConfig ModelConfig::from_meta(const std::vector<std::pair<std::string, std::string>>& meta) {
  ModelConfig c;
  for (const auto& [k, v] : meta) c.set(k, v);
  return c;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() { add(kUnknown); }

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) {
  add(kUnknown);
  for (const auto& t : tokens) add(t);
}

void Vocabulary::add(const std::string& token) {
  if (index_.emplace(token, static_cast<int>(tokens_.size())).second) tokens_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<Sentence>& sentences) {
  Vocabulary v;
  for (const auto& s : sentences)
    for (const auto& t : s.tokens) v.add(t);
  return v;
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? 0 : it->second;
}

std::vector<int> Vocabulary::ids(const Sentence& sentence) const {
  std::vector<int> out;
  out.reserve(sentence.size());
  for (const auto& t : sentence.tokens) out.push_back(id(t));
  return out;
}

// ---------------------------------------------------------------------------
// Encoders

ExternalEmbeddings ExternalEmbeddings::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file " + path.string());
  ExternalEmbeddings emb;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string token, field;
    std::getline(ls, token, '\t');
    std::vector<real> v;
    while (std::getline(ls, field, '\t')) {
      try {
        v.push_back(static_cast<real>(std::stod(field)));
      } catch (const std::exception&) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + field + "'");
      }
    }
    if (v.empty()) throw DataError(path.string() + ":" + std::to_string(line_no) + ": no values");
    if (emb.dim == 0) emb.dim = static_cast<int>(v.size());
    if (static_cast<int>(v.size()) != emb.dim)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(emb.dim) + " values");
    emb.vectors[token] = std::move(v);
  }
  if (emb.dim == 0) throw DataError("embedding file " + path.string() + " is empty");
  return emb;
}

void WindowEncoder::init_params(ParamStore& params, const ModelConfig& config, Rng& rng) const {
  const std::size_t d = static_cast<std::size_t>(config.hidden);
  const std::size_t width = static_cast<std::size_t>(2 * config.window + 1) * d;
  params.add("encoder.embedding", uniform_tensor({vocab_.size(), d}, 1, rng));
  params.add("encoder.w1", uniform_tensor({width, d}, width, rng));
  params.add("encoder.b1", uniform_tensor({d}, width, rng));
  params.add("encoder.w2", uniform_tensor({d, d}, d, rng));
  params.add("encoder.b2", uniform_tensor({d}, d, rng));
}

Var WindowEncoder::encode(Tape& tape, const ParamStore& params, const Sentence& sentence,
                          const ModelConfig& config) const {
  const Var window = ops::embed_window(tape.parameter(params, "encoder.embedding"),
                                       vocab_.ids(sentence), config.window);
  const Var hidden = ops::relu(ops::linear(window, tape.parameter(params, "encoder.w1"),
                                           tape.parameter(params, "encoder.b1")));
  return ops::linear(hidden, tape.parameter(params, "encoder.w2"),
                     tape.parameter(params, "encoder.b2"));
}

ExternalEncoder::ExternalEncoder(ExternalEmbeddings embeddings, std::string source)
    : embeddings_(std::move(embeddings)), source_(std::move(source)) {}

void ExternalEncoder::init_params(ParamStore& params, const ModelConfig& config, Rng& rng) const {
  const std::size_t d = static_cast<std::size_t>(config.hidden);
  const std::size_t ext = static_cast<std::size_t>(embeddings_.dim);
  params.add("encoder.projection", uniform_tensor({ext, d}, ext, rng));
  params.add("encoder.projection_bias", uniform_tensor({d}, ext, rng));
}

Var ExternalEncoder::encode(Tape& tape, const ParamStore& params, const Sentence& sentence,
                            const ModelConfig&) const {
  const std::size_t ext = static_cast<std::size_t>(embeddings_.dim);
  Tensor x(Shape{sentence.size(), ext});
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    auto it = embeddings_.vectors.find(sentence.tokens[i]);
    if (it == embeddings_.vectors.end()) continue;
    std::copy(it->second.begin(), it->second.end(), x.data() + i * ext);
  }
  return ops::linear(tape.constant(std::move(x)), tape.parameter(params, "encoder.projection"),
                     tape.parameter(params, "encoder.projection_bias"));
}

std::vector<std::pair<std::string, std::string>> ExternalEncoder::meta() const {
  return {{"encoder", "external"}, {"external_embeddings", source_}};
}

// ---------------------------------------------------------------------------
// RtfModel

RtfModel::RtfModel(ModelConfig config, std::shared_ptr<const TokenEncoder> encoder)
    : config_(config), encoder_(std::move(encoder)) {
  if (!encoder_) throw std::invalid_argument("RtfModel needs a token encoder");
  config_.validate();
}

ParamStore RtfModel::init_params(std::uint64_t seed) const {
  Rng rng(seed);
  ParamStore p;
  const std::size_t d = static_cast<std::size_t>(config_.hidden);
  const std::size_t db = static_cast<std::size_t>(config_.bottleneck_width());
  const std::size_t r = static_cast<std::size_t>(config_.relations);

  encoder_->init_params(p, config_, rng);
  p.add("table.w", uniform_tensor({2 * d, d}, 2 * d, rng));
  p.add("table.b", uniform_tensor({d}, 2 * d, rng));
  for (int k = 0; k < config_.blocks; ++k) {
    p.add(block_name(k, "conv_in"), uniform_tensor({1, 1, d, db}, d, rng));
    p.add(block_name(k, "norm_in.gain"), Tensor({db}, 1));
    p.add(block_name(k, "norm_in.bias"), Tensor({db}, 0));
    p.add(block_name(k, "conv_mid"), uniform_tensor({3, 3, db, db}, 9 * db, rng));
    p.add(block_name(k, "norm_mid.gain"), Tensor({db}, 1));
    p.add(block_name(k, "norm_mid.bias"), Tensor({db}, 0));
    p.add(block_name(k, "conv_out"), uniform_tensor({1, 1, db, d}, db, rng));
    p.add(block_name(k, "norm_out.gain"), Tensor({d}, 1));
    p.add(block_name(k, "norm_out.bias"), Tensor({d}, 0));
  }
  p.add("score.shared.w", uniform_tensor({d, kNumTags}, d, rng));
  p.add("score.shared.b", uniform_tensor({kNumTags}, d, rng));
  // Per-relation residual classifiers, stored as [2d, R, 4] so that slice r
  // is relation r's W_r.
  p.add("score.relation.w", uniform_tensor({2 * d, r, kNumTags}, 2 * d, rng));
  p.add("score.relation.b", uniform_tensor({r, kNumTags}, 2 * d, rng));
  return p;
}

Var RtfModel::encode_tokens(Tape& tape, const ParamStore& params, const Sentence& sentence,
                            bool enforce_max_length) const {
  if (sentence.size() == 0) throw DataError("cannot encode an empty sentence");
  if (enforce_max_length && sentence.size() > static_cast<std::size_t>(config_.max_length))
    throw DataError("sentence of length " + std::to_string(sentence.size()) +
                    " exceeds max length " + std::to_string(config_.max_length));
  return encoder_->encode(tape, params, sentence, config_);
}

Var RtfModel::build_table(Tape& tape, const ParamStore& params, Var tokens) const {
  return ops::relu(ops::pair_affine(tokens, tape.parameter(params, "table.w"),
                                    tape.parameter(params, "table.b")));
}

Var RtfModel::conv_block(Tape& tape, const ParamStore& params, Var table, int k) const {
  auto stage = [&](Var x, const char* conv, const char* norm) {
    const std::string n = block_name(k, norm);
    const Var y = ops::conv2d(x, tape.parameter(params, block_name(k, conv)));
    return ops::relu(ops::layer_norm(y, tape.parameter(params, n + ".gain"),
                                     tape.parameter(params, n + ".bias")));
  };
  Var h = stage(table, "conv_in", "norm_in");
  h = stage(h, "conv_mid", "norm_mid");
  h = stage(h, "conv_out", "norm_out");
  return ops::add(h, table);
}

Var RtfModel::conv_blocks(Tape& tape, const ParamStore& params, Var table) const {
  for (int k = 0; k < config_.blocks; ++k) table = conv_block(tape, params, table, k);
  return table;
}

ScoreVars RtfModel::score_cells(Tape& tape, const ParamStore& params, Var region_table,
                                Var tokens) const {
  const Var shared = ops::linear(region_table, tape.parameter(params, "score.shared.w"),
                                 tape.parameter(params, "score.shared.b"));
  const Var residual = ops::pair_affine(tokens, tape.parameter(params, "score.relation.w"),
                                        tape.parameter(params, "score.relation.b"));
  return {shared, residual};
}

Var RtfModel::logits(Tape& tape, const ParamStore& params, const Sentence& sentence,
                     bool enforce_max_length) const {
  const Var tokens = encode_tokens(tape, params, sentence, enforce_max_length);
  const Var table = conv_blocks(tape, params, build_table(tape, params, tokens));
  const ScoreVars s = score_cells(tape, params, table, tokens);
  return ops::add_expand(s.shared, s.residual, 2);
}

Var RtfModel::loss(Tape& tape, const ParamStore& params, const Sentence& sentence,
                   const std::vector<TagGrid>& gold) const {
  const int n = static_cast<int>(sentence.size());
  const std::size_t r = static_cast<std::size_t>(config_.relations);
  if (gold.size() != r)
    throw DataError("expected " + std::to_string(r) + " gold grids, got " + std::to_string(gold.size()));
  std::vector<int> targets(static_cast<std::size_t>(n) * n * r);
  for (std::size_t rel = 0; rel < r; ++rel) {
    if (gold[rel].size() != n) throw DataError("gold grid size does not match sentence length");
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        targets[(static_cast<std::size_t>(i) * n + j) * r + rel] = static_cast<int>(gold[rel].at(i, j));
  }
  return ops::mean(ops::softmax_cross_entropy(logits(tape, params, sentence), targets));
}

std::vector<TagGrid> argmax_grids(const Tensor& logits) {
  if (logits.rank() != 4 || logits.dim(0) != logits.dim(1) || logits.dim(3) != kNumTags)
    throw std::invalid_argument("argmax_grids: expected [N,N,R,4], got " + shape_string(logits.shape()));
  const int n = static_cast<int>(logits.dim(0));
  const std::size_t r = logits.dim(2);
  std::vector<TagGrid> grids;
  for (std::size_t rel = 0; rel < r; ++rel) grids.emplace_back(static_cast<RelationId>(rel), n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (std::size_t rel = 0; rel < r; ++rel) {
        const real* z = logits.data() + ((static_cast<std::size_t>(i) * n + j) * r + rel) * kNumTags;
        int best = 0;
        for (int c = 1; c < kNumTags; ++c)
          if (z[c] > z[best]) best = c;
        grids[rel].set(i, j, static_cast<Tag>(best));
      }
  return grids;
}

std::vector<TagGrid> RtfModel::predict(const ParamStore& params, const Sentence& sentence) const {
  Tape tape;
  return argmax_grids(logits(tape, params, sentence, false).value());
}

ScoreGrids RtfModel::scores(const ParamStore& params, const Sentence& sentence) const {
  Tape tape;
  const Var tokens = encode_tokens(tape, params, sentence, false);
  const Var table = conv_blocks(tape, params, build_table(tape, params, tokens));
  const ScoreVars s = score_cells(tape, params, table, tokens);
  return {s.shared.value(), s.residual.value()};
}

}  // namespace rtf
