#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "rtf/autodiff.hpp"
#include "rtf/core.hpp"
#include "rtf/params.hpp"
#include "rtf/random.hpp"
#include "rtf/tagging.hpp"

namespace rtf {

struct ModelConfig {
  int vocab_size = 0;   // filled from the vocabulary when left at 0
  int hidden = 32;      // d
  int bottleneck = 0;   // d_b; 0 means hidden / 2
  int blocks = 1;       // K
  int relations = 1;    // |R|
  int max_length = 100;
  int window = 1;       // encoder window radius w

  int bottleneck_width() const { return bottleneck > 0 ? bottleneck : hidden / 2; }

  // Throws std::invalid_argument when an invariant is violated.
  void validate() const;

  std::vector<std::pair<std::string, std::string>> to_meta() const;
  // Reads keys written by to_meta; unknown keys are ignored.
  static ModelConfig from_meta(const std::vector<std::pair<std::string, std::string>>& meta);
  // Applies one key=value override. Returns false for unknown keys.
  bool set(const std::string& key, const std::string& value);
};

// Token strings to embedding rows. Id 0 is reserved for unknown tokens.
class Vocabulary {
 public:
  static constexpr const char* kUnknown = "<unk>";

  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& tokens);

  // Adds tokens in first-seen order.
  static Vocabulary build(const std::vector<Sentence>& sentences);

  int id(const std::string& token) const;
  std::vector<int> ids(const Sentence& sentence) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  void add(const std::string& token);

  std::vector<std::string> tokens_;
  std::map<std::string, int> index_;
};

// Fixed vectors loaded from "token<TAB>v1<TAB>...<TAB>vk" lines.
struct ExternalEmbeddings {
  int dim = 0;
  std::map<std::string, std::vector<real>> vectors;

  // Throws DataError on ragged or unparseable lines.
  static ExternalEmbeddings load(const std::filesystem::path& path);
};

// Produces the [N, d] token representation matrix.
class TokenEncoder {
 public:
  virtual ~TokenEncoder() = default;
  virtual void init_params(ParamStore& params, const ModelConfig& config,
                           Rng& rng) const = 0;
  virtual Var encode(Tape& tape, const ParamStore& params, const Sentence& sentence,
                     const ModelConfig& config) const = 0;
  virtual std::vector<std::pair<std::string, std::string>> meta() const { return {}; }
};

// h_i = W2 relu(W1 [e(x_{i-w}); ...; e(x_{i+w})] + b1) + b2, zero vectors past
// the sentence edges.
class WindowEncoder : public TokenEncoder {
 public:
  explicit WindowEncoder(Vocabulary vocab) : vocab_(std::move(vocab)) {}

  void init_params(ParamStore& params, const ModelConfig& config, Rng& rng) const override;
  Var encode(Tape& tape, const ParamStore& params, const Sentence& sentence,
             const ModelConfig& config) const override;
  const Vocabulary& vocab() const { return vocab_; }

 private:
  Vocabulary vocab_;
};

// h_i = P e_ext(x_i) + b with a learned projection; unknown tokens map to zeros.
class ExternalEncoder : public TokenEncoder {
 public:
  ExternalEncoder(ExternalEmbeddings embeddings, std::string source);

  void init_params(ParamStore& params, const ModelConfig& config, Rng& rng) const override;
  Var encode(Tape& tape, const ParamStore& params, const Sentence& sentence,
             const ModelConfig& config) const override;
  std::vector<std::pair<std::string, std::string>> meta() const override;

 private:
  ExternalEmbeddings embeddings_;
  std::string source_;
};

// Shared logits z^e [N, N, 4] and relation residuals z^r [N, N, R, 4].
struct ScoreGrids {
  Tensor shared;
  Tensor residual;
};

struct ScoreVars {
  Var shared;
  Var residual;
};

class RtfModel {
 public:
  RtfModel(ModelConfig config, std::shared_ptr<const TokenEncoder> encoder);

  const ModelConfig& config() const { return config_; }
  const TokenEncoder& encoder() const { return *encoder_; }

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, unit norm gains.
  ParamStore init_params(std::uint64_t seed) const;

  // When `enforce_max_length` is set, sentences longer than the configured
  // maximum are rejected with DataError.
  Var encode_tokens(Tape& tape, const ParamStore& params, const Sentence& sentence,
                    bool enforce_max_length = true) const;
  Var build_table(Tape& tape, const ParamStore& params, Var tokens) const;
  // One bottleneck block: 1x1 (d -> d_b), 3x3 (d_b -> d_b), 1x1 (d_b -> d),
  // each followed by layer norm and relu, then the residual add.
  Var conv_block(Tape& tape, const ParamStore& params, Var table, int block) const;
  Var conv_blocks(Tape& tape, const ParamStore& params, Var table) const;
  ScoreVars score_cells(Tape& tape, const ParamStore& params, Var region_table,
                        Var tokens) const;
  // z^e + z^r, shape [N, N, R, 4].
  Var logits(Tape& tape, const ParamStore& params, const Sentence& sentence,
             bool enforce_max_length = true) const;

  // Mean cross entropy over all N * N * R cells. Throws DataError if the
  // gold grids do not match the sentence and relation count.
  Var loss(Tape& tape, const ParamStore& params, const Sentence& sentence,
           const std::vector<TagGrid>& gold) const;

  std::vector<TagGrid> predict(const ParamStore& params, const Sentence& sentence) const;
  ScoreGrids scores(const ParamStore& params, const Sentence& sentence) const;

 private:
  ModelConfig config_;
  std::shared_ptr<const TokenEncoder> encoder_;
};

// Per relation, the argmax tag of each cell of a [N, N, R, 4] logit tensor.
std::vector<TagGrid> argmax_grids(const Tensor& logits);

}  // namespace rtf
