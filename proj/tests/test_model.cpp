#include "doctest.h"

#include <cmath>
#include <memory>

#include "rtf/decoding.hpp"
#include "rtf/gradcheck.hpp"
#include "rtf/model.hpp"
#include "rtf/ops.hpp"

using namespace rtf;

namespace {

const char* kText = "a b c d e f g h i j k l";

RtfModel make_model(ModelConfig c, const std::string& text = kText) {
  auto vocab = Vocabulary::build({Sentence::from_text(text), Sentence::from_text("z")});
  c.vocab_size = static_cast<int>(vocab.size());
  return RtfModel(c, std::make_shared<WindowEncoder>(std::move(vocab)));
}

ModelConfig small(int d = 8, int relations = 2) {
  ModelConfig c;
  c.hidden = d;
  c.relations = relations;
  return c;
}

Tensor encode(const RtfModel& m, const ParamStore& p, const Sentence& s) {
  Tape t;
  return m.encode_tokens(t, p, s).value();
}

Tensor row(const Tensor& t, std::size_t i) {
  const std::size_t w = t.size() / t.dim(0);
  return Tensor(Shape{w}, std::vector<real>(t.data() + i * w, t.data() + (i + 1) * w));
}

Tensor cell(const Tensor& t, std::size_t i, std::size_t j) {
  const std::size_t w = t.size() / (t.dim(0) * t.dim(1));
  const std::size_t at = (i * t.dim(1) + j) * w;
  return Tensor(Shape{w}, std::vector<real>(t.data() + at, t.data() + at + w));
}

std::vector<TagGrid> random_gold(Rng& rng, int n, int relations) {
  std::vector<TagGrid> g;
  for (int r = 0; r < relations; ++r) {
    g.emplace_back(r, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g.back().set(i, j, static_cast<Tag>(rng.randint(0, 3)));
  }
  return g;
}

}  // namespace

TEST_CASE("config validation and overrides") {
  ModelConfig c;
  CHECK(c.bottleneck_width() == 16);
  CHECK(c.set("d", "12"));
  CHECK(c.hidden == 12);
  CHECK_FALSE(c.set("colour", "blue"));
  const auto back = ModelConfig::from_meta(c.to_meta());
  CHECK(back.hidden == 12);
  CHECK(back.relations == c.relations);
  c.hidden = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("vocabulary maps unseen tokens to the unknown id") {
  const auto v = Vocabulary::build({Sentence::from_text("x y x")});
  CHECK(v.size() == 3);
  CHECK(v.id("x") == 1);
  CHECK(v.id("never") == 0);
  CHECK(v.ids(Sentence::from_text("y q")) == std::vector<int>{2, 0});
}

TEST_CASE("encoder: window 0 is a position-wise map") {
  ModelConfig c = small();
  c.window = 0;
  const auto m = make_model(c);
  const auto p = m.init_params(1);
  const Tensor a = encode(m, p, Sentence::from_text("a b c"));
  const Tensor b = encode(m, p, Sentence::from_text("z b z z"));
  CHECK(max_abs_diff(row(a, 1), row(b, 1)) == 0);
}

TEST_CASE("encoder: locality of the window") {
  const auto m = make_model(small());
  const auto p = m.init_params(2);
  const Tensor a = encode(m, p, Sentence::from_text("a b c d e f g h i j k"));
  const Tensor b = encode(m, p, Sentence::from_text("a b c d e f g h i z k"));
  for (std::size_t i = 0; i <= 7; ++i) CHECK(max_abs_diff(row(a, i), row(b, i)) == 0);
  // Positions 8..10 see token 9 with w = 1.
  for (std::size_t i = 8; i <= 10; ++i) CHECK(max_abs_diff(row(a, i), row(b, i)) > 0);
}

TEST_CASE("encoder: rejects over-length sentences") {
  ModelConfig c = small();
  c.max_length = 3;
  const auto m = make_model(c);
  const auto p = m.init_params(3);
  Tape t;
  CHECK_THROWS_AS(m.encode_tokens(t, p, Sentence::from_text("a b c d")), DataError);
  CHECK_NOTHROW(m.encode_tokens(t, p, Sentence::from_text("a b c d"), false));
}

TEST_CASE("build_table: single token and ordered pairs") {
  const auto m = make_model(small());
  const auto p = m.init_params(4);
  {
    Tape t;
    const Var h = m.encode_tokens(t, p, Sentence::from_text("a"));
    const Tensor table = m.build_table(t, p, h).value();
    REQUIRE(table.shape() == Shape{1, 1, 8});
    Tensor cat(Shape{16});
    for (std::size_t k = 0; k < 8; ++k) cat[k] = cat[8 + k] = h.value()[k];
    const Tensor ref = ops::relu(ops::linear(t.constant(cat), t.constant(p.value("table.w")),
                                             t.constant(p.value("table.b"))))
                           .value();
    CHECK(max_abs_diff(table.reshaped({8}), ref) < 1e-14);
  }
  Tape t;
  const Tensor table = m.build_table(t, p, m.encode_tokens(t, p, Sentence::from_text("a b c"))).value();
  CHECK(max_abs_diff(cell(table, 0, 1), cell(table, 1, 0)) > 0);
}

TEST_CASE("conv_block: zero kernels and zero gains pass the input through") {
  const auto m = make_model(small());
  auto p = m.init_params(5);
  for (const char* name : {"block0.conv_in", "block0.conv_mid", "block0.conv_out", "block0.norm_in.gain",
                           "block0.norm_mid.gain", "block0.norm_out.gain"})
    p.value(name).fill(0);
  Tape t;
  const Var table = m.build_table(t, p, m.encode_tokens(t, p, Sentence::from_text("a b c d")));
  const Tensor out = m.conv_block(t, p, table, 0).value();
  CHECK(out == table.value());
}

TEST_CASE("conv_blocks: receptive field grows by one cell per block") {
  for (int blocks : {1, 2}) {
    ModelConfig c = small();
    c.blocks = blocks;
    const auto m = make_model(c);
    const auto p = m.init_params(6);
    Rng rng(99);
    Tensor input(Shape{7, 7, 8});
    for (std::size_t i = 0; i < input.size(); ++i) input[i] = static_cast<real>(rng.uniform(-1, 1));
    Tensor bumped = input;
    for (std::size_t k = 0; k < 8; ++k) bumped[k] += 0.5;  // cell (0, 0)

    Tape t;
    const Tensor a = m.conv_blocks(t, p, t.constant(input)).value();
    const Tensor b = m.conv_blocks(t, p, t.constant(bumped)).value();
    for (std::size_t i = 0; i < 7; ++i)
      for (std::size_t j = 0; j < 7; ++j) {
        const bool reachable = std::max(i, j) <= static_cast<std::size_t>(blocks);
        const double diff = max_abs_diff(cell(a, i, j), cell(b, i, j));
        if (reachable)
          CHECK(diff > 0);
        else
          CHECK(diff == 0);
      }
  }
}

TEST_CASE("score_cells: a zeroed residual slice leaves the shared score") {
  const auto m = make_model(small(8, 3));
  auto p = m.init_params(7);
  for (std::size_t k = 0; k < 16; ++k)
    for (std::size_t c = 0; c < 4; ++c) p.value("score.relation.w")[(k * 3 + 1) * 4 + c] = 0;
  for (std::size_t c = 0; c < 4; ++c) p.value("score.relation.b")[1 * 4 + c] = 0;
  const auto s = Sentence::from_text("a b c d");
  Tape t;
  const Tensor z = m.logits(t, p, s).value();
  const ScoreGrids g = m.scores(p, s);
  REQUIRE(g.residual.shape() == Shape{4, 4, 3, 4});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t c = 0; c < 4; ++c)
        CHECK(z[((i * 4 + j) * 3 + 1) * 4 + c] == g.shared[(i * 4 + j) * 4 + c]);
}

TEST_CASE("score_cells: residual is computed from raw token reps") {
  // Changing the conv block must not change z^r.
  const auto m = make_model(small());
  auto p = m.init_params(8);
  const auto s = Sentence::from_text("a b c");
  const ScoreGrids before = m.scores(p, s);
  p.value("block0.conv_mid").fill(0.3);
  const ScoreGrids after = m.scores(p, s);
  CHECK(before.residual == after.residual);
  CHECK_FALSE(before.shared == after.shared);
}

TEST_CASE("predict: dominant None decodes to nothing") {
  const auto m = make_model(small());
  auto p = m.init_params(9);
  p.value("score.shared.w").fill(0);
  p.value("score.shared.b") = Tensor::vector({50, 0, 0, 0});
  p.value("score.relation.w").fill(0);
  p.value("score.relation.b").fill(0);
  const auto s = Sentence::from_text("a b c d e");
  const auto grids = m.predict(p, s);
  REQUIRE(grids.size() == 2);
  for (const auto& g : grids) CHECK(g.count(Tag::None) == 25);
  CHECK(decode_all(grids, 5, 2).empty());
}

TEST_CASE("predict: identical residual weights give identical grids") {
  const auto m = make_model(small(8, 2));
  auto p = m.init_params(10);
  Tensor& w = p.value("score.relation.w");
  Tensor& b = p.value("score.relation.b");
  for (std::size_t k = 0; k < 16; ++k)
    for (std::size_t c = 0; c < 4; ++c) w[(k * 2 + 1) * 4 + c] = w[(k * 2) * 4 + c];
  for (std::size_t c = 0; c < 4; ++c) b[4 + c] = b[c];
  const auto grids = m.predict(p, Sentence::from_text("a b c d e f"));
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) CHECK(grids[0].at(i, j) == grids[1].at(i, j));
}

TEST_CASE("argmax_grids breaks ties toward the lower tag") {
  Tensor z(Shape{1, 1, 1, 4}, std::vector<real>{0, 2, 2, 1});
  CHECK(argmax_grids(z)[0].at(0, 0) == Tag::UL);
  CHECK_THROWS_AS(argmax_grids(Tensor(Shape{2, 3, 1, 4})), std::invalid_argument);
}

TEST_CASE("loss: uniform logits give ln 4 for any gold") {
  const auto m = make_model(small());
  auto p = m.init_params(11);
  p.value("score.shared.w").fill(0);
  p.value("score.shared.b").fill(0);
  p.value("score.relation.w").fill(0);
  p.value("score.relation.b").fill(0);
  Rng rng(3);
  const auto s = Sentence::from_text("a b c d");
  for (int trial = 0; trial < 3; ++trial) {
    Tape t;
    CHECK(m.loss(t, p, s, random_gold(rng, 4, 2)).value().item() ==
          doctest::Approx(std::log(4.0)).epsilon(1e-14));
  }
  Tape t;
  CHECK_THROWS_AS(m.loss(t, p, s, random_gold(rng, 3, 2)), DataError);
  CHECK_THROWS_AS(m.loss(t, p, s, random_gold(rng, 4, 1)), DataError);
}

TEST_CASE("loss: scaled one-hot logits fit almost perfectly") {
  Rng rng(12);
  const auto gold = random_gold(rng, 5, 2);
  Tensor z(Shape{5, 5, 2, 4});
  std::vector<int> targets;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      for (int r = 0; r < 2; ++r) {
        const int tag = static_cast<int>(gold[static_cast<std::size_t>(r)].at(i, j));
        z[((static_cast<std::size_t>(i) * 5 + j) * 2 + r) * 4 + tag] = 100;
        targets.push_back(tag);
      }
  Tape t;
  const double l = ops::mean(ops::softmax_cross_entropy(t.constant(z), targets)).value().item();
  CHECK(l >= 0);
  CHECK(l < 1e-3);
  const auto pred = argmax_grids(z);
  CHECK(pred == gold);
}

TEST_CASE("softmax is invariant to a per-cell shift of the summed logits") {
  Rng rng(13);
  Tensor z(Shape{6, 4});
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = static_cast<real>(rng.uniform(-5, 5));
  Tensor shifted = z;
  for (std::size_t m = 0; m < 6; ++m) {
    const double c = rng.uniform(-100, 100);
    for (std::size_t k = 0; k < 4; ++k) shifted[m * 4 + k] += static_cast<real>(c);
  }
  CHECK(max_abs_diff(ops::softmax(z), ops::softmax(shifted)) < 1e-12);
}

TEST_CASE("gradient checks through the model") {
  ModelConfig c = small(8, 2);
  c.bottleneck = 4;
  const auto m = make_model(c);
  const GradCheckOptions kink_aware{1e-4, 1e-7, 1e-6};

  SUBCASE("full loss, N = 4") {
    const auto s = Sentence::from_text("a b c d");
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
      Rng rng(seed);
      const auto gold = random_gold(rng, 4, 2);
      ParamStore p = m.init_params(seed);
      const auto r = grad_check([&](Tape& t, const ParamStore& ps) { return m.loss(t, ps, s, gold); }, p,
                                kink_aware);
      INFO("seed " << seed << " worst " << r.worst_param << "[" << r.worst_index << "]");
      CHECK(r.max_rel_error < 1e-4);
    }
  }
  SUBCASE("table, one block and the score path at N = 5") {
    const auto s = Sentence::from_text("a b c d e");
    for (std::uint64_t seed = 11; seed <= 14; ++seed) {
      Rng rng(seed);
      const auto gold = random_gold(rng, 5, 2);
      ParamStore p = m.init_params(seed);
      const auto r = grad_check([&](Tape& t, const ParamStore& ps) { return m.loss(t, ps, s, gold); }, p,
                                kink_aware);
      INFO("seed " << seed << " worst " << r.worst_param << "[" << r.worst_index << "]");
      CHECK(r.max_rel_error < 1e-4);
    }
  }
}
