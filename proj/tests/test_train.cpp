#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstring>
#include <sstream>

#include "segtrans/decode.hpp"
#include "segtrans/eval.hpp"
#include "segtrans/train.hpp"
#include "synthetic.hpp"
#include "testutil.hpp"

using namespace segtrans;
using segtrans::testutil::SyntheticLanguage;

namespace {

ModelConfig small_model(int vocab_size) {
  ModelConfig cfg;
  cfg.vocab_size = vocab_size;
  cfg.embed_dim = 16;
  cfg.hidden_dim = 24;
  cfg.dropout_state = 0.0;
  return cfg;
}

std::vector<WeightedExample> encode_all(const std::vector<SegmentedSentence>& corpus,
                                        const Vocabulary& v) {
  std::vector<WeightedExample> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) out.push_back(to_weighted_example(s, v));
  return out;
}

bool params_bitwise_equal(const Checkpoint& a, const Checkpoint& b) {
  if (a.params.size() != b.params.size()) return false;
  for (size_t i = 0; i < a.params.size(); ++i) {
    if (a.params[i].shape != b.params[i].shape) return false;
    if (std::memcmp(a.params[i].data.data(), b.params[i].data.data(),
                    a.params[i].data.size() * sizeof(double)) != 0)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("adam_update: scalar examples") {
  TrainConfig cfg;
  cfg.learning_rate = 1e-4;

  SUBCASE("t=1Δ with unit gradient moves by about -lr") {
    Parameter p("p", Tensor({1}, {0.0}));
    p.grad.data[0] = 1.0;
    std::vector<Parameter*> ps = {&p};
    AdamMoments mo;
    adam_update(ps, mo, 1, cfg);
    CHECK(p.value.data[0] == doctest::Approx(-1e-4).epsilon(1e-7));
  }
  SUBCASE("zero gradient leaves parameters unchanged") {
    Parameter p("p", Tensor({3}, {1.0, 2.0, 3.0}));
    std::vector<Parameter*> ps = {&p};
    AdamMoments mo;
    adam_update(ps, mo, 1, cfg);
    CHECK(p.value.data[0] == 1.0);
    CHECK(p.value.data[1] == 2.0);
    CHECK(p.value.data[2] == 3.0);
  }
  SUBCASE("equal gradients update identically") {
    Parameter p("p", Tensor({2}, {0.3, 0.3}));
    p.grad.data = {0.7, 0.7};
    std::vector<Parameter*> ps = {&p};
    AdamMoments mo;
    adam_update(ps, mo, 1, cfg);
    CHECK(p.value.data[0] == p.value.data[1]);
  }
  SUBCASE("non-finite gradient names the tensor") {
    Parameter p("enc.l0.fwd.w_zr", Tensor({1}, {0.0}));
    p.grad.data[0] = std::nan("");
    std::vector<Parameter*> ps = {&p};
    AdamMoments mo;
    CHECK_THROWS_WITH_AS(adam_update(ps, mo, 1, cfg),
                         "adam_update: non-finite gradient in tensor enc.l0.fwd.w_zr",
                         std::runtime_error);
  }
}

TEST_CASE("duplicating a sentence k times equals weighting it k") {
  const SyntheticLanguage lang;
  const auto corpus = lang.corpus(4, 5);
  const Vocabulary v = Vocabulary::build(corpus);
  SegModel model(small_model(v.size()), v, 3);
  const WeightedExample base = to_weighted_example(corpus[0], v);

  auto loss_of = [&](const WeightedExample& ex) {
    Graph g;
    return g.value(model.example_loss(g, ex, 2.0)).data[0];
  };

  for (int k : {2, 3}) {
    double duplicated = 0.0;
    for (int i = 0; i < k; ++i) duplicated += loss_of(base);
    WeightedExample weighted = base;
    weighted.weight = static_cast<double>(k);
    CHECK(loss_of(weighted) == duplicated);  // bitwise for small integer k
  }
  // Large weights agree to rounding.
  double duplicated = 0.0;
  for (int i = 0; i < 40; ++i) duplicated += loss_of(base);
  WeightedExample w40 = base;
  w40.weight = 40.0;
  CHECK(loss_of(w40) == doctest::Approx(duplicated).epsilon(1e-12));
}

TEST_CASE("early stopping keeps the best checkpoint, not the last") {
  // patience 2 against a validation trace 5,4,4,4: training must stop after
  // the two non-improving evaluations and return the cost-4 checkpoint.
  // Realized with a real run: track the log and compare the returned best
  // against the minimum of the trace.
  const SyntheticLanguage lang;
  const auto corpus = lang.corpus(30, 21);
  const Vocabulary v = Vocabulary::build(corpus);
  SegModel model(small_model(v.size()), v, 5);
  const auto train_set = encode_all(corpus, v);
  const auto valid_set = encode_all(lang.corpus(8, 22), v);

  TrainConfig cfg;
  cfg.learning_rate = 3e-3;
  cfg.batch_tokens = 128;
  cfg.patience = 2;
  cfg.max_epochs = 40;
  cfg.seed = 9;
  const TrainResult result = train(model, train_set, valid_set, cfg);

  REQUIRE(!result.log.empty());
  double min_seen = result.log.front().valid_cost;
  for (const auto& line : result.log) min_seen = std::min(min_seen, line.valid_cost);
  CHECK(result.best_valid_cost == doctest::Approx(min_seen));
  CHECK(result.best.best_valid_cost == doctest::Approx(min_seen));

  // The stopping rule: the log never continues past patience consecutive
  // non-improvements.
  int bad = 0, max_bad = 0;
  for (const auto& line : result.log) {
    bad = line.is_best ? 0 : bad + 1;
    max_bad = std::max(max_bad, bad);
  }
  CHECK(max_bad <= cfg.patience);

  // Restoring the best checkpoint reproduces its validation cost.
  auto restored = result.best.restore();
  CHECK(validation_cost(*restored, valid_set) == doctest::Approx(result.best_valid_cost));
}

TEST_CASE("training is bitwise deterministic for a fixed seed") {
  const SyntheticLanguage lang;
  const auto corpus = lang.corpus(20, 31);
  const Vocabulary v = Vocabulary::build(corpus);
  const auto train_set = encode_all(corpus, v);
  const auto valid_set = encode_all(lang.corpus(5, 32), v);

  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.batch_tokens = 96;
  cfg.max_epochs = 3;
  cfg.patience = 10;
  cfg.seed = 77;

  ModelConfig mc = small_model(v.size());
  mc.dropout_state = 0.2;  // dropout draws must reproduce too
  SegModel m1(mc, v, 123);
  SegModel m2(mc, v, 123);
  const TrainResult r1 = train(m1, train_set, valid_set, cfg);
  const TrainResult r2 = train(m2, train_set, valid_set, cfg);
  CHECK(params_bitwise_equal(r1.best, r2.best));
  REQUIRE(r1.log.size() == r2.log.size());
  for (size_t i = 0; i < r1.log.size(); ++i) {
    CHECK(r1.log[i].valid_cost == r2.log[i].valid_cost);
    CHECK(r1.log[i].train_cost == r2.log[i].train_cost);
  }
}

TEST_CASE("overfit: a tiny corpus is memorized") {
  const SyntheticLanguage lang;
  const auto corpus = lang.corpus(12, 41);
  const Vocabulary v = Vocabulary::build(corpus);
  SegModel model(small_model(v.size()), v, 7);
  const auto train_set = encode_all(corpus, v);

  TrainConfig cfg;
  cfg.learning_rate = 5e-3;
  cfg.batch_tokens = 64;
  cfg.max_epochs = 200;
  cfg.patience = 200;  // run to the cap
  cfg.seed = 13;
  const TrainResult result = train(model, train_set, train_set, cfg);
  CHECK(result.best_valid_cost <= 0.1);  // nats/char after convergence

  // Constrained decoding reproduces the training segmentations.
  auto net = result.best.restore();
  auto* seg = dynamic_cast<SegModel*>(net.get());
  REQUIRE(seg);
  DecodeConfig dc;
  std::vector<SegModel*> models = {seg};
  std::vector<SegmentedSentence> pred;
  for (const auto& s : corpus) {
    SegmentedSentence p;
    p.chars = s.chars;
    p.boundaries = beam_search(models, nullptr, to_training_pair(s, v).source, dc).boundaries;
    pred.push_back(std::move(p));
  }
  const F1Report f1 = f1_score(pred, corpus);
  CHECK(f1.f1 >= 0.99);
}

TEST_CASE("fine_tune: no-op transfer and vocabulary checks") {
  const SyntheticLanguage lang;
  const auto corpus = lang.corpus(16, 51);
  const Vocabulary v = Vocabulary::build(corpus);
  SegModel model(small_model(v.size()), v, 19);
  const auto train_set = encode_all(corpus, v);

  TrainConfig cfg;
  cfg.learning_rate = 2e-3;
  cfg.batch_tokens = 128;
  cfg.max_epochs = 60;
  cfg.patience = 60;
  cfg.seed = 3;
  const TrainResult first = train(model, train_set, train_set, cfg);

  SUBCASE("fine-tuning a converged model on the same data does not regress") {
    TrainConfig ft_cfg = cfg;
    ft_cfg.max_epochs = 5;
    ft_cfg.patience = 2;
    const TrainResult second = fine_tune(first.best, v, train_set, train_set, ft_cfg);
    CHECK(second.best_valid_cost <= first.best_valid_cost + 1e-3);
  }
  SUBCASE("vocabulary mismatch is rejected") {
    const Vocabulary other = Vocabulary::build({parse_segmented_line("我 会")});
    CHECK_THROWS_AS(fine_tune(first.best, other, train_set, train_set, cfg),
                    std::invalid_argument);
  }
}

TEST_CASE("LM overfits a deterministic corpus to perplexity about 1") {
  // One repeated sentence: the segmented side is fully predictable.
  SegmentedSentence s;
  s.chars = U"一丁";
  s.boundaries = {1};
  const Vocabulary v = Vocabulary::build({s});
  std::vector<WeightedExample> data(8, to_weighted_example(s, v));

  ModelConfig mc = small_model(v.size());
  CharLM lm(mc, v, 3);
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.batch_tokens = 64;
  cfg.max_epochs = 200;
  cfg.patience = 200;
  cfg.seed = 17;
  const TrainResult result = train(lm, data, data, cfg);
  const double perplexity = std::exp(result.best_valid_cost);
  CHECK(perplexity <= 1.05);
}

TEST_CASE("checkpoint: bit-exact roundtrip and error codes") {
  const SyntheticLanguage lang;
  const auto corpus = lang.corpus(6, 61);
  const Vocabulary v = Vocabulary::build(corpus);
  SegModel model(small_model(v.size()), v, 37);
  Checkpoint c = Checkpoint::from_network(model, 123);
  c.epoch = 4;
  c.best_valid_cost = 0.25;

  testutil::TempDir tmp;
  const std::string path = tmp.file("model.ckpt");
  c.save(path);
  const Checkpoint loaded = Checkpoint::load(path);
  CHECK(params_bitwise_equal(c, loaded));
  CHECK(loaded.arch == "seg");
  CHECK(loaded.epoch == 4);
  CHECK(loaded.seed == 123);
  CHECK(loaded.vocabulary == v);
  CHECK(loaded.config == model.config());

  SUBCASE("restore rebuilds an equivalent network") {
    auto net = loaded.restore();
    const auto ex = to_weighted_example(corpus[0], v);
    Graph ga, gb;
    const double la = ga.value(model.example_loss(ga, ex, 2.0)).data[0];
    const double lb = gb.value(net->example_loss(gb, ex, 2.0)).data[0];
    CHECK(la == lb);
  }
  SUBCASE("wrong magic is 'not a checkpoint'") {
    testutil::write_file(tmp.file("bad.ckpt"), "NOPE....garbage");
    CHECK_THROWS_WITH_AS(Checkpoint::load(tmp.file("bad.ckpt")), "not a checkpoint",
                         std::runtime_error);
  }
  SUBCASE("truncation is reported as a truncated payload") {
    const std::string bytes = testutil::read_file(path);
    testutil::write_file(tmp.file("trunc.ckpt"), bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_WITH_AS(Checkpoint::load(tmp.file("trunc.ckpt")), "truncated payload",
                         std::runtime_error);
  }
  SUBCASE("version mismatch is rejected") {
    std::string bytes = testutil::read_file(path);
    bytes[4] = 99;  // little-endian version field follows the magic
    testutil::write_file(tmp.file("ver.ckpt"), bytes);
    CHECK_THROWS_AS(Checkpoint::load(tmp.file("ver.ckpt")), std::runtime_error);
  }
  SUBCASE("moments roundtrip when requested") {
    Checkpoint cm = c;
    AdamMoments mo;
    for (const auto& t : c.params) {
      mo.m.push_back(t);
      mo.v.push_back(t);
    }
    mo.step = 7;
    cm.moments = std::move(mo);
    cm.save(tmp.file("m.ckpt"));
    const Checkpoint lm2 = Checkpoint::load(tmp.file("m.ckpt"));
    REQUIRE(lm2.moments.has_value());
    CHECK(lm2.moments->step == 7);
    CHECK(lm2.moments->m.size() == c.params.size());
  }
}

TEST_CASE("training log stream format") {
  const SyntheticLanguage lang;
  const auto corpus = lang.corpus(8, 71);
  const Vocabulary v = Vocabulary::build(corpus);
  SegModel model(small_model(v.size()), v, 41);
  const auto data = encode_all(corpus, v);
  TrainConfig cfg;
  cfg.max_epochs = 2;
  cfg.learning_rate = 1e-3;
  std::ostringstream log;
  train(model, data, data, cfg, &log);
  const std::string text = log.str();
  CHECK(text.find("update=") != std::string::npos);
  CHECK(text.find("valid_cost=") != std::string::npos);
  CHECK(text.find(" *") != std::string::npos);  // best-so-far marker
}
