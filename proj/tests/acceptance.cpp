// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Runs on one core in a few minutes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <vector>

#include "segtrans/augment.hpp"
#include "segtrans/checkpoint.hpp"
#include "segtrans/decode.hpp"
#include "segtrans/eval.hpp"
#include "segtrans/gradcheck.hpp"
#include "segtrans/train.hpp"
#include "synthetic.hpp"
#include "testutil.hpp"

using namespace segtrans;
using segtrans::testutil::SyntheticLanguage;

namespace {

int g_failures = 0;

void report(int criterion, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", criterion, name,
              detail.empty() ? "" : " — ", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vocabulary toy_vocab(int extra_chars) {
  std::vector<SegmentedSentence> corpus(1);
  for (int i = 0; i < extra_chars; ++i)
    corpus[0].chars.push_back(static_cast<char32_t>(0x4E00 + i));
  return Vocabulary::build(corpus);
}

ModelConfig model_config(int vocab, int embed, int hidden) {
  ModelConfig cfg;
  cfg.vocab_size = vocab;
  cfg.embed_dim = embed;
  cfg.hidden_dim = hidden;
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

// ---------------------------------------------------------------------------
// 1. Gradient suite: every primitive plus the full sentence loss, <= 1e-4
//    relative against central differences, under a minute.

Parameter rand_param(const std::string& name, std::vector<int> shape, Rng& rng) {
  Parameter p(name, Tensor::zeros(std::move(shape)));
  for (double& v : p.value.data) v = rng.uniform(-1.0, 1.0);
  return p;
}

NodeId to_scalar(Graph& g, NodeId out, uint64_t seed) {
  Rng rng(seed);
  const Tensor& t = g.value(out);
  const int n = static_cast<int>(t.numel());
  Tensor r({n});
  for (double& v : r.data) v = rng.uniform(-1.0, 1.0);
  return g.dot(g.reshape(out, {n}), g.constant(std::move(r)));
}

void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string worst_name;
  auto run = [&](const char* name, const LossBuilder& build, std::vector<Parameter*> params) {
    const auto rep = gradient_check(build, std::move(params), 1e-5, 120);
    if (rep.max_rel_err > worst) {
      worst = rep.max_rel_err;
      worst_name = name;
    }
  };

  Rng rng(1001);
  Parameter a = rand_param("a", {5, 4}, rng), b = rand_param("b", {4, 6}, rng);
  Parameter x = rand_param("x", {8}, rng), y = rand_param("y", {8}, rng);
  Parameter m = rand_param("m", {3, 7}, rng), row = rand_param("row", {7}, rng);
  Parameter v4 = rand_param("v4", {4}, rng);
  Parameter table = rand_param("table", {6, 5}, rng);
  Parameter gain = rand_param("gain", {5}, rng), bias = rand_param("bias", {5}, rng);
  Parameter rl("rl", Tensor({6}, {0.8, -0.6, 1.2, -1.4, 0.5, -0.9}));

  run("matmul", [&](Graph& g) { return to_scalar(g, g.matmul(g.param(a), g.param(b)), 1); },
      {&a, &b});
  run("matvec", [&](Graph& g) { return to_scalar(g, g.matmul(g.param(a), g.param(v4)), 2); },
      {&a, &v4});
  run("vecmat", [&](Graph& g) { return to_scalar(g, g.matmul(g.param(v4), g.param(b)), 3); },
      {&v4, &b});
  run("add", [&](Graph& g) { return to_scalar(g, g.add(g.param(x), g.param(y)), 4); }, {&x, &y});
  run("add_rowwise",
      [&](Graph& g) { return to_scalar(g, g.add_rowwise(g.param(m), g.param(row)), 5); },
      {&m, &row});
  run("scale", [&](Graph& g) { return to_scalar(g, g.scale(g.param(x), -1.7), 6); }, {&x});
  run("mul", [&](Graph& g) { return to_scalar(g, g.mul(g.param(x), g.param(y)), 7); }, {&x, &y});
  run("one_minus", [&](Graph& g) { return to_scalar(g, g.one_minus(g.param(x)), 8); }, {&x});
  run("sigmoid", [&](Graph& g) { return to_scalar(g, g.sigmoid(g.param(x)), 9); }, {&x});
  run("tanh", [&](Graph& g) { return to_scalar(g, g.tanh(g.param(x)), 10); }, {&x});
  run("relu", [&](Graph& g) { return to_scalar(g, g.relu(g.param(rl)), 11); }, {&rl});
  run("concat",
      [&](Graph& g) { return to_scalar(g, g.concat({g.param(x), g.param(y)}), 12); }, {&x, &y});
  run("slice", [&](Graph& g) { return to_scalar(g, g.slice(g.param(x), 2, 7), 13); }, {&x});
  run("reshape", [&](Graph& g) { return to_scalar(g, g.reshape(g.param(m), {7, 3}), 14); }, {&m});
  run("embedding_lookup",
      [&](Graph& g) { return to_scalar(g, g.embedding_lookup(g.param(table), 3), 15); },
      {&table});
  run("layer_norm",
      [&](Graph& g) {
        return to_scalar(
            g, g.layer_norm(g.embedding_lookup(g.param(table), 1), g.param(gain), g.param(bias)),
            16);
      },
      {&table, &gain, &bias});
  run("dropout", [&](Graph& g) { return to_scalar(g, g.dropout(g.param(x), 0.35), 17); }, {&x});
  run("softmax", [&](Graph& g) { return to_scalar(g, g.softmax(g.param(x)), 18); }, {&x});
  run("log_softmax", [&](Graph& g) { return to_scalar(g, g.log_softmax(g.param(x)), 19); }, {&x});
  run("weighted_nll",
      [&](Graph& g) { return g.weighted_nll(g.log_softmax(g.param(x)), 5, 2.0, 0.1); }, {&x});
  run("dot", [&](Graph& g) { return g.dot(g.param(x), g.param(y)); }, {&x, &y});

  // Full sentence loss on a toy model: V = 10, dims <= 16.
  const Vocabulary v = toy_vocab(3);
  SegModel model(model_config(v.size(), 8, 12), v, 77);
  SegmentedSentence s;
  s.chars = U"一丁丂一";
  s.boundaries = {1, 3};
  const WeightedExample ex = to_weighted_example(s, v, 1.5);
  run("sentence_loss", [&](Graph& g) { return model.example_loss(g, ex, 2.0); },
      model.parameters());

  const double elapsed = seconds_since(t0);
  char detail[160];
  std::snprintf(detail, sizeof(detail), "max rel err %.3g (%s), %.1fs", worst,
                worst_name.c_str(), elapsed);
  report(1, "gradient suite vs central finite differences", worst <= 1e-4 && elapsed < 60.0,
         detail);
}

// ---------------------------------------------------------------------------
// 2. Objective identities.

void criterion_2() {
  const SyntheticLanguage lang;
  const auto corpus = lang.corpus(6, 2002);
  const Vocabulary v = Vocabulary::build(corpus);
  SegModel model(model_config(v.size(), 12, 16), v, 5);
  bool pass = true;
  std::string detail;

  for (const auto& sent : corpus) {
    const WeightedExample ex = to_weighted_example(sent, v);
    const size_t n = ex.target.size();

    // (a) k=1: equals the mean cross-entropy computed independently through
    // the stepwise decode API, same accumulation order.
    double loss_k1;
    {
      Graph g;
      loss_k1 = g.value(model.example_loss(g, ex, 1.0)).data[0];
    }
    double nll_sum = 0.0;
    {
      Graph g;
      const auto enc = model.encode(g, ex.source);
      auto st = model.initial_state(g, enc);
      TokenId prev = kBosId;
      for (TokenId ytok : ex.target) {
        const auto step = model.decode_step(g, prev, st, enc);
        nll_sum += -g.value(step.logp).data[static_cast<size_t>(ytok)];
        st = step.state;
        prev = ytok;
      }
    }
    const double baseline = nll_sum * (1.0 / static_cast<double>(n));
    if (loss_k1 != baseline) {
      pass = false;
      detail = "k=1 does not equal the baseline mean cross-entropy";
    }

    // (b) weight k multiplies exactly (weight applied as the last op).
    for (double k : {2.0, 3.0, 40.0}) {
      WeightedExample w = ex;
      w.weight = k;
      Graph ga, gb;
      const double lw = ga.value(model.example_loss(ga, w, 2.0)).data[0];
      const double l1 = gb.value(model.example_loss(gb, ex, 2.0)).data[0];
      if (lw != k * l1) {
        pass = false;
        detail = "weight-k loss is not exactly k times the weight-1 loss";
      }
    }

    // (c) duplicating k times == weighting by k for the total dataset loss.
    for (int k : {2, 3}) {
      double duplicated = 0.0;
      for (int i = 0; i < k; ++i) {
        Graph g;
        duplicated += g.value(model.example_loss(g, ex, 2.0)).data[0];
      }
      WeightedExample w = ex;
      w.weight = static_cast<double>(k);
      Graph g;
      const double weighted = g.value(model.example_loss(g, w, 2.0)).data[0];
      if (weighted != duplicated) {
        pass = false;
        detail = "duplication and weighting disagree at k=" + std::to_string(k);
      }
    }
  }
  report(2, "objective identities (Eq. 1 reduction, sentence weighting)", pass, detail);
}

// ---------------------------------------------------------------------------
// 3. Overfit: 50 synthetic sentences to train F1 >= 99% within 10 minutes.

void criterion_3() {
  const auto t0 = std::chrono::steady_clock::now();
  const SyntheticLanguage lang;
  const auto corpus = lang.corpus(50, 3003);
  const Vocabulary v = Vocabulary::build(corpus);
  SegModel model(model_config(v.size(), 16, 24), v, 9);
  const auto data = encode_all(corpus, v);

  TrainConfig cfg;
  cfg.learning_rate = 5e-3;
  cfg.batch_tokens = 128;
  cfg.max_epochs = 200;
  cfg.patience = 200;
  cfg.seed = 31;
  const TrainResult result = train(model, data, data, cfg);

  auto net = result.best.restore();
  auto* seg = dynamic_cast<SegModel*>(net.get());
  std::vector<SegModel*> models = {seg};
  DecodeConfig dc;
  std::vector<SegmentedSentence> pred;
  pred.reserve(corpus.size());
  for (const auto& s : corpus) {
    SegmentedSentence p;
    p.chars = s.chars;
    p.boundaries = beam_search(models, nullptr, to_training_pair(s, v).source, dc).boundaries;
    pred.push_back(std::move(p));
  }
  const F1Report f1 = f1_score(pred, corpus);
  const double elapsed = seconds_since(t0);
  char detail[120];
  std::snprintf(detail, sizeof(detail), "train F1 %.2f%%, %.0fs", f1.f1 * 100.0, elapsed);
  report(3, "overfit check on 50 sentences", f1.f1 >= 0.99 && elapsed < 600.0, detail);
}

// ---------------------------------------------------------------------------
// 4. Decoding oracle: beam >= 8 equals exhaustive enumeration, 1000 random
//    toy instances, zero mismatches.

std::vector<size_t> enumerate_best(SegModel& model, const std::vector<TokenId>& source) {
  const size_t n = source.size();
  double best_score = -1e300;
  int best_delims = 1 << 30;
  std::vector<TokenId> best_tokens;
  std::vector<size_t> best_bounds;
  const size_t patterns = size_t(1) << (n - 1);
  for (size_t mask = 0; mask < patterns; ++mask) {
    std::vector<TokenId> target;
    std::vector<size_t> bounds;
    for (size_t i = 0; i < n; ++i) {
      if (i > 0 && (mask & (size_t(1) << (i - 1)))) {
        target.push_back(kDelimId);
        bounds.push_back(i);
      }
      target.push_back(source[i]);
    }
    target.push_back(kEosId);

    Graph g;
    const auto enc = model.encode(g, source);
    auto state = model.initial_state(g, enc);
    TokenId prev = kBosId, last = -1;
    size_t cursor = 0;
    double score = 0.0;
    for (TokenId ytok : target) {
      const auto step = model.decode_step(g, prev, state, enc);
      const Tensor& logp = g.value(step.logp);
      std::vector<double> probs(logp.numel());
      for (size_t i = 0; i < probs.size(); ++i) probs[i] = std::exp(logp.data[i]);
      const std::vector<double> masked = constrain_step(probs, source, cursor, last);
      score += std::log(masked[static_cast<size_t>(ytok)]);
      if (ytok != kDelimId && ytok != kEosId) ++cursor;
      last = ytok;
      state = step.state;
      prev = ytok;
    }
    const int delims = static_cast<int>(bounds.size());
    std::vector<TokenId> out_tokens(target.begin(), target.end() - 1);
    const bool better =
        score > best_score ||
        (score == best_score &&
         (delims < best_delims || (delims == best_delims && out_tokens < best_tokens)));
    if (better) {
      best_score = score;
      best_delims = delims;
      best_tokens = out_tokens;
      best_bounds = bounds;
    }
  }
  return best_bounds;
}

void criterion_4() {
  const Vocabulary v = toy_vocab(5);
  Rng rng(4004);
  DecodeConfig cfg;
  cfg.beam_size = 8;
  int mismatches = 0;
  const int instances = 1000;
  for (int trial = 0; trial < instances; ++trial) {
    SegModel model(model_config(v.size(), 4, 5), v, 50000 + static_cast<uint64_t>(trial));
    const size_t len = 1 + rng.next_below(4);  // 1..4
    std::vector<TokenId> source;
    for (size_t i = 0; i < len; ++i)
      source.push_back(static_cast<TokenId>(7 + rng.next_below(5)));
    std::vector<SegModel*> models = {&model};
    const DecodeResult got = beam_search(models, nullptr, source, cfg);
    if (got.boundaries != enumerate_best(model, source)) ++mismatches;
  }
  char detail[80];
  std::snprintf(detail, sizeof(detail), "%d instances, %d mismatches", instances, mismatches);
  report(4, "constrained beam search equals exhaustive enumeration", mismatches == 0, detail);
}

// ---------------------------------------------------------------------------
// 5. Ensemble identities.

void criterion_5() {
  const Vocabulary v = toy_vocab(6);
  SegModel m1(model_config(v.size(), 6, 8), v, 42);
  SegModel m2(model_config(v.size(), 6, 8), v, 42);  // identical parameters
  Rng rng(5005);
  DecodeConfig cfg;
  bool outputs_equal = true;
  double worst_sum_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const size_t len = 1 + rng.next_below(8);
    std::vector<TokenId> source;
    for (size_t i = 0; i < len; ++i)
      source.push_back(static_cast<TokenId>(7 + rng.next_below(6)));
    std::vector<SegModel*> single = {&m1};
    std::vector<SegModel*> pair = {&m1, &m2};
    const DecodeResult a = beam_search(single, nullptr, source, cfg);
    const DecodeResult b = beam_search(pair, nullptr, source, cfg);
    if (a.tokens != b.tokens) outputs_equal = false;

    // Averaged distribution sums to one at every step along the decode.
    EnsembleDecoder ens(pair, nullptr, source);
    auto state = ens.initial_state();
    TokenId prev = kBosId;
    for (size_t step_i = 0; step_i < len + 2; ++step_i) {
      auto [probs, next] = ens.step(prev, state);
      double sum = 0.0;
      for (double p : probs) sum += p;
      worst_sum_err = std::max(worst_sum_err, std::abs(sum - 1.0));
      state = std::move(next);
      prev = static_cast<TokenId>(7 + (step_i % 6));
    }
  }
  char detail[100];
  std::snprintf(detail, sizeof(detail), "100 sentences, worst |sum-1| = %.2g", worst_sum_err);
  report(5, "ensemble identities", outputs_equal && worst_sum_err <= 1e-9, detail);
}

// ---------------------------------------------------------------------------
// 6. Augmentation roundtrips.

void criterion_6() {
  Rng rng(6006);
  bool inversion = true;
  for (int trial = 0; trial < 10000; ++trial) {
    // Gold-shaped random sentence: punctuation always its own word.
    SegmentedSentence s;
    const size_t n_words = 1 + rng.next_below(10);
    for (size_t w = 0; w < n_words; ++w) {
      if (!s.chars.empty()) s.boundaries.push_back(s.chars.size());
      if (rng.bernoulli(0.3)) {
        const std::u32string punct = U",.。，";
        s.chars.push_back(punct[rng.next_below(punct.size())]);
      } else {
        const size_t len = 1 + rng.next_below(4);
        for (size_t i = 0; i < len; ++i)
          s.chars.push_back(static_cast<char32_t>(0x4E00 + rng.next_below(40)));
      }
    }
    if (!(concat_segments(split_sentence(s)) == s)) inversion = false;
  }

  // Split-segment-concatenate pipeline with a gold oracle: F1 = 1.
  const SyntheticLanguage lang;
  const auto gold = lang.corpus(300, 6007);
  std::vector<SegmentedSentence> pred;
  pred.reserve(gold.size());
  for (const auto& g : gold) {
    SegmentFn oracle = [&](const std::u32string& part) {
      const size_t off = g.chars.find(part);
      SegmentedSentence out;
      out.chars = part;
      if (off == std::u32string::npos) return out;
      for (size_t b : g.boundaries)
        if (b > off && b < off + part.size()) out.boundaries.push_back(b - off);
      return out;
    };
    pred.push_back(segment_pipeline(oracle, g.chars));
  }
  const F1Report f1 = f1_score(pred, gold);
  char detail[100];
  std::snprintf(detail, sizeof(detail), "10000 inversions, oracle pipeline F1 %.4f", f1.f1);
  report(6, "augmentation roundtrips", inversion && f1.f1 == 1.0, detail);
}

// ---------------------------------------------------------------------------
// 7. Scorer validation.

void criterion_7() {
  bool pass = true;
  std::string detail;

  {
    SegmentedSentence g;
    g.chars = U"ABC";
    g.boundaries = {2};
    SegmentedSentence p;
    p.chars = U"ABC";
    p.boundaries = {1, 2};
    const F1Report identity = f1_score({g}, {g});
    if (identity.f1 != 1.0) {
      pass = false;
      detail = "identity != 1.0";
    }
    const F1Report mixed = f1_score({p}, {g});
    if (std::abs(mixed.f1 - 0.4) > 1e-15) {
      pass = false;
      detail = "{AB,C} vs {A,B,C} != 0.4";
    }
    // Micro vs macro distinction.
    SegmentedSentence one;
    one.chars = U"一";
    const F1Report micro = f1_score({one, p}, {one, g});
    if (std::abs(micro.f1 - 4.0 / 7.0) > 1e-15 || std::abs(micro.f1 - 0.7) < 1e-3) {
      pass = false;
      detail = "micro average does not differ from macro";
    }
  }

  {
    const SyntheticLanguage lang;
    const auto gold = lang.corpus(80, 7007);
    const BootstrapReport a = bootstrap_ci(gold, gold, 599, 99);
    const BootstrapReport b = bootstrap_ci(gold, gold, 599, 99);
    if (a.half_width_pct != 0.0 || a.render() != "100.00±0.00") {
      pass = false;
      detail = "pred=gold bootstrap is not ±0.00";
    }
    if (std::memcmp(&a.mean_pct, &b.mean_pct, sizeof(double)) != 0 ||
        std::memcmp(&a.half_width_pct, &b.half_width_pct, sizeof(double)) != 0 ||
        a.render() != b.render()) {
      pass = false;
      detail = "fixed seed does not reproduce bit-exactly";
    }
  }
  report(7, "scorer validation", pass, detail);
}

// ---------------------------------------------------------------------------
// 8. Relative-improvement direction on a 5k subsample (soft).

struct RunOutcome {
  double valid_ce = 0.0;
  double valid_f1 = 0.0;
};

RunOutcome run_small(const std::vector<SegmentedSentence>& train_corpus,
                     const std::vector<SegmentedSentence>& valid_corpus, const Vocabulary& v,
                     double k_delim, uint64_t seed) {
  SegModel model(model_config(v.size(), 24, 32), v, derive_seed(seed, "init"));
  const auto train_set = encode_all(train_corpus, v);
  const auto valid_set = encode_all(valid_corpus, v);

  TrainConfig cfg;
  cfg.learning_rate = 3e-3;
  cfg.batch_tokens = 512;
  cfg.max_epochs = 3;
  cfg.patience = 3;
  cfg.k_delim = k_delim;
  cfg.seed = seed;
  const TrainResult result = train(model, train_set, valid_set, cfg);

  auto net = result.best.restore();
  auto* seg = dynamic_cast<SegModel*>(net.get());
  std::vector<SegModel*> models = {seg};
  DecodeConfig dc;
  std::vector<SegmentedSentence> pred;
  pred.reserve(valid_corpus.size());
  for (const auto& s : valid_corpus) {
    SegmentedSentence p;
    p.chars = s.chars;
    p.boundaries = segment_long(s.chars, models, nullptr, v, dc).boundaries;
    pred.push_back(std::move(p));
  }
  RunOutcome out;
  out.valid_ce = result.best_valid_cost;
  out.valid_f1 = f1_score(pred, valid_corpus).f1;
  return out;
}

void criterion_8() {
  const SyntheticLanguage lang;
  const auto train_corpus = lang.corpus(5000, 8008);
  const auto valid_corpus = lang.corpus(400, 8009);
  const Vocabulary v = Vocabulary::build(train_corpus);

  const auto split_train = split_corpus(train_corpus);
  const bool size_ok = split_train.size() >= 2 * train_corpus.size();

  const RunOutcome base = run_small(train_corpus, valid_corpus, v, 1.0, 81);
  const RunOutcome split = run_small(split_train, valid_corpus, v, 1.0, 82);
  const RunOutcome k2 = run_small(train_corpus, valid_corpus, v, 2.0, 81);

  const bool f1_ok = split.valid_f1 >= base.valid_f1 - 0.002;  // 0.2 points
  const bool ce_ok = k2.valid_ce <= base.valid_ce + 0.002;     // nats
  char detail[200];
  std::snprintf(detail, sizeof(detail),
                "size %zu->%zu, F1 base %.4f split %.4f, CE k1 %.4f k2 %.4f",
                train_corpus.size(), split_train.size(), base.valid_f1, split.valid_f1,
                base.valid_ce, k2.valid_ce);
  report(8, "relative-improvement direction (soft)", size_ok && f1_ok && ce_ok, detail);
}

// ---------------------------------------------------------------------------
// 9. Checkpoint and run reproducibility.

void criterion_9() {
  const SyntheticLanguage lang;
  const auto corpus = lang.corpus(40, 9009);
  const Vocabulary v = Vocabulary::build(corpus);
  const auto data = encode_all(corpus, v);

  TrainConfig cfg;
  cfg.learning_rate = 2e-3;
  cfg.batch_tokens = 128;
  cfg.max_epochs = 3;
  cfg.patience = 5;
  cfg.seed = 91;

  ModelConfig mc = model_config(v.size(), 12, 16);
  mc.dropout_state = 0.2;
  SegModel m1(mc, v, 7);
  SegModel m2(mc, v, 7);
  const TrainResult r1 = train(m1, data, data, cfg);
  const TrainResult r2 = train(m2, data, data, cfg);

  bool trajectory_ok = r1.log.size() == r2.log.size();
  for (size_t i = 0; trajectory_ok && i < r1.log.size(); ++i)
    trajectory_ok = std::memcmp(&r1.log[i].valid_cost, &r2.log[i].valid_cost, sizeof(double)) == 0;
  bool params_ok = r1.best.params.size() == r2.best.params.size();
  for (size_t i = 0; params_ok && i < r1.best.params.size(); ++i)
    params_ok = std::memcmp(r1.best.params[i].data.data(), r2.best.params[i].data.data(),
                            r1.best.params[i].data.size() * sizeof(double)) == 0;

  // save -> load -> save reproduces the same bytes.
  segtrans::testutil::TempDir tmp;
  r1.best.save(tmp.file("a.ckpt"));
  const Checkpoint loaded = Checkpoint::load(tmp.file("a.ckpt"));
  loaded.save(tmp.file("b.ckpt"));
  const bool file_ok = segtrans::testutil::read_file(tmp.file("a.ckpt")) ==
                       segtrans::testutil::read_file(tmp.file("b.ckpt"));
  bool tensors_ok = loaded.params.size() == r1.best.params.size();
  for (size_t i = 0; tensors_ok && i < loaded.params.size(); ++i)
    tensors_ok = std::memcmp(loaded.params[i].data.data(), r1.best.params[i].data.data(),
                             loaded.params[i].data.size() * sizeof(double)) == 0;

  report(9, "checkpoint and run reproducibility",
         trajectory_ok && params_ok && file_ok && tensors_ok,
         trajectory_ok ? (params_ok ? "" : "parameters differ") : "trajectories differ");
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  if (g_failures == 0) {
    std::printf("acceptance: all criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criteria FAILED\n", g_failures);
  return 1;
}
