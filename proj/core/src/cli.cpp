#include "segtrans/cli.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "segtrans/augment.hpp"
#include "segtrans/checkpoint.hpp"
#include "segtrans/corpus.hpp"
#include "segtrans/decode.hpp"
#include "segtrans/eval.hpp"
#include "segtrans/gradcheck.hpp"
#include "segtrans/manifest.hpp"
#include "segtrans/train.hpp"
#include "segtrans/utf8.hpp"

namespace segtrans {

namespace {

struct CommonOpts {
  uint64_t seed = 1;
  std::string manifest_path;
};

struct ConfigFileOpt {
  std::string path;
};

void add_common(CLI::App* sub, CommonOpts& opts, ConfigFileOpt& cfg_file) {
  sub->add_option("--seed", opts.seed, "Root seed; every random draw derives from it");
  sub->add_option("--manifest", opts.manifest_path, "Manifest output path override");
  const char* env_config = std::getenv("SEGTRANS_CONFIG");
  sub->add_option("--config", cfg_file.path,
                  "Flat key=value config file; command-line flags override it")
      ->default_val(env_config ? env_config : "");
}

// Applies a flat key=value file to the subcommand's options. Values fill in
// only where the command line did not: defaults < config file < flags.
void apply_config_file(CLI::App* sub, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // Trim surrounding blanks.
    const size_t b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const size_t e = line.find_last_not_of(" \t");
    line = line.substr(b, e - b + 1);
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    while (!value.empty() && (value.front() == ' ' || value.front() == '\t')) value.erase(0, 1);
    if (key == "config") continue;
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (!opt)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unknown key '" + key +
                               "'");
    if (opt->count() > 0) continue;  // flag given on the command line wins
    opt->add_result(value);
    opt->run_callback();
  }
}

std::string default_manifest(const CommonOpts& opts, const std::string& primary_output,
                             const std::string& command) {
  if (!opts.manifest_path.empty()) return opts.manifest_path;
  if (!primary_output.empty()) return primary_output + ".manifest";
  return "segtrans_" + command + ".manifest";
}

std::vector<std::string> read_all_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

// A dataset file is "weighted" when its lines carry tab-separated
// weight/origin fields; plain bakeoff lines never contain tabs.
bool sniff_weighted(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) return line.find('\t') != std::string::npos;
  return false;
}

std::vector<WeightedExample> load_examples(const std::string& path, const Vocabulary& vocab) {
  std::vector<WeightedExample> out;
  if (sniff_weighted(path)) {
    const WeightedSentences ws = read_weighted_dataset(path);
    out.reserve(ws.sentences.size());
    for (size_t i = 0; i < ws.sentences.size(); ++i)
      out.push_back(to_weighted_example(ws.sentences[i], vocab, ws.weights[i], ws.origins[i]));
  } else {
    for (const auto& s : read_gold_corpus(path))
      out.push_back(to_weighted_example(s, vocab));
  }
  if (out.empty()) throw std::runtime_error("no sentences in " + path);
  return out;
}

std::u32string parse_split_chars(const std::string& utf8) {
  return utf8.empty() ? default_split_chars() : decode_utf8(utf8);
}

// ---- preprocess ----------------------------------------------------------

struct PreprocessOpts {
  CommonOpts common;
  std::string gold_path;
  std::string out_dir;
  double ratio = 0.01;
};

int run_preprocess(const PreprocessOpts& o) {
  const auto corpus = read_gold_corpus(o.gold_path);
  const Vocabulary vocab = Vocabulary::build(corpus);
  const CorpusSplit split = split_train_valid(corpus, o.ratio, derive_seed(o.common.seed, "split"));

  const std::string train_path = o.out_dir + "/train.txt";
  const std::string valid_path = o.out_dir + "/valid.txt";
  const std::string vocab_path = o.out_dir + "/vocab.txt";
  write_bakeoff(split.train, train_path);
  write_bakeoff(split.valid, valid_path);
  vocab.save(vocab_path);

  RunManifest manifest("preprocess");
  manifest.set("seed", o.common.seed);
  manifest.set("ratio", o.ratio);
  manifest.set("sentences", static_cast<int64_t>(corpus.size()));
  manifest.set("train_sentences", static_cast<int64_t>(split.train.size()));
  manifest.set("valid_sentences", static_cast<int64_t>(split.valid.size()));
  manifest.set("vocab_size", static_cast<int64_t>(vocab.size()));
  manifest.add_input(o.gold_path);
  manifest.add_output(train_path);
  manifest.add_output(valid_path);
  manifest.add_output(vocab_path);
  manifest.write(default_manifest(o.common, o.out_dir + "/preprocess", "preprocess"));

  std::cout << "sentences=" << corpus.size() << " train=" << split.train.size()
            << " valid=" << split.valid.size() << " vocab=" << vocab.size() << '\n';
  return 0;
}

// ---- augment -------------------------------------------------------------

struct AugmentOpts {
  CommonOpts common;
  std::string gold_path;
  std::string out_path;
  bool do_split = false;
  bool do_unsup = false;
  double gold_weight = 40.0;
  int max_word_len = 4;
  int em_iters = 5;
  std::string raw_path;          // optional corpus to fit the segmenter on
  std::string import_unsup;      // externally produced segmentations
  std::string export_unsup;
  std::string split_chars_utf8;
};

int run_augment(const AugmentOpts& o) {
  if (!o.do_split && !o.do_unsup && o.import_unsup.empty())
    throw std::runtime_error("augment: nothing to do (pass --split and/or --unsup)");
  const std::u32string split_chars = parse_split_chars(o.split_chars_utf8);
  const auto gold = read_gold_corpus(o.gold_path);
  if (gold.empty()) throw std::runtime_error("no sentences in " + o.gold_path);

  std::vector<SegmentedSentence> gold_side = o.do_split ? split_corpus(gold, split_chars) : gold;

  RunManifest manifest("augment");
  manifest.set("seed", o.common.seed);
  manifest.set("split", static_cast<int64_t>(o.do_split ? 1 : 0));
  manifest.set("unsup", static_cast<int64_t>(o.do_unsup ? 1 : 0));
  manifest.add_input(o.gold_path);

  const bool weighted = o.do_unsup || !o.import_unsup.empty();
  if (!weighted) {
    write_bakeoff(gold_side, o.out_path);
    manifest.set("examples", static_cast<int64_t>(gold_side.size()));
  } else {
    std::vector<SegmentedSentence> unsup_segs;
    if (!o.import_unsup.empty()) {
      unsup_segs = read_gold_corpus(o.import_unsup);
      manifest.add_input(o.import_unsup);
    } else {
      std::vector<std::u32string> fit_corpus;
      if (!o.raw_path.empty()) {
        fit_corpus = read_raw_corpus(o.raw_path);
        manifest.add_input(o.raw_path);
      } else {
        for (const auto& s : gold) fit_corpus.push_back(s.chars);
      }
      const auto segmenter = fit_unsupervised(fit_corpus, o.max_word_len, o.em_iters);
      unsup_segs.reserve(gold.size());
      for (const auto& s : gold) unsup_segs.push_back(segmenter->segment(s.chars));
    }
    if (!o.export_unsup.empty()) {
      write_bakeoff(unsup_segs, o.export_unsup);
      manifest.add_output(o.export_unsup);
    }
    if (o.do_split) unsup_segs = split_corpus(unsup_segs, split_chars);

    std::vector<SegmentedSentence> sentences;
    std::vector<double> weights;
    std::vector<WeightedExample::Origin> origins;
    if (o.gold_weight < 1.0) throw std::runtime_error("augment: gold weight must dominate (>= 1)");
    for (const auto& s : gold_side) {
      sentences.push_back(s);
      weights.push_back(o.gold_weight);
      origins.push_back(o.do_split ? WeightedExample::Origin::split
                                   : WeightedExample::Origin::gold);
    }
    for (const auto& s : unsup_segs) {
      sentences.push_back(s);
      weights.push_back(1.0);
      origins.push_back(WeightedExample::Origin::unsupervised);
    }
    write_weighted_dataset(sentences, weights, origins, o.out_path);
    manifest.set("examples", static_cast<int64_t>(sentences.size()));
    manifest.set("gold_weight", o.gold_weight);
    manifest.set("max_word_len", static_cast<int64_t>(o.max_word_len));
  }
  manifest.add_output(o.out_path);
  manifest.write(default_manifest(o.common, o.out_path, "augment"));
  std::cout << "wrote " << o.out_path << '\n';
  return 0;
}

// ---- train / finetune ----------------------------------------------------

struct TrainOpts {
  CommonOpts common;
  std::string train_path;
  std::string valid_path;
  std::string vocab_path;
  std::string out_path;
  std::string log_path;
  std::string from_path;  // finetune only
  std::string arch = "seg";
  ModelConfig model;
  TrainConfig cfg;
};

void add_train_config_flags(CLI::App* sub, TrainOpts& o) {
  sub->add_option("--lr", o.cfg.learning_rate, "Adam learning rate");
  sub->add_option("--beta1", o.cfg.adam_beta1, "Adam beta1");
  sub->add_option("--beta2", o.cfg.adam_beta2, "Adam beta2");
  sub->add_option("--adam-eps", o.cfg.adam_eps, "Adam epsilon");
  sub->add_option("--batch-tokens", o.cfg.batch_tokens, "Token budget per mini-batch");
  sub->add_option("--patience", o.cfg.patience,
                  "Consecutive non-improving validations before stopping");
  sub->add_option("--k-delim", o.cfg.k_delim, "Delimiter weight in the objective");
  sub->add_option("--max-epochs", o.cfg.max_epochs, "Epoch cap");
  sub->add_option("--eval-every", o.cfg.eval_every,
                  "Updates between validations (0 = once per epoch)");
  sub->add_option("--clip-norm", o.cfg.clip_norm, "Global gradient norm clip (0 disables)");
  sub->add_flag("--save-moments", o.cfg.save_moments, "Store Adam moments in the checkpoint");
  sub->add_flag("--f32", o.cfg.float32, "Round primitive results to single precision");
}

int run_train_like(TrainOpts& o, bool finetune) {
  o.cfg.seed = o.common.seed;

  std::unique_ptr<Network> net;
  Vocabulary vocab;
  std::optional<Checkpoint> start;
  if (finetune) {
    start = Checkpoint::load(o.from_path);
    vocab = start->vocabulary;
  } else {
    vocab = Vocabulary::load(o.vocab_path);
    o.model.vocab_size = vocab.size();
    net = make_network(o.arch, o.model, vocab, derive_seed(o.common.seed, "init"));
  }

  const auto dataset = load_examples(o.train_path, vocab);
  const auto valid = load_examples(o.valid_path, vocab);

  std::ofstream log_file;
  std::ostream* log_stream = &std::cout;
  if (!o.log_path.empty()) {
    log_file.open(o.log_path, std::ios::binary);
    if (!log_file) throw std::runtime_error("cannot write log: " + o.log_path);
    log_stream = &log_file;
  }

  TrainResult result = finetune ? fine_tune(*start, vocab, dataset, valid, o.cfg, log_stream)
                                : train(*net, dataset, valid, o.cfg, log_stream);
  result.best.save(o.out_path);

  RunManifest manifest(finetune ? "finetune" : "train");
  manifest.set("seed", o.common.seed);
  manifest.set("arch", finetune ? start->arch : o.arch);
  manifest.set("k_delim", o.cfg.k_delim);
  manifest.set("learning_rate", o.cfg.learning_rate);
  manifest.set("batch_tokens", static_cast<int64_t>(o.cfg.batch_tokens));
  manifest.set("patience", static_cast<int64_t>(o.cfg.patience));
  manifest.set("updates", result.updates);
  manifest.set("epochs", result.epochs);
  manifest.set("best_valid_cost", result.best_valid_cost);
  if (finetune) manifest.add_input(o.from_path);
  manifest.add_input(o.train_path);
  manifest.add_input(o.valid_path);
  if (!finetune) manifest.add_input(o.vocab_path);
  manifest.add_output(o.out_path);
  if (!o.log_path.empty()) manifest.add_output(o.log_path);
  manifest.write(default_manifest(o.common, o.out_path, finetune ? "finetune" : "train"));

  std::cout << "best_valid_cost=" << result.best_valid_cost << " updates=" << result.updates
            << " epochs=" << result.epochs << '\n';
  return 0;
}

// ---- segment ---------------------------------------------------------------

struct SegmentOpts {
  CommonOpts common;
  std::vector<std::string> model_paths;
  std::string lm_path;
  std::string in_path;
  std::string out_path;
  DecodeConfig decode;
  bool unconstrained = false;
  bool no_split = false;
  std::string split_chars_utf8;
  int jobs = 1;
};

int run_segment(const SegmentOpts& o) {
  if (o.model_paths.empty()) throw std::runtime_error("segment: at least one --model required");
  std::vector<std::unique_ptr<Network>> owners;
  std::vector<SegModel*> models;
  for (const auto& path : o.model_paths) {
    Checkpoint c = Checkpoint::load(path);
    if (c.arch != "seg")
      throw std::runtime_error("segment: " + path + " is not a segmenter checkpoint");
    owners.push_back(c.restore());
    models.push_back(static_cast<SegModel*>(owners.back().get()));
  }
  const Vocabulary& vocab = owners.front()->vocab();
  for (const auto& owner : owners)
    if (!(owner->vocab() == vocab))
      throw std::runtime_error("segment: ensemble checkpoints have different vocabularies");

  std::unique_ptr<Network> lm_owner;
  CharLM* lm = nullptr;
  if (!o.lm_path.empty()) {
    Checkpoint c = Checkpoint::load(o.lm_path);
    if (c.arch != "lm")
      throw std::runtime_error("segment: " + o.lm_path + " is not a language model checkpoint");
    lm_owner = c.restore();
    if (!(lm_owner->vocab() == vocab))
      throw std::runtime_error("segment: language model vocabulary differs");
    lm = static_cast<CharLM*>(lm_owner.get());
  }

  DecodeConfig cfg = o.decode;
  cfg.constrained = !o.unconstrained;
  cfg.validate();
  const std::u32string split_chars = parse_split_chars(o.split_chars_utf8);

  std::ifstream in_file;
  std::istream* in = &std::cin;
  if (!o.in_path.empty()) {
    in_file.open(o.in_path, std::ios::binary);
    if (!in_file) throw std::runtime_error("cannot open file: " + o.in_path);
    in = &in_file;
  }
  const std::vector<std::string> lines = read_all_lines(*in);

  std::vector<std::string> results(lines.size());
  const int jobs = std::max(1, o.jobs);
  if (jobs == 1) {
    for (size_t i = 0; i < lines.size(); ++i)
      results[i] = segment_line(lines[i], models, lm, vocab, cfg, !o.no_split, split_chars);
  } else {
    // Sentences are independent; threads pull indices from a shared counter
    // and results land by index, so output order matches input order.
    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::string error_message;
    std::mutex error_mutex;
    auto worker = [&]() {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= lines.size() || failed.load()) return;
        try {
          results[i] = segment_line(lines[i], models, lm, vocab, cfg, !o.no_split, split_chars);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          failed.store(true);
          if (error_message.empty()) error_message = e.what();
          return;
        }
      }
    };
    std::vector<std::thread> threads;
    for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (failed.load()) throw std::runtime_error(error_message);
  }

  std::ofstream out_file;
  std::ostream* out = &std::cout;
  if (!o.out_path.empty()) {
    out_file.open(o.out_path, std::ios::binary);
    if (!out_file) throw std::runtime_error("cannot write file: " + o.out_path);
    out = &out_file;
  }
  for (const auto& r : results) *out << r << '\n';
  out->flush();

  RunManifest manifest("segment");
  manifest.set("seed", o.common.seed);
  manifest.set("beam_size", static_cast<int64_t>(cfg.beam_size));
  manifest.set("constrained", static_cast<int64_t>(cfg.constrained ? 1 : 0));
  manifest.set("split_long", static_cast<int64_t>(o.no_split ? 0 : 1));
  manifest.set("jobs", static_cast<int64_t>(jobs));
  manifest.set("lines", static_cast<int64_t>(lines.size()));
  for (const auto& path : o.model_paths) manifest.add_input(path);
  if (!o.lm_path.empty()) manifest.add_input(o.lm_path);
  if (!o.in_path.empty()) manifest.add_input(o.in_path);
  if (!o.out_path.empty()) manifest.add_output(o.out_path);
  manifest.write(default_manifest(o.common, o.out_path, "segment"));
  return 0;
}

// ---- score / bootstrap -----------------------------------------------------

struct ScoreOpts {
  CommonOpts common;
  std::string pred_path;
  std::string gold_path;
  bool normalized = false;
  int resamples = 599;
  bool exclude_original = false;
};

// Scoring parses surfaces verbatim by default: the bakeoff scorer compares
// words on the raw surface, and gold may split inside a digit/letter run
// where normalized parsing could not align.
std::pair<std::vector<SegmentedSentence>, std::vector<SegmentedSentence>> load_score_pair(
    const ScoreOpts& o) {
  auto pred = read_gold_corpus(o.pred_path, o.normalized);
  auto gold = read_gold_corpus(o.gold_path, o.normalized);
  return {std::move(pred), std::move(gold)};
}

int run_score(const ScoreOpts& o) {
  const auto [pred, gold] = load_score_pair(o);
  const F1Report report = f1_score(pred, gold);
  std::cout << report.to_kv() << report.table_row() << '\n';
  RunManifest manifest("score");
  manifest.set("f1", report.f1);
  manifest.set("normalized", static_cast<int64_t>(o.normalized ? 1 : 0));
  manifest.add_input(o.pred_path);
  manifest.add_input(o.gold_path);
  manifest.write(default_manifest(o.common, "", "score"));
  return 0;
}

int run_bootstrap(const ScoreOpts& o) {
  const auto [pred, gold] = load_score_pair(o);
  const BootstrapReport report =
      bootstrap_ci(pred, gold, o.resamples, o.common.seed, !o.exclude_original);
  std::cout << report.to_kv() << report.render() << '\n';
  RunManifest manifest("bootstrap");
  manifest.set("seed", o.common.seed);
  manifest.set("resamples", static_cast<int64_t>(o.resamples));
  manifest.set("f1_mean_pct", report.mean_pct);
  manifest.set("f1_half_width_pct", report.half_width_pct);
  manifest.add_input(o.pred_path);
  manifest.add_input(o.gold_path);
  manifest.write(default_manifest(o.common, "", "bootstrap"));
  return 0;
}

// ---- gradcheck -------------------------------------------------------------

struct GradcheckOpts {
  CommonOpts common;
  double h = 1e-5;
  int coords = 100;
  double tolerance = 1e-4;
};

int run_gradcheck(const GradcheckOpts& o) {
  // Toy model over a handful of characters; dropout off so the loss is
  // deterministic in the parameters.
  std::vector<SegmentedSentence> corpus(1);
  corpus[0].chars = U"一二三";
  const Vocabulary vocab = Vocabulary::build(corpus);
  ModelConfig mc;
  mc.vocab_size = vocab.size();
  mc.embed_dim = 8;
  mc.hidden_dim = 12;
  mc.dropout_state = 0.0;
  mc.dropout_src = 0.0;
  SegModel model(mc, vocab, derive_seed(o.common.seed, "gradcheck-init"));

  SegmentedSentence s;
  s.chars = U"一二三一";
  s.boundaries = {1, 3};
  const WeightedExample ex = to_weighted_example(s, vocab, 1.5);

  const auto report = gradient_check(
      [&](Graph& g) { return model.example_loss(g, ex, 2.0); }, model.parameters(), o.h,
      o.coords, derive_seed(o.common.seed, "gradcheck"));
  for (const auto& [name, err] : report.per_param)
    std::cout << name << " max_rel_err=" << err << '\n';
  std::cout << "max_rel_err=" << report.max_rel_err << " worst=" << report.worst_param << '\n';
  return report.max_rel_err <= o.tolerance ? 0 : 1;
}

}  // namespace

int cli_run(int argc, const char* const* argv) {
  CLI::App app{"Word segmentation as character-level translation"};
  app.require_subcommand(1);

  PreprocessOpts pre;
  ConfigFileOpt pre_cfg, aug_cfg, tr_cfg, ft_cfg, seg_cfg, sc_cfg, bs_cfg, gc_cfg;
  CLI::App* sub_pre = app.add_subcommand("preprocess", "Normalize, split train/valid, build vocabulary");
  sub_pre->add_option("--gold", pre.gold_path, "Gold bakeoff corpus")->required();
  sub_pre->add_option("--out-dir", pre.out_dir, "Output directory")->required();
  sub_pre->add_option("--ratio", pre.ratio, "Validation fraction");
  add_common(sub_pre, pre.common, pre_cfg);

  AugmentOpts aug;
  CLI::App* sub_aug = app.add_subcommand("augment", "Sentence splitting and/or unsupervised augmentation");
  sub_aug->add_option("--gold", aug.gold_path, "Gold bakeoff corpus")->required();
  sub_aug->add_option("--out", aug.out_path, "Output dataset path")->required();
  sub_aug->add_flag("--split", aug.do_split, "Split sentences at comma/period");
  sub_aug->add_flag("--unsup", aug.do_unsup, "Fit the unsupervised segmenter and add its output");
  sub_aug->add_option("--gold-weight", aug.gold_weight, "Sentence weight on gold data");
  sub_aug->add_option("--max-word-len", aug.max_word_len, "Unsupervised maximum word length");
  sub_aug->add_option("--em-iters", aug.em_iters, "EM iterations for the unigram model");
  sub_aug->add_option("--raw", aug.raw_path, "Raw corpus to fit the segmenter on");
  sub_aug->add_option("--import-unsup", aug.import_unsup,
                      "Import external unsupervised segmentations (bakeoff format)");
  sub_aug->add_option("--export-unsup", aug.export_unsup,
                      "Export the unsupervised segmentations (bakeoff format)");
  sub_aug->add_option("--split-chars", aug.split_chars_utf8, "Split punctuation set");
  add_common(sub_aug, aug.common, aug_cfg);

  TrainOpts tr;
  CLI::App* sub_train = app.add_subcommand("train", "Train a segmenter or character LM");
  sub_train->add_option("--train", tr.train_path, "Training data (bakeoff or weighted)")->required();
  sub_train->add_option("--valid", tr.valid_path, "Validation data (bakeoff)")->required();
  sub_train->add_option("--vocab", tr.vocab_path, "Vocabulary file")->required();
  sub_train->add_option("--out", tr.out_path, "Checkpoint output path")->required();
  sub_train->add_option("--log", tr.log_path, "Training log path (default stdout)");
  sub_train->add_option("--arch", tr.arch, "Network: seg or lm")
      ->check(CLI::IsMember({"seg", "lm"}));
  sub_train->add_option("--embed-dim", tr.model.embed_dim, "Embedding dimension");
  sub_train->add_option("--hidden-dim", tr.model.hidden_dim, "Hidden dimension");
  sub_train->add_option("--enc-depth", tr.model.enc_depth, "Encoder depth");
  sub_train->add_option("--dec-depth", tr.model.dec_depth, "Decoder depth");
  sub_train->add_option("--dropout-state", tr.model.dropout_state, "Dropout between RNN states");
  sub_train->add_option("--dropout-state-enc", tr.model.dropout_state_enc,
                        "Encoder-side override (negative = shared value)");
  sub_train->add_option("--dropout-state-dec", tr.model.dropout_state_dec,
                        "Decoder-side override (negative = shared value)");
  sub_train->add_option("--dropout-src", tr.model.dropout_src, "Whole source token dropout");
  sub_train->add_option("--label-smoothing", tr.model.label_smoothing, "Label smoothing epsilon");
  sub_train->add_flag("!--no-tied-embeddings", tr.model.tied_embeddings,
                      "Untie input/output embeddings");
  sub_train->add_flag("!--no-layer-norm", tr.model.layer_norm, "Disable layer normalization");
  add_train_config_flags(sub_train, tr);
  add_common(sub_train, tr.common, tr_cfg);

  TrainOpts ft;
  CLI::App* sub_ft = app.add_subcommand("finetune", "Continue training from a checkpoint on gold data");
  sub_ft->add_option("--from", ft.from_path, "Starting checkpoint")->required();
  sub_ft->add_option("--train", ft.train_path, "Training data")->required();
  sub_ft->add_option("--valid", ft.valid_path, "Validation data")->required();
  sub_ft->add_option("--out", ft.out_path, "Checkpoint output path")->required();
  sub_ft->add_option("--log", ft.log_path, "Training log path (default stdout)");
  add_train_config_flags(sub_ft, ft);
  add_common(sub_ft, ft.common, ft_cfg);

  SegmentOpts seg;
  CLI::App* sub_seg = app.add_subcommand("segment", "Segment raw text");
  sub_seg->add_option("--model,--ensemble", seg.model_paths, "Checkpoint(s); repeat to ensemble")
      ->required();
  sub_seg->add_option("--lm", seg.lm_path, "Character LM checkpoint to ensemble");
  sub_seg->add_option("--beam", seg.decode.beam_size, "Beam size");
  sub_seg->add_flag("--unconstrained", seg.unconstrained,
                    "Free decoding (divergent outputs become errors)");
  sub_seg->add_flag("--length-norm", seg.decode.length_normalization,
                    "Length-normalized hypothesis scores");
  sub_seg->add_option("--max-len-factor", seg.decode.max_len_factor,
                      "Unconstrained output length cap, relative to source");
  sub_seg->add_flag("--no-split", seg.no_split, "Do not split long sentences at punctuation");
  sub_seg->add_option("--split-chars", seg.split_chars_utf8, "Split punctuation set");
  sub_seg->add_option("--jobs", seg.jobs, "Parallel decoding threads");
  sub_seg->add_option("--in", seg.in_path, "Input file (default stdin)");
  sub_seg->add_option("--out", seg.out_path, "Output file (default stdout)");
  add_common(sub_seg, seg.common, seg_cfg);

  ScoreOpts sc;
  CLI::App* sub_score = app.add_subcommand("score", "Word F1 against a gold file");
  sub_score->add_option("--pred", sc.pred_path, "Predicted segmentation")->required();
  sub_score->add_option("--gold", sc.gold_path, "Gold segmentation")->required();
  sub_score->add_flag("--normalized", sc.normalized, "Score on normalized characters");
  add_common(sub_score, sc.common, sc_cfg);

  ScoreOpts bs;
  CLI::App* sub_bs = app.add_subcommand("bootstrap", "Bootstrap confidence interval for F1");
  sub_bs->add_option("--pred", bs.pred_path, "Predicted segmentation")->required();
  sub_bs->add_option("--gold", bs.gold_path, "Gold segmentation")->required();
  sub_bs->add_option("--resamples", bs.resamples, "Number of resampled test sets");
  sub_bs->add_flag("--exclude-original", bs.exclude_original,
                   "Statistics over resamples only, without the original set");
  sub_bs->add_flag("--normalized", bs.normalized, "Score on normalized characters");
  add_common(sub_bs, bs.common, bs_cfg);

  GradcheckOpts gc;
  CLI::App* sub_gc = app.add_subcommand("gradcheck", "Finite-difference check on a toy model");
  sub_gc->add_option("--step", gc.h, "Central difference step");
  sub_gc->add_option("--coords", gc.coords, "Sampled coordinates per tensor");
  sub_gc->add_option("--tolerance", gc.tolerance, "Maximum relative error accepted");
  add_common(sub_gc, gc.common, gc_cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    std::cerr << app.help();
    return 2;
  }

  try {
    if (sub_pre->parsed()) { apply_config_file(sub_pre, pre_cfg.path); return run_preprocess(pre); }
    if (sub_aug->parsed()) { apply_config_file(sub_aug, aug_cfg.path); return run_augment(aug); }
    if (sub_train->parsed()) { apply_config_file(sub_train, tr_cfg.path); return run_train_like(tr, false); }
    if (sub_ft->parsed()) { apply_config_file(sub_ft, ft_cfg.path); return run_train_like(ft, true); }
    if (sub_seg->parsed()) { apply_config_file(sub_seg, seg_cfg.path); return run_segment(seg); }
    if (sub_score->parsed()) { apply_config_file(sub_score, sc_cfg.path); return run_score(sc); }
    if (sub_bs->parsed()) { apply_config_file(sub_bs, bs_cfg.path); return run_bootstrap(bs); }
    if (sub_gc->parsed()) { apply_config_file(sub_gc, gc_cfg.path); return run_gradcheck(gc); }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace segtrans
