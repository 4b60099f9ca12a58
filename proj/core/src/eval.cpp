#include "segtrans/eval.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "segtrans/rng.hpp"

namespace segtrans {

namespace {

double f1_from(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

F1Report report_from_counts(int64_t correct, int64_t pred, int64_t gold) {
  F1Report r;
  r.correct_words = correct;
  r.pred_words = pred;
  r.gold_words = gold;
  r.precision = pred > 0 ? static_cast<double>(correct) / static_cast<double>(pred) : 0.0;
  r.recall = gold > 0 ? static_cast<double>(correct) / static_cast<double>(gold) : 0.0;
  r.f1 = f1_from(r.precision, r.recall);
  return r;
}

std::string format_pct(double v, int decimals) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

}  // namespace

SentenceCounts count_matches(const SegmentedSentence& pred, const SegmentedSentence& gold) {
  const auto ps = pred.word_spans();
  const auto gs = gold.word_spans();
  SentenceCounts c;
  c.pred = static_cast<int64_t>(ps.size());
  c.gold = static_cast<int64_t>(gs.size());
  // Both span lists are sorted by start; a single merge pass finds the
  // identical intervals.
  size_t i = 0, j = 0;
  while (i < ps.size() && j < gs.size()) {
    if (ps[i] == gs[j]) {
      ++c.correct;
      ++i;
      ++j;
    } else if (ps[i].second <= gs[j].second) {
      ++i;
    } else {
      ++j;
    }
  }
  return c;
}

F1Report f1_score(const std::vector<SegmentedSentence>& pred,
                  const std::vector<SegmentedSentence>& gold) {
  if (pred.size() != gold.size())
    throw std::invalid_argument("f1_score: prediction has " + std::to_string(pred.size()) +
                                " sentences, gold has " + std::to_string(gold.size()));
  int64_t correct = 0, pred_words = 0, gold_words = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].chars != gold[i].chars)
      throw std::invalid_argument("f1_score: character mismatch at line " +
                                  std::to_string(i + 1));
    const SentenceCounts c = count_matches(pred[i], gold[i]);
    correct += c.correct;
    pred_words += c.pred;
    gold_words += c.gold;
  }
  return report_from_counts(correct, pred_words, gold_words);
}

std::string F1Report::table_row() const {
  return "P " + format_pct(precision * 100.0, 1) + "  R " + format_pct(recall * 100.0, 1) +
         "  F1 " + format_pct(f1 * 100.0, 1);
}

std::string F1Report::to_kv() const {
  std::string out;
  out += "precision=" + format_pct(precision, 6) + "\n";
  out += "recall=" + format_pct(recall, 6) + "\n";
  out += "f1=" + format_pct(f1, 6) + "\n";
  out += "gold_words=" + std::to_string(gold_words) + "\n";
  out += "pred_words=" + std::to_string(pred_words) + "\n";
  out += "correct_words=" + std::to_string(correct_words) + "\n";
  return out;
}

BootstrapReport bootstrap_ci(const std::vector<SegmentedSentence>& pred,
                             const std::vector<SegmentedSentence>& gold, int resamples,
                             uint64_t seed, bool include_original) {
  if (resamples < 1) throw std::invalid_argument("bootstrap_ci: resamples must be >= 1");
  // Validates alignment as a side effect.
  const F1Report point = f1_score(pred, gold);

  const size_t n = gold.size();
  std::vector<SentenceCounts> per_sentence(n);
  for (size_t i = 0; i < n; ++i) per_sentence[i] = count_matches(pred[i], gold[i]);

  std::vector<double> scores;
  scores.reserve(static_cast<size_t>(resamples) + 1);
  if (include_original) scores.push_back(point.f1);
  for (int r = 0; r < resamples; ++r) {
    Rng rng(derive_seed(seed, "bootstrap-" + std::to_string(r)));
    int64_t correct = 0, pw = 0, gw = 0;
    for (size_t i = 0; i < n; ++i) {
      const SentenceCounts& c = per_sentence[rng.next_below(n)];
      correct += c.correct;
      pw += c.pred;
      gw += c.gold;
    }
    const double p = pw > 0 ? static_cast<double>(correct) / static_cast<double>(pw) : 0.0;
    const double rc = gw > 0 ? static_cast<double>(correct) / static_cast<double>(gw) : 0.0;
    scores.push_back(f1_from(p, rc));
  }

  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= static_cast<double>(scores.size());
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  var = scores.size() > 1 ? var / static_cast<double>(scores.size() - 1) : 0.0;

  BootstrapReport report;
  report.mean_pct = mean * 100.0;
  report.half_width_pct = 2.0 * std::sqrt(var) * 100.0;
  report.resamples = resamples;
  report.seed = seed;
  report.include_original = include_original;
  return report;
}

std::string BootstrapReport::render() const {
  return format_pct(mean_pct, 2) + "±" + format_pct(half_width_pct, 2);
}

std::string BootstrapReport::to_kv() const {
  std::string out;
  out += "f1_mean_pct=" + format_pct(mean_pct, 4) + "\n";
  out += "f1_half_width_pct=" + format_pct(half_width_pct, 4) + "\n";
  out += "resamples=" + std::to_string(resamples) + "\n";
  out += "seed=" + std::to_string(seed) + "\n";
  out += "include_original=" + std::string(include_original ? "1" : "0") + "\n";
  return out;
}

}  // namespace segtrans
