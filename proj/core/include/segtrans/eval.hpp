#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "segtrans/text.hpp"

namespace segtrans {

// Word-level scores with the counts they came from. Micro-averaged: counts
// are summed over the corpus before the ratios are taken.
struct F1Report {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int64_t gold_words = 0;
  int64_t pred_words = 0;
  int64_t correct_words = 0;

  // Human table row, percentages with one decimal.
  std::string table_row() const;
  // Machine-readable key=value lines.
  std::string to_kv() const;
};

// Per-sentence matched/pred/gold word counts; the building block both the
// point score and the bootstrap reuse.
struct SentenceCounts {
  int64_t correct = 0;
  int64_t pred = 0;
  int64_t gold = 0;
};
SentenceCounts count_matches(const SegmentedSentence& pred, const SegmentedSentence& gold);

// Requires equal lengths and per-index identical character sequences;
// errors name the offending line (1-based).
F1Report f1_score(const std::vector<SegmentedSentence>& pred,
                  const std::vector<SegmentedSentence>& gold);

struct BootstrapReport {
  double mean_pct = 0.0;        // mean F1 over measurements, percent
  double half_width_pct = 0.0;  // 2 standard deviations, percent
  int resamples = 0;
  uint64_t seed = 0;
  bool include_original = true;

  // "97.61±0.16"-style rendering, two decimals.
  std::string render() const;
  std::string to_kv() const;
};

// Draws `resamples` test sets of the same size by resampling sentences with
// replacement; each resample's indices come from a sub-generator derived
// from (seed, resample index). The original test set is included as one
// more measurement unless include_original is false.
BootstrapReport bootstrap_ci(const std::vector<SegmentedSentence>& pred,
                             const std::vector<SegmentedSentence>& gold, int resamples,
                             uint64_t seed, bool include_original = true);

}  // namespace segtrans
