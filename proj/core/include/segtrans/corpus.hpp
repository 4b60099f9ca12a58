#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "segtrans/text.hpp"

namespace segtrans {

// Train/valid partition of a gold corpus.
struct CorpusSplit {
  std::vector<SegmentedSentence> train;
  std::vector<SegmentedSentence> valid;
  uint64_t seed = 0;
};

// Reads a gold bakeoff file (one sentence per line, space-separated words).
// Whitespace-only lines are dropped; they carry no segmentation signal.
std::vector<SegmentedSentence> read_gold_corpus(const std::string& path, bool normalize = true);

// Reads a raw file (one unsegmented sentence per line) into normalized
// character sequences; empty lines are dropped.
std::vector<std::u32string> read_raw_corpus(const std::string& path);

// Seeded shuffle then cut: |valid| = max(1, round(ratio * n)). Requires
// n >= 2 and 0 < ratio < 1.
CorpusSplit split_train_valid(const std::vector<SegmentedSentence>& corpus, double ratio,
                              uint64_t seed);

void write_bakeoff(const std::vector<SegmentedSentence>& corpus, const std::string& path);

}  // namespace segtrans
