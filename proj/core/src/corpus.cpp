#include "segtrans/corpus.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "segtrans/rng.hpp"

namespace segtrans {

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::vector<SegmentedSentence> read_gold_corpus(const std::string& path, bool normalize) {
  std::vector<SegmentedSentence> corpus;
  for (const auto& line : read_lines(path)) {
    SegmentedSentence s = parse_segmented_line(line, normalize);
    if (!s.empty()) corpus.push_back(std::move(s));
  }
  return corpus;
}

std::vector<std::u32string> read_raw_corpus(const std::string& path) {
  std::vector<std::u32string> corpus;
  for (const auto& line : read_lines(path)) {
    std::u32string chars = normalize_text(line).chars;
    if (!chars.empty()) corpus.push_back(std::move(chars));
  }
  return corpus;
}

CorpusSplit split_train_valid(const std::vector<SegmentedSentence>& corpus, double ratio,
                              uint64_t seed) {
  if (corpus.size() < 2) throw std::invalid_argument("split_train_valid: need at least 2 sentences");
  if (!(ratio > 0.0 && ratio < 1.0))
    throw std::invalid_argument("split_train_valid: ratio must be in (0, 1)");

  std::vector<size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  const size_t n_valid = std::max<size_t>(
      1, static_cast<size_t>(std::llround(ratio * static_cast<double>(corpus.size()))));

  CorpusSplit split;
  split.seed = seed;
  split.valid.reserve(n_valid);
  split.train.reserve(corpus.size() - n_valid);
  for (size_t i = 0; i < order.size(); ++i) {
    if (i < n_valid)
      split.valid.push_back(corpus[order[i]]);
    else
      split.train.push_back(corpus[order[i]]);
  }
  return split;
}

void write_bakeoff(const std::vector<SegmentedSentence>& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  for (const auto& s : corpus) out << s.to_bakeoff() << '\n';
}

}  // namespace segtrans
