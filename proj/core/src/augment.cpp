#include "segtrans/augment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "segtrans/utf8.hpp"

namespace segtrans {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Per-character floor for words never seen in fitting.
constexpr double kUnseenCharLogProb = -23.0;  // ~1e-10

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}
}  // namespace

WeightedExample to_weighted_example(const SegmentedSentence& s, const Vocabulary& v,
                                    double weight, WeightedExample::Origin origin) {
  TrainingPair p = to_training_pair(s, v);
  WeightedExample ex;
  ex.source = std::move(p.source);
  ex.target = std::move(p.target);
  ex.weight = weight;
  ex.origin = origin;
  return ex;
}

const std::u32string& default_split_chars() {
  static const std::u32string chars = U"，,。.";
  return chars;
}

std::vector<SegmentedSentence> split_sentence(const SegmentedSentence& s,
                                              const std::u32string& split_chars) {
  if (s.empty()) throw std::invalid_argument("split_sentence: empty sentence");
  std::vector<SegmentedSentence> parts;
  size_t start = 0;
  size_t next_boundary = 0;
  SegmentedSentence cur;
  for (size_t i = 0; i < s.chars.size(); ++i) {
    while (next_boundary < s.boundaries.size() && s.boundaries[next_boundary] == i) {
      // A boundary on a junction is implied by the cut itself; concat_segments
      // re-inserts it.
      if (i > start) cur.boundaries.push_back(i - start);
      ++next_boundary;
    }
    cur.chars.push_back(s.chars[i]);
    const bool is_split = split_chars.find(s.chars[i]) != std::u32string::npos;
    if (is_split && i + 1 < s.chars.size()) {
      parts.push_back(std::move(cur));
      cur = SegmentedSentence{};
      start = i + 1;
    }
  }
  parts.push_back(std::move(cur));
  return parts;
}

SegmentedSentence concat_segments(const std::vector<SegmentedSentence>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_segments: no parts");
  SegmentedSentence out;
  for (const auto& part : parts) {
    if (part.empty()) throw std::invalid_argument("concat_segments: empty part");
    const size_t offset = out.chars.size();
    if (offset > 0) out.boundaries.push_back(offset);  // junction between parts
    for (size_t b : part.boundaries) out.boundaries.push_back(offset + b);
    out.chars += part.chars;
  }
  return out;
}

std::vector<SegmentedSentence> split_corpus(const std::vector<SegmentedSentence>& corpus,
                                            const std::u32string& split_chars) {
  std::vector<SegmentedSentence> out;
  out.reserve(corpus.size() * 2);
  for (const auto& s : corpus) {
    auto parts = split_sentence(s, split_chars);
    for (auto& p : parts) out.push_back(std::move(p));
  }
  return out;
}

double UnigramEmSegmenter::word_logprob(std::u32string_view word) const {
  auto it = logprob_.find(std::u32string(word));
  if (it != logprob_.end()) return it->second;
  return kUnseenCharLogProb * static_cast<double>(word.size());
}

SegmentedSentence UnigramEmSegmenter::segment(std::u32string_view chars) const {
  SegmentedSentence out;
  out.chars.assign(chars.begin(), chars.end());
  const size_t n = chars.size();
  if (n <= 1) return out;

  // Viterbi over cut positions.
  std::vector<double> best(n + 1, kNegInf);
  std::vector<size_t> back(n + 1, 0);
  best[0] = 0.0;
  const size_t max_len = static_cast<size_t>(max_word_len_);
  for (size_t i = 1; i <= n; ++i) {
    const size_t j0 = i > max_len ? i - max_len : 0;
    for (size_t j = j0; j < i; ++j) {
      if (best[j] == kNegInf) continue;
      const double score = best[j] + word_logprob(chars.substr(j, i - j));
      if (score > best[i]) {
        best[i] = score;
        back[i] = j;
      }
    }
  }
  std::vector<size_t> cuts;
  for (size_t i = n; i > 0; i = back[i]) cuts.push_back(back[i]);
  for (auto it = cuts.rbegin(); it != cuts.rend(); ++it)
    if (*it > 0) out.boundaries.push_back(*it);
  return out;
}

std::unique_ptr<UnigramEmSegmenter> fit_unsupervised(const std::vector<std::u32string>& raw,
                                                     int max_word_len, int em_iterations) {
  if (raw.empty()) throw std::invalid_argument("fit_unsupervised: empty corpus");
  if (max_word_len < 1) throw std::invalid_argument("fit_unsupervised: max_word_len must be >= 1");

  auto seg = std::make_unique<UnigramEmSegmenter>();
  seg->max_word_len_ = max_word_len;
  const size_t max_len = static_cast<size_t>(max_word_len);

  // Initialize from substring frequencies.
  std::unordered_map<std::u32string, double> counts;
  for (const auto& sent : raw) {
    for (size_t i = 0; i < sent.size(); ++i)
      for (size_t len = 1; len <= max_len && i + len <= sent.size(); ++len)
        counts[std::u32string(sent.substr(i, len))] += 1.0;
  }
  auto renormalize = [&](std::unordered_map<std::u32string, double>& c) {
    double total = 0.0;
    for (const auto& [w, v] : c) total += v;
    auto& lp = seg->logprob_;
    lp.clear();
    for (const auto& [w, v] : c) lp[w] = std::log(v / total);
  };
  renormalize(counts);

  // EM over all segmentations: forward/backward in log space, expected word
  // counts with a small additive floor so candidates are never starved out.
  for (int iter = 0; iter < em_iterations; ++iter) {
    std::unordered_map<std::u32string, double> expected;
    for (const auto& sent : raw) {
      const size_t n = sent.size();
      std::vector<double> alpha(n + 1, kNegInf), beta(n + 1, kNegInf);
      alpha[0] = 0.0;
      for (size_t i = 1; i <= n; ++i) {
        const size_t j0 = i > max_len ? i - max_len : 0;
        for (size_t j = j0; j < i; ++j)
          alpha[i] = log_sum_exp(alpha[i], alpha[j] + seg->word_logprob(sent.substr(j, i - j)));
      }
      beta[n] = 0.0;
      for (size_t i = n; i-- > 0;) {
        const size_t jmax = std::min(n, i + max_len);
        for (size_t j = i + 1; j <= jmax; ++j)
          beta[i] = log_sum_exp(beta[i], seg->word_logprob(sent.substr(i, j - i)) + beta[j]);
      }
      const double z = alpha[n];
      if (z == kNegInf) continue;
      for (size_t i = 0; i < n; ++i) {
        const size_t jmax = std::min(n, i + max_len);
        for (size_t j = i + 1; j <= jmax; ++j) {
          const std::u32string w(sent.substr(i, j - i));
          const double post = alpha[i] + seg->word_logprob(w) + beta[j] - z;
          expected[w] += std::exp(post);
        }
      }
    }
    for (auto& [w, v] : expected) v += 1e-8;
    renormalize(expected);
  }
  return seg;
}

std::vector<WeightedExample> build_weighted_dataset(const std::vector<WeightedExample>& gold,
                                                    const std::vector<WeightedExample>& augmented,
                                                    double k) {
  if (k < 1.0) throw std::invalid_argument("build_weighted_dataset: gold weight must dominate (k >= 1)");
  std::vector<WeightedExample> out;
  out.reserve(gold.size() + augmented.size());
  for (const auto& ex : gold) {
    out.push_back(ex);
    out.back().weight = k;
  }
  for (const auto& ex : augmented) {
    out.push_back(ex);
    out.back().weight = 1.0;
  }
  return out;
}

namespace {
const char* origin_name(WeightedExample::Origin o) {
  switch (o) {
    case WeightedExample::Origin::gold: return "gold";
    case WeightedExample::Origin::split: return "split";
    case WeightedExample::Origin::unsupervised: return "unsupervised";
  }
  return "gold";
}
WeightedExample::Origin origin_from_name(const std::string& name) {
  if (name == "gold") return WeightedExample::Origin::gold;
  if (name == "split") return WeightedExample::Origin::split;
  if (name == "unsupervised") return WeightedExample::Origin::unsupervised;
  throw std::runtime_error("weighted dataset: unknown origin '" + name + "'");
}
}  // namespace

void write_weighted_dataset(const std::vector<SegmentedSentence>& sentences,
                            const std::vector<double>& weights,
                            const std::vector<WeightedExample::Origin>& origins,
                            const std::string& path) {
  if (sentences.size() != weights.size() || sentences.size() != origins.size())
    throw std::invalid_argument("write_weighted_dataset: size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out.precision(17);
  for (size_t i = 0; i < sentences.size(); ++i)
    out << weights[i] << '\t' << origin_name(origins[i]) << '\t' << sentences[i].to_bakeoff()
        << '\n';
}

WeightedSentences read_weighted_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  WeightedSentences out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t t1 = line.find('\t');
    const size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos)
      throw std::runtime_error("weighted dataset: bad line " + std::to_string(lineno));
    const double w = std::stod(line.substr(0, t1));
    if (!(w > 0.0))
      throw std::runtime_error("weighted dataset: non-positive weight at line " +
                               std::to_string(lineno));
    SegmentedSentence s = parse_segmented_line(line.substr(t2 + 1));
    if (s.empty()) continue;
    out.sentences.push_back(std::move(s));
    out.weights.push_back(w);
    out.origins.push_back(origin_from_name(line.substr(t1 + 1, t2 - t1 - 1)));
  }
  return out;
}

}  // namespace segtrans
