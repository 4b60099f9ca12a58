#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "segtrans/text.hpp"
#include "segtrans/vocab.hpp"

namespace segtrans {

// One training unit: id sequences plus the per-sentence weight of the
// weighted objective. Stripping delimiters from target recovers source.
struct WeightedExample {
  enum class Origin { gold, split, unsupervised };
  std::vector<TokenId> source;
  std::vector<TokenId> target;
  double weight = 1.0;
  Origin origin = Origin::gold;
};

WeightedExample to_weighted_example(const SegmentedSentence& s, const Vocabulary& v,
                                    double weight = 1.0,
                                    WeightedExample::Origin origin = WeightedExample::Origin::gold);

// Characters that end a split segment. Comma and period only; the
// full-width comma is folded to ',' by normalization but is accepted here
// for sentences built outside the normalizer.
const std::u32string& default_split_chars();

// Cuts the sentence immediately after each comma/period; the punctuation
// mark stays at the end of its segment and boundaries are re-indexed.
// Gold corpora separate these marks from other words, so
// concat_segments(split_sentence(s)) == s for gold-shaped sentences.
std::vector<SegmentedSentence> split_sentence(const SegmentedSentence& s,
                                              const std::u32string& split_chars = default_split_chars());

// Concatenates parts, shifting boundaries and inserting a boundary at each
// junction. Throws on an empty part.
SegmentedSentence concat_segments(const std::vector<SegmentedSentence>& parts);

// Applies split_sentence over a corpus.
std::vector<SegmentedSentence> split_corpus(const std::vector<SegmentedSentence>& corpus,
                                            const std::u32string& split_chars = default_split_chars());

// Unsupervised segmenter interface. A fitted segmenter is immutable and
// safe to share across threads.
class UnsupSegmenter {
 public:
  virtual ~UnsupSegmenter() = default;
  virtual SegmentedSentence segment(std::u32string_view chars) const = 0;
};

// Word-unigram model trained by expectation-maximization over all
// segmentations up to max_word_len, decoded with Viterbi. Initialized from
// substring frequencies. Stands in for an external unsupervised tool; any
// UnsupSegmenter is pluggable and segmentations can also be imported from a
// bakeoff file.
class UnigramEmSegmenter : public UnsupSegmenter {
 public:
  SegmentedSentence segment(std::u32string_view chars) const override;

  // Model log-probability of one word; unseen words get a per-character
  // floor so any text stays decodable.
  double word_logprob(std::u32string_view word) const;

  int max_word_len() const { return max_word_len_; }

 private:
  friend std::unique_ptr<UnigramEmSegmenter> fit_unsupervised(
      const std::vector<std::u32string>&, int, int);
  std::unordered_map<std::u32string, double> logprob_;
  int max_word_len_ = 4;
};

// Fits the EM unigram model. Throws on an empty corpus or max_word_len < 1.
std::unique_ptr<UnigramEmSegmenter> fit_unsupervised(const std::vector<std::u32string>& raw,
                                                     int max_word_len, int em_iterations = 5);

// Gold examples get weight k (k >= 1), augmented ones weight 1; output is
// gold-then-augmented. The training loop shuffles later.
std::vector<WeightedExample> build_weighted_dataset(const std::vector<WeightedExample>& gold,
                                                    const std::vector<WeightedExample>& augmented,
                                                    double k);

// Weighted dataset file format: one example per line,
// "<weight>\t<origin>\t<bakeoff sentence>".
void write_weighted_dataset(const std::vector<SegmentedSentence>& sentences,
                            const std::vector<double>& weights,
                            const std::vector<WeightedExample::Origin>& origins,
                            const std::string& path);
struct WeightedSentences {
  std::vector<SegmentedSentence> sentences;
  std::vector<double> weights;
  std::vector<WeightedExample::Origin> origins;
};
WeightedSentences read_weighted_dataset(const std::string& path);

}  // namespace segtrans
