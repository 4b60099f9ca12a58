#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segtrans/augment.hpp"
#include "segtrans/model.hpp"
#include "segtrans/text.hpp"

namespace segtrans {

struct DecodeConfig {
  int beam_size = 6;
  bool constrained = true;       // follow all and only the input characters
  double max_len_factor = 2.5;   // output length cap, unconstrained mode only
  bool length_normalization = false;

  void validate() const;
};

// A partial output: emitted tokens, cumulative log-probability, per-model
// decoder state handles and the count of source characters consumed.
struct BeamHypothesis {
  std::vector<TokenId> tokens;
  double logp = 0.0;
  std::vector<SegModel::DecState> states;  // one per ensemble member
  std::optional<CharLM::State> lm_state;
  size_t cursor = 0;
  int delim_count = 0;
  bool finished = false;
};

// Constrained-mode mask: the only permitted continuations are the next
// source character (cursor < len), the delimiter (last emitted token was a
// character and cursor < len), and EOS (cursor == len). Probabilities are
// renormalized keeping their relative values. last_token < 0 means nothing
// has been emitted yet.
std::vector<double> constrain_step(const std::vector<double>& probs,
                                   std::span<const TokenId> source, size_t cursor,
                                   TokenId last_token);

// Per-step ensemble: one graph per member, predictions averaged in
// probability space. The LM, when present, is one more averaged predictor.
class EnsembleDecoder {
 public:
  EnsembleDecoder(std::span<SegModel* const> models, CharLM* lm,
                  std::span<const TokenId> source);

  struct State {
    std::vector<SegModel::DecState> dec;
    std::optional<CharLM::State> lm;
  };

  State initial_state();
  // Averaged next-token distribution (linear space, sums to 1) and the
  // successor state after consuming prev.
  std::pair<std::vector<double>, State> step(TokenId prev, const State& state);

  int vocab_size() const { return vocab_size_; }

 private:
  std::vector<SegModel*> models_;
  CharLM* lm_;
  std::vector<std::unique_ptr<Graph>> graphs_;
  std::vector<SegModel::Encoded> encoded_;
  std::unique_ptr<Graph> lm_graph_;
  int vocab_size_ = 0;
};

struct DecodeResult {
  std::vector<TokenId> tokens;       // emitted target tokens, without EOS
  std::vector<size_t> boundaries;    // delimiter positions over the source
  double logp = 0.0;
};

// Beam search over averaged per-step distributions. In constrained mode the
// output always strips to the source; in unconstrained mode a divergent
// output raises an error. Ties break toward fewer delimiters, then
// lexicographically smaller token sequences.
DecodeResult beam_search(std::span<SegModel* const> models, CharLM* lm,
                         std::span<const TokenId> source, const DecodeConfig& cfg);

// A segmenter over normalized characters; the unit the split pipeline runs.
using SegmentFn = std::function<SegmentedSentence(const std::u32string&)>;

// Split at punctuation, segment each part, concatenate with junction
// boundaries. The backbone of segment_long, exposed so a gold-oracle
// segmenter can drive the same wiring.
SegmentedSentence segment_pipeline(const SegmentFn& segment_part, const std::u32string& chars,
                                   const std::u32string& split_chars = default_split_chars());

// normalize -> split -> beam_search each part -> concatenate. Boundaries
// index the normalized character sequence.
SegmentedSentence segment_long(const std::u32string& normalized_chars,
                               std::span<SegModel* const> models, CharLM* lm,
                               const Vocabulary& vocab, const DecodeConfig& cfg,
                               bool split_long = true,
                               const std::u32string& split_chars = default_split_chars());

// Expands ⟨N⟩/⟨L⟩ (and width folding) back to the original surface using the
// byte spans of the normalization, and renders bakeoff format. Throws
// "alignment failure" if the segmentation does not match the raw line's
// normalization.
std::string postprocess(const SegmentedSentence& segmented, const std::string& raw_line);

// Whole pipeline for one raw line: normalize, segment, restore surface.
// An empty or whitespace-only line yields an empty output line.
std::string segment_line(const std::string& raw_line, std::span<SegModel* const> models,
                         CharLM* lm, const Vocabulary& vocab, const DecodeConfig& cfg,
                         bool split_long = true,
                         const std::u32string& split_chars = default_split_chars());

}  // namespace segtrans
