#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "segtrans/text.hpp"

namespace segtrans {

using TokenId = int;

// Reserved token ids; fixed positions 0..6 in every vocabulary.
enum ReservedId : TokenId {
  kPadId = 0,
  kBosId = 1,
  kEosId = 2,
  kUnkId = 3,
  kDelimId = 4,
  kNumId = 5,
  kLatinId = 6,
  kNumReserved = 7,
};

// Bijection between tokens and integer ids, shared by source, target and
// output layers. Character tokens are single code points; the placeholder
// characters map onto the reserved NUM/LATIN ids.
class Vocabulary {
 public:
  Vocabulary();

  // Ids follow first-occurrence order over the corpus, after the reserved
  // block. Throws on an empty corpus.
  static Vocabulary build(const std::vector<SegmentedSentence>& corpus);

  int size() const { return static_cast<int>(tokens_.size()); }

  // Adds a character token if absent; returns its id.
  TokenId add_char(char32_t c);

  // Id for a character, kUnkId if absent.
  TokenId id_of(char32_t c) const;

  // UTF-8 surface of a token (reserved tokens render as ⟨pad⟩, ⟨D⟩, ...).
  const std::string& token(TokenId id) const;

  // One token per line, line number = id.
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

  std::string to_text() const;
  static Vocabulary from_text(const std::string& text);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<char32_t, TokenId> char_ids_;
};

// Source/target id pair for one sentence: source = character ids, target =
// character ids with the delimiter inserted at each boundary, then EOS.
// Characters outside the vocabulary map to UNK (counted via unk_count).
struct TrainingPair {
  std::vector<TokenId> source;
  std::vector<TokenId> target;
  int unk_count = 0;
};
TrainingPair to_training_pair(const SegmentedSentence& s, const Vocabulary& v);

}  // namespace segtrans
