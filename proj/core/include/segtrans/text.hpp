#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace segtrans {

// Normalized text is a sequence of char32_t code points. Runs of digits and
// Latin letters collapse to one placeholder character each; we park the
// placeholders in the private use area so they behave like ordinary
// characters everywhere downstream.
constexpr char32_t kNumChar = 0xE000;    // rendered as "⟨N⟩"
constexpr char32_t kLatinChar = 0xE001;  // rendered as "⟨L⟩"

// A character sequence plus word-boundary positions. A boundary p means a
// word ends before index p; boundaries are sorted, unique and strictly
// inside the sequence.
struct SegmentedSentence {
  std::u32string chars;
  std::vector<size_t> boundaries;

  bool empty() const { return chars.empty(); }
  size_t num_words() const { return chars.empty() ? 0 : boundaries.size() + 1; }

  // Half-open (start, end) spans of the words, in order.
  std::vector<std::pair<size_t, size_t>> word_spans() const;

  // Space-separated words, placeholders rendered as ⟨N⟩/⟨L⟩.
  std::string to_bakeoff() const;

  // Throws std::invalid_argument if the boundary invariants are violated.
  void validate() const;

  bool operator==(const SegmentedSentence&) const = default;
};

// Folds full-width ASCII variants (U+FF01..U+FF5E) to half-width.
char32_t fold_width(char32_t c);

// Character-level normalization: width folding, then each maximal run of
// digits -> kNumChar and of Latin letters -> kLatinChar. Total and
// idempotent; everything else passes through.
std::u32string normalize_chars(std::u32string_view raw);

// Normalization of a raw UTF-8 line keeping, for every output character,
// the byte span of the input it came from. Spans are what let decoding
// restore the original surface around ⟨N⟩/⟨L⟩ and width folding.
struct Normalized {
  std::u32string chars;
  std::vector<std::pair<size_t, size_t>> spans;  // [begin, end) bytes into raw
};
Normalized normalize_text(std::string_view raw);

// Parses one line of bakeoff format (words separated by ASCII spaces).
// Words are normalized individually so digit/letter runs never merge across
// gold boundaries. A whitespace-only line yields an empty sentence, which
// callers are expected to drop. With normalize=false the surface code
// points are kept verbatim (used for surface-level scoring).
SegmentedSentence parse_segmented_line(std::string_view line, bool normalize = true);

// Renders one normalized character for human-readable output.
std::string render_char(char32_t c);

}  // namespace segtrans
