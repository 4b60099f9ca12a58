#include "segtrans/text.hpp"

#include <algorithm>
#include <stdexcept>

#include "segtrans/utf8.hpp"

namespace segtrans {

namespace {

bool is_digit_char(char32_t c) { return c >= U'0' && c <= U'9'; }

bool is_latin_char(char32_t c) {
  return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z');
}

}  // namespace

char32_t fold_width(char32_t c) {
  if (c >= 0xFF01 && c <= 0xFF5E) return c - 0xFEE0;
  return c;
}

std::vector<std::pair<size_t, size_t>> SegmentedSentence::word_spans() const {
  std::vector<std::pair<size_t, size_t>> spans;
  if (chars.empty()) return spans;
  spans.reserve(boundaries.size() + 1);
  size_t start = 0;
  for (size_t b : boundaries) {
    spans.emplace_back(start, b);
    start = b;
  }
  spans.emplace_back(start, chars.size());
  return spans;
}

std::string SegmentedSentence::to_bakeoff() const {
  std::string out;
  const auto spans = word_spans();
  for (size_t w = 0; w < spans.size(); ++w) {
    if (w > 0) out.push_back(' ');
    for (size_t i = spans[w].first; i < spans[w].second; ++i) out += render_char(chars[i]);
  }
  return out;
}

void SegmentedSentence::validate() const {
  if (chars.empty() && !boundaries.empty())
    throw std::invalid_argument("SegmentedSentence: empty sentence with boundaries");
  size_t prev = 0;
  for (size_t b : boundaries) {
    if (b == 0 || b >= chars.size())
      throw std::invalid_argument("SegmentedSentence: boundary outside sentence");
    if (b <= prev)
      throw std::invalid_argument("SegmentedSentence: boundaries not strictly increasing");
    prev = b;
  }
}

std::u32string normalize_chars(std::u32string_view raw) {
  std::u32string out;
  out.reserve(raw.size());
  size_t i = 0;
  const size_t n = raw.size();
  while (i < n) {
    const char32_t c = fold_width(raw[i]);
    if (is_digit_char(c)) {
      while (i < n && is_digit_char(fold_width(raw[i]))) ++i;
      out.push_back(kNumChar);
    } else if (is_latin_char(c)) {
      while (i < n && is_latin_char(fold_width(raw[i]))) ++i;
      out.push_back(kLatinChar);
    } else {
      out.push_back(c);
      ++i;
    }
  }
  return out;
}

Normalized normalize_text(std::string_view raw) {
  std::vector<char32_t> cps;
  std::vector<size_t> starts;  // byte offset of each code point
  size_t pos = 0;
  while (pos < raw.size()) {
    starts.push_back(pos);
    cps.push_back(decode_utf8_step(raw, pos));
  }

  Normalized out;
  const size_t n = cps.size();
  auto byte_end = [&](size_t idx) { return idx + 1 < n ? starts[idx + 1] : raw.size(); };
  size_t i = 0;
  while (i < n) {
    const char32_t c = fold_width(cps[i]);
    if (is_digit_char(c)) {
      size_t j = i;
      while (j < n && is_digit_char(fold_width(cps[j]))) ++j;
      out.chars.push_back(kNumChar);
      out.spans.emplace_back(starts[i], byte_end(j - 1));
      i = j;
    } else if (is_latin_char(c)) {
      size_t j = i;
      while (j < n && is_latin_char(fold_width(cps[j]))) ++j;
      out.chars.push_back(kLatinChar);
      out.spans.emplace_back(starts[i], byte_end(j - 1));
      i = j;
    } else {
      out.chars.push_back(c);
      out.spans.emplace_back(starts[i], byte_end(i));
      ++i;
    }
  }
  return out;
}

namespace {

// Maps the written placeholder forms ⟨N⟩/⟨L⟩ back to their characters, so a
// normalized bakeoff file parses to the same sequence it was written from.
std::u32string fold_placeholder_surface(std::u32string_view in) {
  std::u32string out;
  out.reserve(in.size());
  for (size_t i = 0; i < in.size(); ++i) {
    if (i + 2 < in.size() && in[i] == U'⟨' && in[i + 2] == U'⟩' &&
        (in[i + 1] == U'N' || in[i + 1] == U'L')) {
      out.push_back(in[i + 1] == U'N' ? kNumChar : kLatinChar);
      i += 2;
    } else {
      out.push_back(in[i]);
    }
  }
  return out;
}

}  // namespace

SegmentedSentence parse_segmented_line(std::string_view line, bool normalize) {
  SegmentedSentence s;
  size_t i = 0;
  const size_t n = line.size();
  while (i < n) {
    while (i < n && line[i] == ' ') ++i;
    size_t j = i;
    while (j < n && line[j] != ' ') ++j;
    if (j > i) {
      std::string_view word = line.substr(i, j - i);
      std::u32string wchars = decode_utf8(word);
      if (normalize) wchars = normalize_chars(fold_placeholder_surface(wchars));
      if (!wchars.empty()) {
        if (!s.chars.empty()) s.boundaries.push_back(s.chars.size());
        s.chars += wchars;
      }
    }
    i = j;
  }
  return s;
}

std::string render_char(char32_t c) {
  if (c == kNumChar) return "⟨N⟩";
  if (c == kLatinChar) return "⟨L⟩";
  return encode_utf8(c);
}

}  // namespace segtrans
