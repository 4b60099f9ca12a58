#include "segtrans/vocab.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "segtrans/utf8.hpp"

namespace segtrans {

namespace {
const char* kReservedSurface[kNumReserved] = {
    "⟨pad⟩", "⟨s⟩",  "⟨/s⟩", "⟨unk⟩",
    "⟨D⟩",   "⟨N⟩",  "⟨L⟩",
};
}  // namespace

Vocabulary::Vocabulary() {
  tokens_.reserve(kNumReserved);
  for (int i = 0; i < kNumReserved; ++i) tokens_.emplace_back(kReservedSurface[i]);
  char_ids_[kNumChar] = kNumId;
  char_ids_[kLatinChar] = kLatinId;
}

Vocabulary Vocabulary::build(const std::vector<SegmentedSentence>& corpus) {
  if (corpus.empty()) throw std::invalid_argument("empty corpus");
  Vocabulary v;
  for (const auto& s : corpus)
    for (char32_t c : s.chars) v.add_char(c);
  return v;
}

TokenId Vocabulary::add_char(char32_t c) {
  auto it = char_ids_.find(c);
  if (it != char_ids_.end()) return it->second;
  const TokenId id = static_cast<TokenId>(tokens_.size());
  tokens_.push_back(encode_utf8(c));
  char_ids_.emplace(c, id);
  return id;
}

TokenId Vocabulary::id_of(char32_t c) const {
  auto it = char_ids_.find(c);
  return it == char_ids_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("Vocabulary: bad token id");
  return tokens_[static_cast<size_t>(id)];
}

std::string Vocabulary::to_text() const {
  std::string out;
  for (const auto& t : tokens_) {
    out += t;
    out.push_back('\n');
  }
  return out;
}

Vocabulary Vocabulary::from_text(const std::string& text) {
  Vocabulary v;
  std::vector<std::string> lines;
  size_t start = 0;
  while (start < text.size()) {
    size_t nl = text.find('\n', start);
    if (nl == std::string::npos) nl = text.size();
    lines.emplace_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  if (lines.size() < kNumReserved)
    throw std::runtime_error("vocabulary file: missing reserved tokens");
  for (int i = 0; i < kNumReserved; ++i) {
    if (lines[static_cast<size_t>(i)] != kReservedSurface[i])
      throw std::runtime_error("vocabulary file: reserved token mismatch at id " +
                               std::to_string(i));
  }
  for (size_t i = kNumReserved; i < lines.size(); ++i) {
    const std::u32string cs = decode_utf8(lines[i]);
    if (cs.size() != 1)
      throw std::runtime_error("vocabulary file: token at id " + std::to_string(i) +
                               " is not a single character");
    if (v.add_char(cs[0]) != static_cast<TokenId>(i))
      throw std::runtime_error("vocabulary file: duplicate token at id " + std::to_string(i));
  }
  return v;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write vocabulary file: " + path);
  out << to_text();
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read vocabulary file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

TrainingPair to_training_pair(const SegmentedSentence& s, const Vocabulary& v) {
  TrainingPair p;
  p.source.reserve(s.chars.size());
  p.target.reserve(s.chars.size() + s.boundaries.size() + 1);
  size_t next_boundary = 0;
  for (size_t i = 0; i < s.chars.size(); ++i) {
    if (next_boundary < s.boundaries.size() && s.boundaries[next_boundary] == i) {
      p.target.push_back(kDelimId);
      ++next_boundary;
    }
    const TokenId id = v.id_of(s.chars[i]);
    if (id == kUnkId) ++p.unk_count;
    p.source.push_back(id);
    p.target.push_back(id);
  }
  p.target.push_back(kEosId);
  return p;
}

}  // namespace segtrans
