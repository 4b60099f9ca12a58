#include <doctest.h>

#include <stdexcept>

#include "segtrans/corpus.hpp"
#include "segtrans/rng.hpp"
#include "segtrans/text.hpp"
#include "segtrans/utf8.hpp"
#include "segtrans/vocab.hpp"
#include "testutil.hpp"

using namespace segtrans;

TEST_CASE("utf8 roundtrip and invalid input") {
  const std::string s = "我abc123，一";
  CHECK(encode_utf8(decode_utf8(s)) == s);
  // Lone continuation byte decodes to U+FFFD instead of failing.
  const std::u32string bad = decode_utf8(std::string("\x80 a", 3));
  CHECK(bad[0] == char32_t(0xFFFD));
  CHECK(bad[2] == U'a');
}

TEST_CASE("normalize_chars: digit and latin runs") {
  CHECK(normalize_chars(decode_utf8("12月")) == std::u32string{kNumChar, U'月'});
  CHECK(normalize_chars(decode_utf8("abc2021xyz")) ==
        std::u32string{kLatinChar, kNumChar, kLatinChar});
  CHECK(normalize_chars(U"").empty());
}

TEST_CASE("normalize_chars: full-width folding happens before run detection") {
  // Full-width "１２" and half-width "12" form one run.
  const std::u32string mixed = decode_utf8("１2月");
  CHECK(normalize_chars(mixed) == std::u32string{kNumChar, U'月'});
  // Full-width comma folds to ','.
  CHECK(normalize_chars(decode_utf8("，")) == U",");
}

TEST_CASE("normalize_chars is idempotent") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::u32string raw;
    const size_t len = rng.next_below(30);
    for (size_t i = 0; i < len; ++i) {
      switch (rng.next_below(5)) {
        case 0: raw.push_back(U'0' + static_cast<char32_t>(rng.next_below(10))); break;
        case 1: raw.push_back(U'a' + static_cast<char32_t>(rng.next_below(26))); break;
        case 2: raw.push_back(0xFF10 + static_cast<char32_t>(rng.next_below(10))); break;
        case 3: raw.push_back(0x4E00 + static_cast<char32_t>(rng.next_below(64))); break;
        default: raw.push_back(0x3002); break;
      }
    }
    const std::u32string once = normalize_chars(raw);
    CHECK(normalize_chars(once) == once);
  }
}

TEST_CASE("normalize_text keeps byte spans for surface restoration") {
  const std::string raw = "12月abc";
  const Normalized n = normalize_text(raw);
  REQUIRE(n.chars.size() == 3);
  CHECK(n.chars[0] == kNumChar);
  CHECK(n.chars[1] == U'月');
  CHECK(n.chars[2] == kLatinChar);
  CHECK(raw.substr(n.spans[0].first, n.spans[0].second - n.spans[0].first) == "12");
  CHECK(raw.substr(n.spans[2].first, n.spans[2].second - n.spans[2].first) == "abc");
}

TEST_CASE("parse_segmented_line: positional bookkeeping") {
  const SegmentedSentence s = parse_segmented_line("我 会 游泳");
  CHECK(s.chars == decode_utf8("我会游泳"));
  CHECK(s.boundaries == std::vector<size_t>{1, 2});
}

TEST_CASE("parse_segmented_line: one word of letters becomes a single placeholder") {
  const SegmentedSentence s = parse_segmented_line("AB");
  CHECK(s.chars == std::u32string{kLatinChar});
  CHECK(s.boundaries.empty());
}

TEST_CASE("parse_segmented_line: whitespace-only gives an empty sentence") {
  CHECK(parse_segmented_line("  ").empty());
  CHECK(parse_segmented_line("").empty());
}

TEST_CASE("parse_segmented_line: adjacent digit words keep their boundary") {
  const SegmentedSentence s = parse_segmented_line("12 34");
  CHECK(s.chars == std::u32string{kNumChar, kNumChar});
  CHECK(s.boundaries == std::vector<size_t>{1});
}

TEST_CASE("parse round-trips through bakeoff rendering") {
  const SegmentedSentence s = parse_segmented_line("我 会 12 xyz");
  const SegmentedSentence again = parse_segmented_line(s.to_bakeoff());
  CHECK(again == s);
}

TEST_CASE("vocabulary: reserved block then first occurrence") {
  const std::vector<SegmentedSentence> corpus = {parse_segmented_line("我 会")};
  const Vocabulary v = Vocabulary::build(corpus);
  CHECK(v.size() == kNumReserved + 2);
  CHECK(v.id_of(U'我') == 7);
  CHECK(v.id_of(U'会') == 8);
  CHECK(v.token(kDelimId) == "⟨D⟩");
  // Determinism.
  CHECK(Vocabulary::build(corpus) == v);
  // Placeholders reuse the reserved ids.
  const Vocabulary v2 = Vocabulary::build({parse_segmented_line("12 我")});
  CHECK(v2.id_of(kNumChar) == kNumId);
  CHECK(v2.size() == kNumReserved + 1);
}

TEST_CASE("vocabulary rejects an empty corpus") {
  CHECK_THROWS_WITH_AS(Vocabulary::build({}), "empty corpus", std::invalid_argument);
}

TEST_CASE("vocabulary bijection survives serialization") {
  testutil::TempDir tmp;
  const Vocabulary v = Vocabulary::build({parse_segmented_line("我 会 游泳 12")});
  v.save(tmp.file("vocab.txt"));
  const Vocabulary loaded = Vocabulary::load(tmp.file("vocab.txt"));
  CHECK(loaded == v);
  for (TokenId id = 0; id < v.size(); ++id) CHECK(loaded.token(id) == v.token(id));
  CHECK(loaded.id_of(U'游') == v.id_of(U'游'));
}

TEST_CASE("to_training_pair inserts delimiters and EOS") {
  const SegmentedSentence s = parse_segmented_line("我 会 游泳");
  const Vocabulary v = Vocabulary::build({s});
  const TrainingPair p = to_training_pair(s, v);
  const TokenId wo = v.id_of(U'我'), hui = v.id_of(U'会');
  const TokenId you = v.id_of(U'游'), yong = v.id_of(U'泳');
  CHECK(p.source == std::vector<TokenId>{wo, hui, you, yong});
  CHECK(p.target == std::vector<TokenId>{wo, kDelimId, hui, kDelimId, you, yong, kEosId});
  CHECK(p.unk_count == 0);

  SUBCASE("no boundaries: target is source plus EOS") {
    SegmentedSentence one;
    one.chars = s.chars;
    const TrainingPair q = to_training_pair(one, v);
    std::vector<TokenId> want = q.source;
    want.push_back(kEosId);
    CHECK(q.target == want);
  }
  SUBCASE("unseen characters map to UNK in source and target") {
    SegmentedSentence u;
    u.chars = U"鿿";
    const TrainingPair q = to_training_pair(u, v);
    CHECK(q.source == std::vector<TokenId>{kUnkId});
    CHECK(q.target == std::vector<TokenId>{kUnkId, kEosId});
    CHECK(q.unk_count == 1);
  }
}

TEST_CASE("roundtrip: stripping delimiters from the target recovers the source") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::string line;
    const size_t words = 1 + rng.next_below(6);
    for (size_t w = 0; w < words; ++w) {
      if (w) line += ' ';
      const size_t len = 1 + rng.next_below(3);
      for (size_t i = 0; i < len; ++i)
        line += encode_utf8(static_cast<char32_t>(0x4E00 + rng.next_below(40)));
    }
    const SegmentedSentence s = parse_segmented_line(line);
    const Vocabulary v = Vocabulary::build({s});
    const TrainingPair p = to_training_pair(s, v);
    std::vector<TokenId> stripped;
    for (TokenId t : p.target)
      if (t != kDelimId && t != kEosId) stripped.push_back(t);
    CHECK(stripped == p.source);
  }
}

TEST_CASE("split_train_valid: 99:1 semantics") {
  std::vector<SegmentedSentence> corpus(100);
  for (size_t i = 0; i < corpus.size(); ++i)
    corpus[i].chars = std::u32string(1, static_cast<char32_t>(0x4E00 + i));
  const CorpusSplit split = split_train_valid(corpus, 0.01, 42);
  CHECK(split.valid.size() == 1);
  CHECK(split.train.size() == 99);

  SUBCASE("same seed gives the identical split") {
    const CorpusSplit again = split_train_valid(corpus, 0.01, 42);
    CHECK(again.train == split.train);
    CHECK(again.valid == split.valid);
  }
  SUBCASE("union is preserved as a multiset") {
    std::vector<std::u32string> all;
    for (const auto& s : split.train) all.push_back(s.chars);
    for (const auto& s : split.valid) all.push_back(s.chars);
    std::sort(all.begin(), all.end());
    std::vector<std::u32string> orig;
    for (const auto& s : corpus) orig.push_back(s.chars);
    std::sort(orig.begin(), orig.end());
    CHECK(all == orig);
  }
  SUBCASE("rounding: 200 sentences at 0.01 give 2 validation sentences") {
    std::vector<SegmentedSentence> big(200);
    for (size_t i = 0; i < big.size(); ++i)
      big[i].chars = std::u32string(1, static_cast<char32_t>(0x4E00 + i));
    CHECK(split_train_valid(big, 0.01, 1).valid.size() == 2);
  }
  SUBCASE("too small corpora are rejected") {
    CHECK_THROWS_AS(split_train_valid({corpus[0]}, 0.01, 1), std::invalid_argument);
  }
}

TEST_CASE("gold corpus ingestion drops whitespace-only lines") {
  testutil::TempDir tmp;
  testutil::write_file(tmp.file("g.txt"), "我 会\n   \n\n游泳\n");
  const auto corpus = read_gold_corpus(tmp.file("g.txt"));
  CHECK(corpus.size() == 2);
}
