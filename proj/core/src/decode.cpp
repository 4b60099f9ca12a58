#include "segtrans/decode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace segtrans {

void DecodeConfig::validate() const {
  if (beam_size < 1) throw std::invalid_argument("DecodeConfig: beam_size must be >= 1");
  if (max_len_factor <= 0.0)
    throw std::invalid_argument("DecodeConfig: max_len_factor must be > 0");
}

std::vector<double> constrain_step(const std::vector<double>& probs,
                                   std::span<const TokenId> source, size_t cursor,
                                   TokenId last_token) {
  if (cursor > source.size()) throw std::invalid_argument("constrain_step: cursor past source");
  std::vector<double> out(probs.size(), 0.0);
  double mass = 0.0;
  auto allow = [&](TokenId id) {
    const double p = probs[static_cast<size_t>(id)];
    out[static_cast<size_t>(id)] = p;
    mass += p;
  };
  if (cursor < source.size()) {
    allow(source[cursor]);
    if (last_token >= 0 && last_token != kDelimId) allow(kDelimId);
  } else {
    allow(kEosId);
  }
  if (mass > 0.0) {
    for (double& p : out) p /= mass;
  } else {
    // Degenerate masked mass; fall back to uniform over the allowed set.
    int allowed = 0;
    for (double p : out) allowed += p > 0.0 ? 1 : 0;
    if (allowed == 0) {
      if (cursor < source.size())
        out[static_cast<size_t>(source[cursor])] = 1.0;
      else
        out[kEosId] = 1.0;
    }
  }
  return out;
}

EnsembleDecoder::EnsembleDecoder(std::span<SegModel* const> models, CharLM* lm,
                                 std::span<const TokenId> source)
    : models_(models.begin(), models.end()), lm_(lm) {
  if (models_.empty()) throw std::invalid_argument("beam_search: at least one model required");
  if (source.empty()) throw std::invalid_argument("beam_search: empty source");
  vocab_size_ = models_.front()->config().vocab_size;
  for (SegModel* m : models_)
    if (m->config().vocab_size != vocab_size_)
      throw std::invalid_argument("beam_search: ensemble vocabulary sizes differ");
  if (lm_ && lm_->config().vocab_size != vocab_size_)
    throw std::invalid_argument("beam_search: language model vocabulary size differs");
  graphs_.reserve(models_.size());
  encoded_.reserve(models_.size());
  for (SegModel* m : models_) {
    graphs_.push_back(std::make_unique<Graph>(Graph::Mode::eval));
    encoded_.push_back(m->encode(*graphs_.back(), source));
  }
  if (lm_) lm_graph_ = std::make_unique<Graph>(Graph::Mode::eval);
}

EnsembleDecoder::State EnsembleDecoder::initial_state() {
  State s;
  s.dec.reserve(models_.size());
  for (size_t i = 0; i < models_.size(); ++i)
    s.dec.push_back(models_[i]->initial_state(*graphs_[i], encoded_[i]));
  if (lm_) s.lm = lm_->initial_state(*lm_graph_);
  return s;
}

std::pair<std::vector<double>, EnsembleDecoder::State> EnsembleDecoder::step(
    TokenId prev, const State& state) {
  const size_t v = static_cast<size_t>(vocab_size_);
  std::vector<double> avg(v, 0.0);
  State next;
  next.dec.reserve(models_.size());
  for (size_t i = 0; i < models_.size(); ++i) {
    auto res = models_[i]->decode_step(*graphs_[i], prev, state.dec[i], encoded_[i]);
    const Tensor& logp = graphs_[i]->value(res.logp);
    for (size_t j = 0; j < v; ++j) avg[j] += std::exp(logp.data[j]);
    next.dec.push_back(std::move(res.state));
  }
  double denom = static_cast<double>(models_.size());
  if (lm_) {
    auto res = lm_->lm_step(*lm_graph_, prev, *state.lm);
    const Tensor& logp = lm_graph_->value(res.logp);
    for (size_t j = 0; j < v; ++j) avg[j] += std::exp(logp.data[j]);
    next.lm = std::move(res.state);
    denom += 1.0;
  }
  for (double& p : avg) p /= denom;
  return {std::move(avg), std::move(next)};
}

namespace {

// Score ordering with deterministic tie-breaking: higher score first, then
// fewer delimiters, then lexicographically smaller token sequence.
bool better_than(double score_a, const BeamHypothesis& a, double score_b,
                 const BeamHypothesis& b) {
  if (score_a != score_b) return score_a > score_b;
  if (a.delim_count != b.delim_count) return a.delim_count < b.delim_count;
  return a.tokens < b.tokens;
}

std::vector<size_t> boundaries_from_tokens(const std::vector<TokenId>& tokens) {
  std::vector<size_t> bounds;
  size_t chars = 0;
  for (TokenId t : tokens) {
    if (t == kDelimId)
      bounds.push_back(chars);
    else
      ++chars;
  }
  // Unconstrained decoding may place delimiters degenerately; drop edge and
  // duplicate positions so the boundary set stays valid.
  std::vector<size_t> clean;
  for (size_t b : bounds)
    if (b > 0 && b < chars && (clean.empty() || clean.back() != b)) clean.push_back(b);
  return clean;
}

}  // namespace

DecodeResult beam_search(std::span<SegModel* const> models, CharLM* lm,
                         std::span<const TokenId> source, const DecodeConfig& cfg) {
  cfg.validate();
  EnsembleDecoder ens(models, lm, source);
  const size_t v = static_cast<size_t>(ens.vocab_size());
  const size_t src_len = source.size();
  const size_t max_tokens =
      cfg.constrained
          ? 2 * src_len
          : std::max<size_t>(3, static_cast<size_t>(std::ceil(
                                    cfg.max_len_factor * static_cast<double>(src_len)))) +
                1;

  struct Live {
    BeamHypothesis hyp;
    EnsembleDecoder::State state;
  };
  std::vector<Live> live;
  {
    Live init;
    init.state = ens.initial_state();
    live.push_back(std::move(init));
  }
  std::vector<BeamHypothesis> finished;

  auto final_score = [&](const BeamHypothesis& h) {
    return cfg.length_normalization && !h.tokens.empty()
               ? h.logp / static_cast<double>(h.tokens.size())
               : h.logp;
  };

  for (size_t step_i = 0; step_i < max_tokens && !live.empty(); ++step_i) {
    struct Candidate {
      size_t parent;
      TokenId token;
      double logp;
      int delim_count;
      std::vector<TokenId> tokens;  // parent tokens + token, for ordering
    };
    std::vector<Candidate> candidates;
    std::vector<std::pair<std::vector<double>, EnsembleDecoder::State>> expansions(live.size());

    for (size_t p = 0; p < live.size(); ++p) {
      const BeamHypothesis& h = live[p].hyp;
      const TokenId prev = h.tokens.empty() ? kBosId : h.tokens.back();
      expansions[p] = ens.step(prev, live[p].state);
      std::vector<double>& probs = expansions[p].first;
      if (cfg.constrained) {
        const TokenId last = h.tokens.empty() ? -1 : h.tokens.back();
        probs = constrain_step(probs, source, h.cursor, last);
      } else {
        // The model never legitimately continues with padding or a second
        // BOS; mask them and keep relative values.
        probs[kPadId] = 0.0;
        probs[kBosId] = 0.0;
        double mass = 0.0;
        for (double pr : probs) mass += pr;
        if (mass > 0.0)
          for (double& pr : probs) pr /= mass;
      }
      for (size_t tok = 0; tok < v; ++tok) {
        if (probs[tok] <= 0.0) continue;
        Candidate c;
        c.parent = p;
        c.token = static_cast<TokenId>(tok);
        c.logp = h.logp + std::log(probs[tok]);
        c.delim_count = h.delim_count + (c.token == kDelimId ? 1 : 0);
        c.tokens = h.tokens;
        c.tokens.push_back(c.token);
        candidates.push_back(std::move(c));
      }
    }

    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      if (a.logp != b.logp) return a.logp > b.logp;
      if (a.delim_count != b.delim_count) return a.delim_count < b.delim_count;
      return a.tokens < b.tokens;
    });

    std::vector<Live> next_live;
    next_live.reserve(static_cast<size_t>(cfg.beam_size));
    for (const Candidate& c : candidates) {
      if (next_live.size() >= static_cast<size_t>(cfg.beam_size)) break;
      BeamHypothesis h = live[c.parent].hyp;
      h.tokens = c.tokens;
      h.logp = c.logp;
      h.delim_count = c.delim_count;
      if (c.token != kDelimId && c.token != kEosId) ++h.cursor;
      if (c.token == kEosId) {
        if (!cfg.constrained || h.cursor == source.size()) {
          h.finished = true;
          h.tokens.pop_back();  // EOS is not part of the output
          finished.push_back(std::move(h));
        }
        continue;
      }
      Live nl;
      nl.hyp = std::move(h);
      nl.state = expansions[c.parent].second;
      next_live.push_back(std::move(nl));
    }
    live = std::move(next_live);

    // With raw sums, extending can only lower logp: once the best finished
    // hypothesis beats every live one, the search is decided.
    if (!cfg.length_normalization && !finished.empty() && !live.empty()) {
      double best_fin = finished.front().logp;
      for (const auto& f : finished) best_fin = std::max(best_fin, f.logp);
      bool all_worse = true;
      for (const auto& l : live)
        if (l.hyp.logp >= best_fin) {
          all_worse = false;
          break;
        }
      if (all_worse) break;
    }
  }

  if (finished.empty())
    throw std::runtime_error("beam_search: no finished hypothesis within length limit");

  const BeamHypothesis* best = &finished.front();
  for (const auto& f : finished)
    if (better_than(final_score(f), f, final_score(*best), *best)) best = &f;

  DecodeResult result;
  result.tokens = best->tokens;
  result.logp = best->logp;
  result.boundaries = boundaries_from_tokens(best->tokens);

  // The constrained path guarantees this by construction; unconstrained
  // output must be checked against the source.
  std::vector<TokenId> stripped;
  stripped.reserve(result.tokens.size());
  for (TokenId t : result.tokens)
    if (t != kDelimId) stripped.push_back(t);
  if (stripped.size() != source.size() ||
      !std::equal(stripped.begin(), stripped.end(), source.begin()))
    throw std::runtime_error("beam_search: divergent output");
  return result;
}

SegmentedSentence segment_pipeline(const SegmentFn& segment_part, const std::u32string& chars,
                                   const std::u32string& split_chars) {
  SegmentedSentence out;
  if (chars.empty()) return out;
  SegmentedSentence whole;
  whole.chars = chars;
  const auto parts = split_sentence(whole, split_chars);
  std::vector<SegmentedSentence> segmented;
  segmented.reserve(parts.size());
  for (const auto& part : parts) segmented.push_back(segment_part(part.chars));
  return concat_segments(segmented);
}

SegmentedSentence segment_long(const std::u32string& normalized_chars,
                               std::span<SegModel* const> models, CharLM* lm,
                               const Vocabulary& vocab, const DecodeConfig& cfg, bool split_long,
                               const std::u32string& split_chars) {
  SegmentFn fn = [&](const std::u32string& part) {
    std::vector<TokenId> ids;
    ids.reserve(part.size());
    for (char32_t c : part) ids.push_back(vocab.id_of(c));
    DecodeResult r = beam_search(models, lm, ids, cfg);
    SegmentedSentence s;
    s.chars = part;
    s.boundaries = std::move(r.boundaries);
    return s;
  };
  if (!split_long) {
    if (normalized_chars.empty()) return SegmentedSentence{};
    return fn(normalized_chars);
  }
  return segment_pipeline(fn, normalized_chars, split_chars);
}

std::string postprocess(const SegmentedSentence& segmented, const std::string& raw_line) {
  const Normalized norm = normalize_text(raw_line);
  if (norm.chars != segmented.chars)
    throw std::runtime_error("postprocess: alignment failure between segmentation and raw line");
  std::string out;
  const auto spans = segmented.word_spans();
  for (size_t w = 0; w < spans.size(); ++w) {
    if (w > 0) out.push_back(' ');
    const size_t byte_begin = norm.spans[spans[w].first].first;
    const size_t byte_end = norm.spans[spans[w].second - 1].second;
    out.append(raw_line, byte_begin, byte_end - byte_begin);
  }
  return out;
}

std::string segment_line(const std::string& raw_line, std::span<SegModel* const> models,
                         CharLM* lm, const Vocabulary& vocab, const DecodeConfig& cfg,
                         bool split_long, const std::u32string& split_chars) {
  const Normalized norm = normalize_text(raw_line);
  if (norm.chars.empty()) return std::string();
  const SegmentedSentence seg =
      segment_long(norm.chars, models, lm, vocab, cfg, split_long, split_chars);
  return postprocess(seg, raw_line);
}

}  // namespace segtrans
