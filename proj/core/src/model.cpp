#include "segtrans/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace segtrans {

void ModelConfig::validate() const {
  if (vocab_size <= 0) throw std::invalid_argument("ModelConfig: vocab_size must be positive");
  if (embed_dim <= 0 || hidden_dim <= 0)
    throw std::invalid_argument("ModelConfig: dims must be positive");
  if (enc_depth < 1 || dec_depth < 1)
    throw std::invalid_argument("ModelConfig: depth must be >= 1");
  auto prob_ok = [](double p) { return p >= 0.0 && p < 1.0; };
  if (!prob_ok(dropout_state) || !prob_ok(dropout_src) || !prob_ok(label_smoothing))
    throw std::invalid_argument("ModelConfig: probabilities must be in [0, 1)");
  if (dropout_state_enc >= 1.0 || dropout_state_dec >= 1.0)
    throw std::invalid_argument("ModelConfig: probabilities must be in [0, 1)");
  if (cell != "gru") throw std::invalid_argument("ModelConfig: unsupported cell '" + cell + "'");
}

std::string ModelConfig::to_text() const {
  std::ostringstream ss;
  ss.precision(17);
  ss << "vocab_size=" << vocab_size << '\n'
     << "embed_dim=" << embed_dim << '\n'
     << "hidden_dim=" << hidden_dim << '\n'
     << "enc_depth=" << enc_depth << '\n'
     << "dec_depth=" << dec_depth << '\n'
     << "dropout_state=" << dropout_state << '\n'
     << "dropout_state_enc=" << dropout_state_enc << '\n'
     << "dropout_state_dec=" << dropout_state_dec << '\n'
     << "dropout_src=" << dropout_src << '\n'
     << "label_smoothing=" << label_smoothing << '\n'
     << "tied_embeddings=" << (tied_embeddings ? 1 : 0) << '\n'
     << "layer_norm=" << (layer_norm ? 1 : 0) << '\n'
     << "cell=" << cell << '\n';
  return ss.str();
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  ModelConfig cfg;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("ModelConfig: bad line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "vocab_size") cfg.vocab_size = std::stoi(val);
    else if (key == "embed_dim") cfg.embed_dim = std::stoi(val);
    else if (key == "hidden_dim") cfg.hidden_dim = std::stoi(val);
    else if (key == "enc_depth") cfg.enc_depth = std::stoi(val);
    else if (key == "dec_depth") cfg.dec_depth = std::stoi(val);
    else if (key == "dropout_state") cfg.dropout_state = std::stod(val);
    else if (key == "dropout_state_enc") cfg.dropout_state_enc = std::stod(val);
    else if (key == "dropout_state_dec") cfg.dropout_state_dec = std::stod(val);
    else if (key == "dropout_src") cfg.dropout_src = std::stod(val);
    else if (key == "label_smoothing") cfg.label_smoothing = std::stod(val);
    else if (key == "tied_embeddings") cfg.tied_embeddings = val == "1";
    else if (key == "layer_norm") cfg.layer_norm = val == "1";
    else if (key == "cell") cfg.cell = val;
    else throw std::runtime_error("ModelConfig: unknown key '" + key + "'");
  }
  return cfg;
}

std::vector<Parameter*> Network::parameters() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

Parameter* Network::find_parameter(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

void Network::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

Parameter& Network::add_param(const std::string& name, std::vector<int> shape) {
  params_.push_back(std::make_unique<Parameter>(name, Tensor::zeros(std::move(shape))));
  return *params_.back();
}

GruLayer Network::add_gru(const std::string& prefix, int in_dim) {
  const int h = cfg_.hidden_dim;
  GruLayer l;
  l.w_zr = &add_param(prefix + ".w_zr", {2 * h, in_dim});
  l.u_zr = &add_param(prefix + ".u_zr", {2 * h, h});
  l.b_zr = &add_param(prefix + ".b_zr", {2 * h});
  l.w_h = &add_param(prefix + ".w_h", {h, in_dim});
  l.u_h = &add_param(prefix + ".u_h", {h, h});
  l.b_h = &add_param(prefix + ".b_h", {h});
  if (cfg_.layer_norm) {
    l.g_zr = &add_param(prefix + ".g_zr", {2 * h});
    l.g_h = &add_param(prefix + ".g_h", {h});
  }
  return l;
}

void Network::init_params(uint64_t seed) {
  Rng rng(seed);
  const double emb_scale = std::sqrt(3.0 / static_cast<double>(cfg_.embed_dim));
  for (auto& p : params_) {
    const bool is_embedding = p->name == "embedding" || p->name == "out_embedding";
    const bool is_bias = p->name.ends_with(".b_zr") || p->name.ends_with(".b_h") ||
                         p->name.ends_with(".b") || p->name == "out_bias";
    const bool is_gain = p->name.ends_with(".g_zr") || p->name.ends_with(".g_h");
    if (is_gain) {
      p->value.fill(1.0);
    } else if (is_bias) {
      p->value.fill(0.0);
    } else if (is_embedding) {
      for (double& v : p->value.data) v = rng.uniform(-emb_scale, emb_scale);
    } else {
      for (double& v : p->value.data) v = rng.uniform(-0.08, 0.08);
    }
  }
}

NodeId Network::gru_step(Graph& g, const GruLayer& gru, NodeId x, NodeId h_prev,
                         double state_dropout) const {
  const int h_dim = cfg_.hidden_dim;
  const NodeId h_in = g.dropout(h_prev, state_dropout);
  NodeId pre_zr = g.add(g.matmul(g.param(*gru.w_zr), x), g.matmul(g.param(*gru.u_zr), h_in));
  pre_zr = cfg_.layer_norm
               ? g.layer_norm(pre_zr, g.param(*gru.g_zr), g.param(*gru.b_zr))
               : g.add(pre_zr, g.param(*gru.b_zr));
  const NodeId zr = g.sigmoid(pre_zr);
  const NodeId z = g.slice(zr, 0, h_dim);
  const NodeId r = g.slice(zr, h_dim, 2 * h_dim);
  NodeId pre_h = g.add(g.matmul(g.param(*gru.w_h), x),
                       g.matmul(g.param(*gru.u_h), g.mul(r, h_in)));
  pre_h = cfg_.layer_norm ? g.layer_norm(pre_h, g.param(*gru.g_h), g.param(*gru.b_h))
                          : g.add(pre_h, g.param(*gru.b_h));
  const NodeId h_tilde = g.tanh(pre_h);
  // h' = (1 - z) ⊙ h + z ⊙ h~
  return g.add(g.mul(g.one_minus(z), h_in), g.mul(z, h_tilde));
}

NodeId Network::output_logp(Graph& g, Parameter& out_w, Parameter& out_b, NodeId features) {
  const NodeId t = g.tanh(g.add(g.matmul(g.param(out_w), features), g.param(out_b)));
  Parameter& table = cfg_.tied_embeddings ? *embedding : *out_embedding;
  const NodeId logits = g.add(g.matmul(g.param(table), t), g.param(*out_bias));
  return g.log_softmax(logits);
}

SegModel::SegModel(ModelConfig cfg, Vocabulary vocab, uint64_t seed)
    : Network(std::move(cfg), std::move(vocab)) {
  cfg_.validate();
  if (cfg_.vocab_size != vocab_.size())
    throw std::invalid_argument("SegModel: vocab_size does not match vocabulary");
  const int e = cfg_.embed_dim;
  const int h = cfg_.hidden_dim;
  const int a = h;  // attention dim

  embedding = &add_param("embedding", {cfg_.vocab_size, e});
  if (!cfg_.tied_embeddings) out_embedding = &add_param("out_embedding", {cfg_.vocab_size, e});

  for (int l = 0; l < cfg_.enc_depth; ++l) {
    const int in_dim = l == 0 ? e : 2 * h;
    enc_fwd_.push_back(add_gru("enc.l" + std::to_string(l) + ".fwd", in_dim));
    enc_bwd_.push_back(add_gru("enc.l" + std::to_string(l) + ".bwd", in_dim));
  }
  for (int l = 0; l < cfg_.dec_depth; ++l) {
    const int in_dim = l == 0 ? e + 2 * h : h;
    dec_.push_back(add_gru("dec.l" + std::to_string(l), in_dim));
  }
  att_w_enc_ = &add_param("att.w_enc", {2 * h, a});
  att_w_dec_ = &add_param("att.w_dec", {h, a});
  att_v_ = &add_param("att.v", {a});
  for (int l = 0; l < cfg_.dec_depth; ++l) {
    init_w_.push_back(&add_param("init.l" + std::to_string(l) + ".w", {h, 2 * h}));
    init_b_.push_back(&add_param("init.l" + std::to_string(l) + ".b", {h}));
  }
  out_w_ = &add_param("out.w", {e, h + 2 * h + e});
  out_b_ = &add_param("out.b", {e});
  out_bias = &add_param("out_bias", {cfg_.vocab_size});

  init_params(seed);
}

SegModel::Encoded SegModel::encode(Graph& g, std::span<const TokenId> source) {
  if (source.empty()) throw std::invalid_argument("encode: empty source");
  const int h = cfg_.hidden_dim;
  const size_t len = source.size();
  const NodeId table = g.param(*embedding);
  const double p_src = cfg_.dropout_src;

  std::vector<NodeId> inputs(len);
  for (size_t t = 0; t < len; ++t)
    inputs[t] = g.token_dropout(g.embedding_lookup(table, source[t]), p_src);

  std::vector<NodeId> fwd(len), bwd(len);
  const double p_state = cfg_.enc_state_dropout();
  for (int l = 0; l < cfg_.enc_depth; ++l) {
    NodeId hf = g.constant(Tensor::zeros({h}));
    for (size_t t = 0; t < len; ++t) {
      hf = gru_step(g, enc_fwd_[static_cast<size_t>(l)], inputs[t], hf, p_state);
      fwd[t] = hf;
    }
    NodeId hb = g.constant(Tensor::zeros({h}));
    for (size_t t = len; t-- > 0;) {
      hb = gru_step(g, enc_bwd_[static_cast<size_t>(l)], inputs[t], hb, p_state);
      bwd[t] = hb;
    }
    if (l + 1 < cfg_.enc_depth)
      for (size_t t = 0; t < len; ++t) inputs[t] = g.concat({fwd[t], bwd[t]});
  }

  std::vector<NodeId> rows(len);
  for (size_t t = 0; t < len; ++t) rows[t] = g.concat({fwd[t], bwd[t]});
  Encoded enc;
  enc.length = static_cast<int>(len);
  enc.states = g.reshape(g.concat(rows), {static_cast<int>(len), 2 * h});
  enc.att_proj = g.matmul(enc.states, g.param(*att_w_enc_));
  return enc;
}

SegModel::DecState SegModel::initial_state(Graph& g, const Encoded& enc) {
  // tanh-projected mean of encoder states.
  Tensor ones({enc.length});
  ones.fill(1.0 / static_cast<double>(enc.length));
  const NodeId mean = g.matmul(g.constant(std::move(ones)), enc.states);
  DecState state;
  state.layers.reserve(init_w_.size());
  for (size_t l = 0; l < init_w_.size(); ++l)
    state.layers.push_back(
        g.tanh(g.add(g.matmul(g.param(*init_w_[l]), mean), g.param(*init_b_[l]))));
  return state;
}

NodeId SegModel::attend(Graph& g, NodeId query_state, const Encoded& enc) const {
  // e_j = v . tanh(W_enc h_j + W_dec s), alpha = softmax(e)
  const NodeId q = g.matmul(query_state, g.param(*att_w_dec_));
  const NodeId scores = g.matmul(g.tanh(g.add_rowwise(enc.att_proj, q)), g.param(*att_v_));
  return g.softmax(scores);
}

SegModel::StepResult SegModel::decode_step(Graph& g, TokenId prev, const DecState& state,
                                           const Encoded& enc) {
  const NodeId emb = g.embedding_lookup(g.param(*embedding), prev);
  const NodeId alpha = attend(g, state.layers.back(), enc);
  const NodeId context = g.matmul(alpha, enc.states);

  StepResult out;
  out.attention = alpha;
  out.state.layers.reserve(state.layers.size());
  const double p_state = cfg_.dec_state_dropout();
  NodeId x = g.concat({emb, context});
  for (size_t l = 0; l < dec_.size(); ++l) {
    const NodeId h_new = gru_step(g, dec_[l], x, state.layers[l], p_state);
    out.state.layers.push_back(h_new);
    x = h_new;
  }
  const NodeId features = g.concat({out.state.layers.back(), context, emb});
  out.logp = output_logp(g, *out_w_, *out_b_, features);
  return out;
}

std::vector<NodeId> SegModel::teacher_forced_nll(Graph& g, const WeightedExample& ex,
                                                 double k_delim, double label_smoothing) {
  if (ex.target.empty()) throw std::invalid_argument("example_loss: empty target");
  const Encoded enc = encode(g, ex.source);
  DecState state = initial_state(g, enc);
  std::vector<NodeId> terms;
  terms.reserve(ex.target.size());
  TokenId prev = kBosId;
  for (TokenId y : ex.target) {
    StepResult step = decode_step(g, prev, state, enc);
    const double lambda = y == kDelimId ? k_delim : 1.0;
    terms.push_back(g.weighted_nll(step.logp, y, lambda, label_smoothing));
    state = std::move(step.state);
    prev = y;
  }
  return terms;
}

namespace {
NodeId sum_terms(Graph& g, const std::vector<NodeId>& terms) {
  NodeId sum = terms[0];
  for (size_t i = 1; i < terms.size(); ++i) sum = g.add(sum, terms[i]);
  return sum;
}
}  // namespace

NodeId SegModel::example_loss(Graph& g, const WeightedExample& ex, double k_delim) {
  const auto terms = teacher_forced_nll(g, ex, k_delim, cfg_.label_smoothing);
  const NodeId base = g.scale(sum_terms(g, terms), 1.0 / static_cast<double>(terms.size()));
  // Sentence weight multiplies last so that weight k is exactly k times the
  // weight-1 loss.
  return g.scale(base, ex.weight);
}

NodeId SegModel::example_nll_sum(Graph& g, const WeightedExample& ex) {
  const auto terms = teacher_forced_nll(g, ex, 1.0, 0.0);
  return sum_terms(g, terms);
}

CharLM::CharLM(ModelConfig cfg, Vocabulary vocab, uint64_t seed)
    : Network(std::move(cfg), std::move(vocab)) {
  cfg_.validate();
  if (cfg_.vocab_size != vocab_.size())
    throw std::invalid_argument("CharLM: vocab_size does not match vocabulary");
  const int e = cfg_.embed_dim;
  const int h = cfg_.hidden_dim;

  embedding = &add_param("embedding", {cfg_.vocab_size, e});
  if (!cfg_.tied_embeddings) out_embedding = &add_param("out_embedding", {cfg_.vocab_size, e});
  for (int l = 0; l < cfg_.dec_depth; ++l)
    layers_.push_back(add_gru("lm.l" + std::to_string(l), l == 0 ? e : h));
  out_w_ = &add_param("out.w", {e, h + e});
  out_b_ = &add_param("out.b", {e});
  out_bias = &add_param("out_bias", {cfg_.vocab_size});

  init_params(seed);
}

CharLM::State CharLM::initial_state(Graph& g) const {
  State state;
  state.layers.reserve(layers_.size());
  for (size_t l = 0; l < layers_.size(); ++l)
    state.layers.push_back(g.constant(Tensor::zeros({cfg_.hidden_dim})));
  return state;
}

CharLM::StepResult CharLM::lm_step(Graph& g, TokenId prev, const State& state) {
  const NodeId emb = g.embedding_lookup(g.param(*embedding), prev);
  StepResult out;
  out.state.layers.reserve(state.layers.size());
  const double p_state = cfg_.dec_state_dropout();
  NodeId x = emb;
  for (size_t l = 0; l < layers_.size(); ++l) {
    const NodeId h_new = gru_step(g, layers_[l], x, state.layers[l], p_state);
    out.state.layers.push_back(h_new);
    x = h_new;
  }
  const NodeId features = g.concat({out.state.layers.back(), emb});
  out.logp = output_logp(g, *out_w_, *out_b_, features);
  return out;
}

std::vector<NodeId> CharLM::teacher_forced_nll(Graph& g, const WeightedExample& ex,
                                               double k_delim, double label_smoothing) {
  if (ex.target.empty()) throw std::invalid_argument("example_loss: empty target");
  State state = initial_state(g);
  std::vector<NodeId> terms;
  terms.reserve(ex.target.size());
  TokenId prev = kBosId;
  for (TokenId y : ex.target) {
    StepResult step = lm_step(g, prev, state);
    const double lambda = y == kDelimId ? k_delim : 1.0;
    terms.push_back(g.weighted_nll(step.logp, y, lambda, label_smoothing));
    state = std::move(step.state);
    prev = y;
  }
  return terms;
}

NodeId CharLM::example_loss(Graph& g, const WeightedExample& ex, double k_delim) {
  const auto terms = teacher_forced_nll(g, ex, k_delim, cfg_.label_smoothing);
  const NodeId base = g.scale(sum_terms(g, terms), 1.0 / static_cast<double>(terms.size()));
  return g.scale(base, ex.weight);
}

NodeId CharLM::example_nll_sum(Graph& g, const WeightedExample& ex) {
  const auto terms = teacher_forced_nll(g, ex, 1.0, 0.0);
  return sum_terms(g, terms);
}

std::unique_ptr<Network> make_network(const std::string& arch, ModelConfig cfg, Vocabulary vocab,
                                      uint64_t seed) {
  if (arch == "seg") return std::make_unique<SegModel>(std::move(cfg), std::move(vocab), seed);
  if (arch == "lm") return std::make_unique<CharLM>(std::move(cfg), std::move(vocab), seed);
  throw std::invalid_argument("make_network: unknown arch '" + arch + "'");
}

}  // namespace segtrans
