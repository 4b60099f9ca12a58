#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "segtrans/augment.hpp"
#include "segtrans/graph.hpp"
#include "segtrans/vocab.hpp"

namespace segtrans {

struct ModelConfig {
  int vocab_size = 0;
  int embed_dim = 64;
  int hidden_dim = 128;
  int enc_depth = 1;
  int dec_depth = 1;
  double dropout_state = 0.2;      // between RNN states, encoder and decoder
  double dropout_state_enc = -1.0; // per-side override; negative = use dropout_state
  double dropout_state_dec = -1.0;
  double dropout_src = 0.0;        // whole-token dropout on source embeddings
  double label_smoothing = 0.0;
  bool tied_embeddings = true;
  bool layer_norm = true;
  std::string cell = "gru";

  double enc_state_dropout() const {
    return dropout_state_enc >= 0.0 ? dropout_state_enc : dropout_state;
  }
  double dec_state_dropout() const {
    return dropout_state_dec >= 0.0 ? dropout_state_dec : dropout_state;
  }
  void validate() const;  // throws std::invalid_argument

  std::string to_text() const;
  static ModelConfig from_text(const std::string& text);
  bool operator==(const ModelConfig&) const = default;
};

// One GRU layer's parameters; gates are fused as [z; r].
struct GruLayer {
  Parameter* w_zr = nullptr;  // (2H x in)
  Parameter* u_zr = nullptr;  // (2H x H)
  Parameter* b_zr = nullptr;  // (2H)
  Parameter* w_h = nullptr;   // (H x in)
  Parameter* u_h = nullptr;   // (H x H)
  Parameter* b_h = nullptr;   // (H)
  Parameter* g_zr = nullptr;  // layer-norm gains, present iff layer_norm
  Parameter* g_h = nullptr;
};

// Common base for trainable networks: owns named parameters in a stable
// order (checkpoint and optimizer order), exposes per-sentence losses.
//
// Built networks are never mutated by the forward pass; sharing one instance
// across decoding threads is safe as long as no training step runs
// concurrently.
class Network {
 public:
  virtual ~Network() = default;

  virtual std::string arch() const = 0;

  // L = -(weight / n) * sum_i lambda_i log P(y_i | y_<i, X); lambda_i =
  // k_delim for the delimiter token, 1 otherwise. The sentence weight is
  // applied as the final multiplication.
  virtual NodeId example_loss(Graph& g, const WeightedExample& ex, double k_delim) = 0;

  // Unweighted, unsmoothed sum of -log P over the target; the validation
  // metric is this summed over the set divided by the token count.
  virtual NodeId example_nll_sum(Graph& g, const WeightedExample& ex) = 0;

  const ModelConfig& config() const { return cfg_; }
  const Vocabulary& vocab() const { return vocab_; }
  std::vector<Parameter*> parameters();
  Parameter* find_parameter(const std::string& name);
  void zero_grad();

 protected:
  Network(ModelConfig cfg, Vocabulary vocab) : cfg_(std::move(cfg)), vocab_(std::move(vocab)) {}
  Parameter& add_param(const std::string& name, std::vector<int> shape);
  GruLayer add_gru(const std::string& prefix, int in_dim);
  void init_params(uint64_t seed);

  // Builds one GRU step; h_prev passes through state dropout first.
  NodeId gru_step(Graph& g, const GruLayer& gru, NodeId x, NodeId h_prev,
                  double state_dropout) const;
  // Output path shared by the decoders: tanh feature layer, then logits
  // through the (tied) embedding table.
  NodeId output_logp(Graph& g, Parameter& out_w, Parameter& out_b, NodeId features);

  ModelConfig cfg_;
  Vocabulary vocab_;
  std::vector<std::unique_ptr<Parameter>> params_;

 public:
  // Embedding table shared by source, target and (when tied) output layers.
  Parameter* embedding = nullptr;
  Parameter* out_embedding = nullptr;  // only when tied_embeddings is false

 protected:
  Parameter* out_bias = nullptr;
};

// Bidirectional GRU encoder + additive-attention GRU decoder with tied
// embeddings: reads characters, writes characters with delimiters.
class SegModel : public Network {
 public:
  SegModel(ModelConfig cfg, Vocabulary vocab, uint64_t seed);

  std::string arch() const override { return "seg"; }

  struct Encoded {
    NodeId states = -1;    // (L x 2H), forward‖backward per position
    NodeId att_proj = -1;  // (L x A), encoder side of the attention sum
    int length = 0;
  };
  struct DecState {
    std::vector<NodeId> layers;  // one hidden state node per decoder layer
  };
  struct StepResult {
    NodeId logp = -1;       // (V), log-probabilities, normalized
    DecState state;
    NodeId attention = -1;  // (L), non-negative, sums to 1
  };

  // Throws on an empty source. In train mode each source embedding is
  // zeroed whole with probability dropout_src.
  Encoded encode(Graph& g, std::span<const TokenId> source);

  // tanh-projected mean of encoder states, one projection per layer.
  DecState initial_state(Graph& g, const Encoded& enc);

  StepResult decode_step(Graph& g, TokenId prev, const DecState& state, const Encoded& enc);

  NodeId example_loss(Graph& g, const WeightedExample& ex, double k_delim) override;
  NodeId example_nll_sum(Graph& g, const WeightedExample& ex) override;

 private:
  NodeId attend(Graph& g, NodeId query_state, const Encoded& enc) const;
  std::vector<NodeId> teacher_forced_nll(Graph& g, const WeightedExample& ex, double k_delim,
                                         double label_smoothing);

  std::vector<GruLayer> enc_fwd_, enc_bwd_, dec_;
  Parameter* att_w_enc_ = nullptr;  // (2H x A)
  Parameter* att_w_dec_ = nullptr;  // (H x A)
  Parameter* att_v_ = nullptr;      // (A)
  std::vector<Parameter*> init_w_, init_b_;
  Parameter* out_w_ = nullptr;      // (E x (H + 2H + E))
  Parameter* out_b_ = nullptr;      // (E)
};

// Character RNN language model over the segmented (delimiter-bearing)
// target side: the decoder architecture minus attention.
class CharLM : public Network {
 public:
  CharLM(ModelConfig cfg, Vocabulary vocab, uint64_t seed);

  std::string arch() const override { return "lm"; }

  struct State {
    std::vector<NodeId> layers;
  };
  struct StepResult {
    NodeId logp = -1;
    State state;
  };

  State initial_state(Graph& g) const;
  StepResult lm_step(Graph& g, TokenId prev, const State& state);

  NodeId example_loss(Graph& g, const WeightedExample& ex, double k_delim) override;
  NodeId example_nll_sum(Graph& g, const WeightedExample& ex) override;

 private:
  std::vector<NodeId> teacher_forced_nll(Graph& g, const WeightedExample& ex, double k_delim,
                                         double label_smoothing);

  std::vector<GruLayer> layers_;
  Parameter* out_w_ = nullptr;  // (E x (H + E))
  Parameter* out_b_ = nullptr;
};

std::unique_ptr<Network> make_network(const std::string& arch, ModelConfig cfg, Vocabulary vocab,
                                      uint64_t seed);

}  // namespace segtrans
