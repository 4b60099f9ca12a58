#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "segtrans/augment.hpp"
#include "segtrans/checkpoint.hpp"
#include "segtrans/model.hpp"

namespace segtrans {

struct TrainConfig {
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_tokens = 512;   // token budget per mini-batch (6000 at full scale)
  int patience = 10;        // consecutive non-improving validations before stopping
  double k_delim = 2.0;     // delimiter weight of the token-weighted objective
  int max_epochs = 50;
  uint64_t seed = 1;
  int eval_every = 0;       // updates between validations; 0 = once per epoch
  double clip_norm = 5.0;   // global gradient norm clip; 0 disables
  bool save_moments = false;
  bool float32 = false;     // round primitive results to single precision

  void validate() const;
  std::string to_text() const;
};

// Standard bias-corrected Adam over all parameters. t is the 1-based update
// count. Throws (naming the tensor) on a non-finite gradient.
void adam_update(std::vector<Parameter*>& params, AdamMoments& moments, int64_t t,
                 const TrainConfig& cfg);

struct TrainLogLine {
  int64_t update = 0;
  int64_t epoch = 0;
  double train_cost = 0.0;
  double valid_cost = 0.0;
  bool is_best = false;
};

struct TrainResult {
  Checkpoint best;             // minimum-validation-cost checkpoint seen
  double best_valid_cost = 0.0;
  int64_t updates = 0;
  int64_t epochs = 0;
  std::vector<TrainLogLine> log;
};

// Unweighted per-token mean cross-entropy over a set; the model-selection
// metric. Sentence weights and k_delim do not apply here.
double validation_cost(Network& net, const std::vector<WeightedExample>& valid);

// Mini-batches are assembled by token budget over length-sorted examples;
// batch order is shuffled per epoch. Stops when the validation cost fails
// to improve for `patience` consecutive evaluations and returns the best
// checkpoint. Single-threaded and bitwise reproducible for a fixed
// (seed, config, data).
TrainResult train(Network& net, const std::vector<WeightedExample>& dataset,
                  const std::vector<WeightedExample>& valid, const TrainConfig& cfg,
                  std::ostream* log_stream = nullptr);

// train() initialized from a previous checkpoint's parameters; optimizer
// moments start fresh. The checkpoint's vocabulary must equal the one the
// datasets were encoded with.
TrainResult fine_tune(const Checkpoint& start, const Vocabulary& vocab,
                      const std::vector<WeightedExample>& dataset,
                      const std::vector<WeightedExample>& valid, const TrainConfig& cfg,
                      std::ostream* log_stream = nullptr);

}  // namespace segtrans
