#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "segtrans/model.hpp"
#include "segtrans/tensor.hpp"
#include "segtrans/vocab.hpp"

namespace segtrans {

// Adam moment estimates, half the optimizer state; step count is the other.
struct AdamMoments {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  int64_t step = 0;
};

// Versioned container of everything needed to resume or decode: config,
// vocabulary, parameters in declaration order, optional optimizer moments.
// Binary format: magic "SGT1", u32 version, length-prefixed metadata text,
// then raw little-endian f64 tensor payloads.
struct Checkpoint {
  static constexpr uint32_t kVersion = 1;

  std::string arch = "seg";  // "seg" or "lm"
  ModelConfig config;
  Vocabulary vocabulary;
  std::vector<std::string> param_names;
  std::vector<Tensor> params;
  std::optional<AdamMoments> moments;
  int64_t epoch = 0;
  double best_valid_cost = 0.0;
  uint64_t seed = 0;

  static Checkpoint from_network(Network& net, uint64_t seed);
  std::unique_ptr<Network> restore() const;  // builds the network and loads weights

  // Distinct failures: "not a checkpoint" (bad magic), "unsupported
  // checkpoint version", "truncated payload".
  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace segtrans
