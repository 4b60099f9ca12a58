#include "segtrans/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace segtrans {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (patience < 1) throw std::invalid_argument("TrainConfig: patience must be >= 1");
  if (batch_tokens < 1) throw std::invalid_argument("TrainConfig: batch_tokens must be >= 1");
  if (k_delim < 0.0) throw std::invalid_argument("TrainConfig: k_delim must be >= 0");
  if (max_epochs < 1) throw std::invalid_argument("TrainConfig: max_epochs must be >= 1");
}

std::string TrainConfig::to_text() const {
  std::ostringstream ss;
  ss.precision(17);
  ss << "learning_rate=" << learning_rate << '\n'
     << "adam_beta1=" << adam_beta1 << '\n'
     << "adam_beta2=" << adam_beta2 << '\n'
     << "adam_eps=" << adam_eps << '\n'
     << "batch_tokens=" << batch_tokens << '\n'
     << "patience=" << patience << '\n'
     << "k_delim=" << k_delim << '\n'
     << "max_epochs=" << max_epochs << '\n'
     << "seed=" << seed << '\n'
     << "eval_every=" << eval_every << '\n'
     << "clip_norm=" << clip_norm << '\n'
     << "save_moments=" << (save_moments ? 1 : 0) << '\n'
     << "float32=" << (float32 ? 1 : 0) << '\n';
  return ss.str();
}

void adam_update(std::vector<Parameter*>& params, AdamMoments& moments, int64_t t,
                 const TrainConfig& cfg) {
  if (t < 1) throw std::invalid_argument("adam_update: step must be >= 1");
  if (moments.m.empty()) {
    for (Parameter* p : params) {
      moments.m.push_back(Tensor::zeros(p->value.shape));
      moments.v.push_back(Tensor::zeros(p->value.shape));
    }
  }
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(t));
  for (size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    Tensor& m = moments.m[i];
    Tensor& v = moments.v[i];
    for (size_t j = 0; j < p.value.numel(); ++j) {
      const double g = p.grad.data[j];
      if (!std::isfinite(g))
        throw std::runtime_error("adam_update: non-finite gradient in tensor " + p.name);
      m.data[j] = b1 * m.data[j] + (1.0 - b1) * g;
      v.data[j] = b2 * v.data[j] + (1.0 - b2) * g * g;
      const double m_hat = m.data[j] / bias1;
      const double v_hat = v.data[j] / bias2;
      p.value.data[j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    }
  }
  moments.step = t;
}

double validation_cost(Network& net, const std::vector<WeightedExample>& valid) {
  double nll = 0.0;
  size_t tokens = 0;
  for (const auto& ex : valid) {
    Graph g(Graph::Mode::eval);
    nll += g.value(net.example_nll_sum(g, ex)).data[0];
    tokens += ex.target.size();
  }
  if (tokens == 0) throw std::invalid_argument("validation_cost: empty validation set");
  return nll / static_cast<double>(tokens);
}

namespace {

// Length-sorted token-budget batches; ties keep dataset order.
std::vector<std::vector<size_t>> make_batches(const std::vector<WeightedExample>& dataset,
                                              int batch_tokens) {
  std::vector<size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return dataset[a].target.size() < dataset[b].target.size();
  });
  std::vector<std::vector<size_t>> batches;
  std::vector<size_t> cur;
  size_t cur_tokens = 0;
  for (size_t idx : order) {
    const size_t len = dataset[idx].target.size();
    if (!cur.empty() && cur_tokens + len > static_cast<size_t>(batch_tokens)) {
      batches.push_back(std::move(cur));
      cur.clear();
      cur_tokens = 0;
    }
    cur.push_back(idx);
    cur_tokens += len;
  }
  if (!cur.empty()) batches.push_back(std::move(cur));
  return batches;
}

void clip_gradients(std::vector<Parameter*>& params, double clip_norm) {
  if (clip_norm <= 0.0) return;
  double sq = 0.0;
  for (Parameter* p : params)
    for (double g : p->grad.data) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > clip_norm) {
    const double s = clip_norm / norm;
    for (Parameter* p : params)
      for (double& g : p->grad.data) g *= s;
  }
}

}  // namespace

TrainResult train(Network& net, const std::vector<WeightedExample>& dataset,
                  const std::vector<WeightedExample>& valid, const TrainConfig& cfg,
                  std::ostream* log_stream) {
  cfg.validate();
  if (dataset.empty() || valid.empty())
    throw std::invalid_argument("train: dataset and valid must be non-empty");

  auto params = net.parameters();
  AdamMoments moments;
  Rng shuffle_rng(derive_seed(cfg.seed, "train-shuffle"));
  Rng dropout_rng(derive_seed(cfg.seed, "train-dropout"));
  const auto precision = cfg.float32 ? Graph::Precision::f32 : Graph::Precision::f64;

  auto batches = make_batches(dataset, cfg.batch_tokens);

  TrainResult result;
  result.best_valid_cost = std::numeric_limits<double>::infinity();
  int bad_evals = 0;
  int64_t update = 0;
  double cost_accum = 0.0;
  int64_t cost_count = 0;
  bool stop = false;

  auto run_validation = [&](int64_t epoch) {
    const double vcost = validation_cost(net, valid);
    const bool improved = vcost < result.best_valid_cost;
    if (improved) {
      result.best_valid_cost = vcost;
      result.best = Checkpoint::from_network(net, cfg.seed);
      result.best.epoch = epoch;
      result.best.best_valid_cost = vcost;
      if (cfg.save_moments) result.best.moments = moments;
      bad_evals = 0;
    } else {
      ++bad_evals;
    }
    TrainLogLine line{update, epoch, cost_count ? cost_accum / static_cast<double>(cost_count) : 0.0,
                      vcost, improved};
    result.log.push_back(line);
    if (log_stream) {
      std::ostream& os = *log_stream;
      os << "update=" << line.update << " epoch=" << line.epoch
         << " train_cost=" << line.train_cost << " valid_cost=" << line.valid_cost
         << (line.is_best ? " *" : "") << '\n';
    }
    cost_accum = 0.0;
    cost_count = 0;
    if (bad_evals >= cfg.patience) stop = true;
  };

  for (int64_t epoch = 1; epoch <= cfg.max_epochs && !stop; ++epoch) {
    shuffle_rng.shuffle(batches);
    for (const auto& batch : batches) {
      net.zero_grad();
      double batch_loss = 0.0;
      const double inv_batch = 1.0 / static_cast<double>(batch.size());
      for (size_t idx : batch) {
        Graph g(Graph::Mode::train, &dropout_rng, precision);
        const NodeId loss = net.example_loss(g, dataset[idx], cfg.k_delim);
        const NodeId scaled = g.scale(loss, inv_batch);
        const double loss_v = g.value(scaled).data[0];
        if (!std::isfinite(loss_v)) {
          std::ostringstream ss;
          ss << "train: non-finite loss at update " << (update + 1) << " (epoch " << epoch << ")";
          throw std::runtime_error(ss.str());
        }
        batch_loss += loss_v;
        g.backward(scaled);
      }
      clip_gradients(params, cfg.clip_norm);
      ++update;
      adam_update(params, moments, update, cfg);
      cost_accum += batch_loss;
      ++cost_count;
      if (cfg.eval_every > 0 && update % cfg.eval_every == 0) {
        run_validation(epoch);
        if (stop) break;
      }
    }
    if (!stop && cfg.eval_every == 0) run_validation(epoch);
    result.epochs = epoch;
  }
  result.updates = update;
  if (result.log.empty()) run_validation(result.epochs);
  return result;
}

TrainResult fine_tune(const Checkpoint& start, const Vocabulary& vocab,
                      const std::vector<WeightedExample>& dataset,
                      const std::vector<WeightedExample>& valid, const TrainConfig& cfg,
                      std::ostream* log_stream) {
  if (!(start.vocabulary == vocab))
    throw std::invalid_argument("fine_tune: vocabulary mismatch between checkpoint and data");
  std::unique_ptr<Network> net = start.restore();
  return train(*net, dataset, valid, cfg, log_stream);
}

}  // namespace segtrans
