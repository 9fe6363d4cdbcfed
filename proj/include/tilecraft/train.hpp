#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tilecraft/agents.hpp"
#include "tilecraft/eval.hpp"
#include "tilecraft/kvconfig.hpp"

namespace tilecraft {

struct TrainConfig {
  double discount = 0.99;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int target_sync_every = 1000;  // updates
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_fraction = 0.2;  // of the budget
  int pretrain_updates = 10000;
  std::size_t buffer_capacity = 100000;
  double grad_clip = 10.0;
  std::uint64_t learning_starts = 1000;  // buffer size before online updates begin
  int train_every = 4;                   // env samples per update
  std::uint64_t eval_every = 5000;
  int bc_epochs = 100;

  // Unknown keys and out-of-range values throw ConfigError.
  static TrainConfig from_kv(const KvConfig& kv);
  void validate() const;
};

// Transitions as feature columns.
struct TransitionBatch {
  Eigen::MatrixXf states, next_states;
  std::vector<int> actions;
  Eigen::VectorXf rewards;
  std::vector<std::uint8_t> dones;

  std::size_t size() const { return actions.size(); }
};

// Ring buffer; once full the oldest transition is overwritten, demonstrations included.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int feature_dim);

  void add(const float* state, int action, float reward, const float* next_state, bool done, bool demo = false);
  // Uniform indices, distinct within the batch. Requires n <= size().
  std::vector<std::size_t> sample_indices(std::size_t n, SplitMix64& rng) const;
  TransitionBatch gather(const std::vector<std::size_t>& indices) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t demo_count() const { return demo_count_; }

 private:
  std::size_t capacity_;
  int dim_;
  std::size_t head_ = 0, size_ = 0, demo_count_ = 0;
  std::vector<float> states_, next_;
  std::vector<int> actions_;
  std::vector<float> rewards_;
  std::vector<std::uint8_t> dones_, demo_;
};

// Online and target dueling networks with an Adam optimizer.
class QLearner {
 public:
  QLearner(int inputs, const TrainConfig& config, SplitMix64& init_rng);

  // One double-DQN Huber step; returns the loss. Syncs the target every
  // target_sync_every updates.
  float update(const TransitionBatch& batch);

  const nn::Network<float>& online() const { return online_; }
  const nn::Network<float>& target() const { return target_; }
  std::uint64_t updates() const { return updates_; }

 private:
  TrainConfig config_;
  nn::Network<float> online_, target_;
  nn::Adam<float> adam_;
  nn::Params<float> grads_;
  std::uint64_t updates_ = 0;
};

// Consecutive demonstration tuples paired into transitions. A trajectory's
// final tuple is kept only when it ends the episode.
// `spec` is needed when the logs were recorded with overrides.
TransitionBatch load_demo_transitions(const std::filesystem::path& root, const std::vector<std::string>& ids,
                                      const TexturePack& pack, const std::optional<TaskSpec>& spec = std::nullopt);

struct CurvePoint {
  std::uint64_t samples = 0;
  double mean_score = 0.0;
};

struct TrainResult {
  std::unique_ptr<Policy> policy;
  std::vector<CurvePoint> curve;
  std::uint64_t samples_consumed = 0;
};

// `eval` scores the greedy policy at every eval_every samples and at the end;
// evaluation runs outside the budget.
TrainResult train_dqn(const TaskSpec& spec, Budget& budget, const TrainConfig& config, std::uint64_t seed,
                      const EvalConfig& eval);

// Phase 1: pretrain_updates updates on demo minibatches only. Phase 2: the
// buffer is prefilled with the demos and train_dqn's loop runs. Throws
// ConfigError on an empty demo set.
TrainResult train_predqn(const TaskSpec& spec, const TransitionBatch& demos, Budget& budget,
                         const TrainConfig& config, std::uint64_t seed, const EvalConfig& eval);

// Phase 1 alone, for inspection.
QLearner pretrain_on_demos(const TransitionBatch& demos, const TrainConfig& config, std::uint64_t seed);

struct BcResult {
  std::unique_ptr<BcPolicy> policy;
  double train_accuracy = 0.0;
};

// Cross-entropy on the tuples of `ids`; epoch order depends only on `seed`.
// Throws ConfigError when `ids` is empty.
BcResult train_bc(const std::filesystem::path& root, const std::vector<std::string>& ids, const TexturePack& pack,
                  const TrainConfig& config, std::uint64_t seed, const std::optional<TaskSpec>& spec = std::nullopt);

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::filesystem::path& path);

// First curve point at or above `threshold`, or nullopt.
std::optional<std::uint64_t> samples_to_threshold(const std::vector<CurvePoint>& curve, double threshold);

}  // namespace tilecraft
