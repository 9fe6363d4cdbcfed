#include "tilecraft/train.hpp"

#include <algorithm>
#include <fstream>

#include "tilecraft/dataset.hpp"
#include "tilecraft/errors.hpp"

namespace tilecraft {

TrainConfig TrainConfig::from_kv(const KvConfig& kv) {
  TrainConfig c;
  for (const auto& [key, value] : kv.values()) {
    if (key == "discount") c.discount = *kv.get_double(key);
    else if (key == "learning_rate") c.learning_rate = *kv.get_double(key);
    else if (key == "batch_size") c.batch_size = static_cast<int>(*kv.get_int(key));
    else if (key == "target_sync_every") c.target_sync_every = static_cast<int>(*kv.get_int(key));
    else if (key == "epsilon_start") c.epsilon_start = *kv.get_double(key);
    else if (key == "epsilon_end") c.epsilon_end = *kv.get_double(key);
    else if (key == "epsilon_fraction") c.epsilon_fraction = *kv.get_double(key);
    else if (key == "pretrain_updates") c.pretrain_updates = static_cast<int>(*kv.get_int(key));
    else if (key == "buffer_capacity") c.buffer_capacity = *kv.get_u64(key);
    else if (key == "grad_clip") c.grad_clip = *kv.get_double(key);
    else if (key == "learning_starts") c.learning_starts = *kv.get_u64(key);
    else if (key == "train_every") c.train_every = static_cast<int>(*kv.get_int(key));
    else if (key == "eval_every") c.eval_every = *kv.get_u64(key);
    else if (key == "bc_epochs") c.bc_epochs = static_cast<int>(*kv.get_int(key));
    else throw ConfigError("unknown training key: " + key);
  }
  c.validate();
  return c;
}

void TrainConfig::validate() const {
  if (!(discount > 0 && discount < 1)) throw ConfigError("discount must be in (0, 1)");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (batch_size <= 0 || target_sync_every <= 0 || pretrain_updates < 0 || train_every <= 0 || bc_epochs <= 0)
    throw ConfigError("batch_size, target_sync_every, train_every and bc_epochs must be positive");
  if (buffer_capacity < static_cast<std::size_t>(batch_size)) throw ConfigError("buffer_capacity below batch_size");
  if (eval_every == 0) throw ConfigError("eval_every must be positive");
  if (!(grad_clip > 0)) throw ConfigError("grad_clip must be positive");
  if (epsilon_start < 0 || epsilon_start > 1 || epsilon_end < 0 || epsilon_end > 1)
    throw ConfigError("epsilon must be in [0, 1]");
  if (!(epsilon_fraction > 0 && epsilon_fraction <= 1)) throw ConfigError("epsilon_fraction must be in (0, 1]");
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, int feature_dim) : capacity_(capacity), dim_(feature_dim) {
  if (capacity == 0) throw ConfigError("replay capacity must be positive");
}

void ReplayBuffer::add(const float* state, int action, float reward, const float* next_state, bool done, bool demo) {
  if (size_ < capacity_) {
    states_.insert(states_.end(), state, state + dim_);
    next_.insert(next_.end(), next_state, next_state + dim_);
    actions_.push_back(action);
    rewards_.push_back(reward);
    dones_.push_back(done);
    demo_.push_back(demo);
    ++size_;
  } else {
    std::copy(state, state + dim_, states_.begin() + head_ * dim_);
    std::copy(next_state, next_state + dim_, next_.begin() + head_ * dim_);
    actions_[head_] = action;
    rewards_[head_] = reward;
    dones_[head_] = done;
    demo_count_ -= demo_[head_];
    demo_[head_] = demo;
  }
  demo_count_ += demo;
  head_ = (head_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, SplitMix64& rng) const {
  if (n > size_) throw std::logic_error("sampling more transitions than the buffer holds");
  std::vector<std::size_t> out;
  out.reserve(n);
  while (out.size() < n) {
    const std::size_t i = rng.below(size_);
    if (std::find(out.begin(), out.end(), i) == out.end()) out.push_back(i);
  }
  return out;
}

TransitionBatch ReplayBuffer::gather(const std::vector<std::size_t>& indices) const {
  TransitionBatch b;
  const auto n = static_cast<Eigen::Index>(indices.size());
  b.states.resize(dim_, n);
  b.next_states.resize(dim_, n);
  b.rewards.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const std::size_t i = indices[j];
    b.states.col(j) = Eigen::Map<const Eigen::VectorXf>(states_.data() + i * dim_, dim_);
    b.next_states.col(j) = Eigen::Map<const Eigen::VectorXf>(next_.data() + i * dim_, dim_);
    b.actions.push_back(actions_[i]);
    b.rewards(j) = rewards_[i];
    b.dones.push_back(dones_[i]);
  }
  return b;
}

QLearner::QLearner(int inputs, const TrainConfig& config, SplitMix64& init_rng)
    : config_(config),
      online_(nn::Head::Dueling, inputs, kActionCount, init_rng),
      target_(online_),
      adam_(static_cast<float>(config.learning_rate)) {}

float QLearner::update(const TransitionBatch& batch) {
  const Eigen::VectorXf y = nn::double_dqn_targets(online_, target_, batch.next_states, batch.rewards, batch.dones,
                                                   static_cast<float>(config_.discount));
  grads_ = nn::Network<float>::zeros_like(online_.layers());
  const float loss = nn::td_loss(online_, batch.states, batch.actions, y, &grads_);
  nn::clip_global_norm(grads_, static_cast<float>(config_.grad_clip));
  adam_.step(online_.layers(), grads_);
  if (++updates_ % static_cast<std::uint64_t>(config_.target_sync_every) == 0) target_ = online_;
  return loss;
}

namespace {

Eigen::MatrixXf batch_features(const SampleBatch& b) {
  Eigen::MatrixXf x(feature_length(b.inventory_len), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < b.size(); ++i)
    write_features<std::uint16_t>(b.pov_at(i), {b.inventory_at(i), b.inventory_len}, b.compass[i],
                                  x.col(static_cast<Eigen::Index>(i)).data());
  return x;
}

SampleBatch read_all(const std::filesystem::path& root, const std::string& id, const TexturePack& pack,
                     const std::optional<TaskSpec>& spec) {
  auto path = tuple_path(root, id, pack.pack_id);
  if (!std::filesystem::exists(path)) path = export_tuples(root, id, pack, spec);
  TupleReader reader(path);
  SampleBatch b;
  b.inventory_len = reader.header().inventory_len;
  for (std::uint64_t i = 0; i < reader.header().tick_count; ++i) reader.read_into(i, b);
  return b;
}

double epsilon_at(const TrainConfig& c, std::uint64_t consumed, std::uint64_t budget) {
  const double horizon = c.epsilon_fraction * static_cast<double>(budget);
  const double t = horizon > 0 ? std::min(1.0, static_cast<double>(consumed) / horizon) : 1.0;
  return c.epsilon_start + t * (c.epsilon_end - c.epsilon_start);
}

double evaluate_greedy(const nn::Network<float>& net, const TaskSpec& spec, const EvalConfig& eval) {
  QPolicy policy(net);
  return run_evaluation(policy, spec, eval).mean;
}

// The online loop shared by both Q-learning baselines.
TrainResult run_q_loop(const TaskSpec& spec, Budget& budget, const TrainConfig& config, std::uint64_t seed,
                       const EvalConfig& eval, QLearner& learner, ReplayBuffer& buffer) {
  BudgetedEnv env(spec, eval.pack, budget);
  SplitMix64 episode_rng(child_seed(seed, 1)), act_rng(child_seed(seed, 2)), sample_rng(child_seed(seed, 3));
  const int dim = static_cast<int>(learner.online().inputs());
  const std::uint64_t warmup = std::max<std::uint64_t>(config.learning_starts, config.batch_size);
  TrainResult result;
  std::uint64_t next_eval = budget.consumed + config.eval_every;
  std::uint64_t steps = 0;
  bool need_reset = true;
  Eigen::VectorXf state(dim);

  auto record_evals = [&] {
    while (budget.consumed >= next_eval) {
      result.curve.push_back({next_eval, evaluate_greedy(learner.online(), spec, eval)});
      next_eval += config.eval_every;
    }
  };

  try {
    while (!budget.exhausted()) {
      if (need_reset) {
        state = features(env.reset(episode_rng.next()));
        need_reset = false;
        record_evals();
        continue;
      }
      const double eps = epsilon_at(config, budget.consumed, budget.max_env_samples);
      int action;
      if (act_rng.uniform() < eps) {
        action = static_cast<int>(act_rng.below(kActionCount));
      } else {
        action = argmax(learner.online().forward(state).col(0));
      }
      EnvStepResult r = env.step(static_cast<Action>(action));
      Eigen::VectorXf next = features(r.observation);
      // Hitting the tick cap is a truncation, not a terminal state.
      const bool terminal = r.done && r.info.done_reason != DoneReason::TickCap;
      buffer.add(state.data(), action, static_cast<float>(r.reward), next.data(), terminal);
      state = std::move(next);
      need_reset = r.done;
      if (++steps % static_cast<std::uint64_t>(config.train_every) == 0 && buffer.size() >= warmup)
        learner.update(buffer.gather(buffer.sample_indices(config.batch_size, sample_rng)));
      record_evals();
    }
  } catch (const BudgetExhausted&) {
  }
  if (result.curve.empty() || result.curve.back().samples != budget.consumed)
    result.curve.push_back({budget.consumed, evaluate_greedy(learner.online(), spec, eval)});
  result.samples_consumed = budget.consumed;
  result.policy = std::make_unique<QPolicy>(learner.online());
  return result;
}

}  // namespace

TransitionBatch load_demo_transitions(const std::filesystem::path& root, const std::vector<std::string>& ids,
                                      const TexturePack& pack, const std::optional<TaskSpec>& spec) {
  std::vector<Eigen::MatrixXf> states, nexts;
  TransitionBatch out;
  std::vector<float> rewards;
  Eigen::Index total = 0;
  for (const auto& id : ids) {
    const SampleBatch b = read_all(root, id, pack, spec);
    if (b.size() == 0) continue;
    const Eigen::MatrixXf x = batch_features(b);
    const auto n = x.cols();
    // Transition t pairs tuple t with tuple t + 1; the last one needs a terminal flag.
    const Eigen::Index keep = b.dones.back() ? n : n - 1;
    if (keep == 0) continue;
    Eigen::MatrixXf next(x.rows(), keep);
    next.leftCols(std::min(keep, n - 1)) = x.middleCols(1, std::min(keep, n - 1));
    if (keep == n) next.col(n - 1) = x.col(n - 1);
    states.push_back(x.leftCols(keep));
    nexts.push_back(std::move(next));
    for (Eigen::Index t = 0; t < keep; ++t) {
      out.actions.push_back(b.actions[t]);
      rewards.push_back(b.rewards[t]);
      out.dones.push_back(t == n - 1 ? 1 : 0);
    }
    total += keep;
  }
  if (total == 0) return out;
  out.states.resize(states.front().rows(), total);
  out.next_states.resize(states.front().rows(), total);
  Eigen::Index col = 0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (states[k].rows() != out.states.rows()) throw ConfigError("demonstrations mix inventory layouts");
    out.states.middleCols(col, states[k].cols()) = states[k];
    out.next_states.middleCols(col, states[k].cols()) = nexts[k];
    col += states[k].cols();
  }
  out.rewards = Eigen::Map<Eigen::VectorXf>(rewards.data(), total);
  return out;
}

TrainResult train_dqn(const TaskSpec& spec, Budget& budget, const TrainConfig& config, std::uint64_t seed,
                      const EvalConfig& eval) {
  config.validate();
  const int dim = feature_length(spec.observation_spec.inventory_items.size());
  SplitMix64 init_rng(child_seed(seed, 0));
  QLearner learner(dim, config, init_rng);
  ReplayBuffer buffer(config.buffer_capacity, dim);
  return run_q_loop(spec, budget, config, seed, eval, learner, buffer);
}

QLearner pretrain_on_demos(const TransitionBatch& demos, const TrainConfig& config, std::uint64_t seed) {
  config.validate();
  if (demos.size() == 0) throw ConfigError("no demonstration transitions to pretrain on");
  SplitMix64 init_rng(child_seed(seed, 0)), rng(child_seed(seed, 4));
  QLearner learner(static_cast<int>(demos.states.rows()), config, init_rng);
  const std::size_t batch = std::min<std::size_t>(config.batch_size, demos.size());
  std::vector<std::size_t> idx;
  TransitionBatch b;
  b.states.resize(demos.states.rows(), static_cast<Eigen::Index>(batch));
  b.next_states.resize(demos.states.rows(), static_cast<Eigen::Index>(batch));
  b.rewards.resize(static_cast<Eigen::Index>(batch));
  for (int u = 0; u < config.pretrain_updates; ++u) {
    idx.clear();
    while (idx.size() < batch) {
      const std::size_t i = rng.below(demos.size());
      if (std::find(idx.begin(), idx.end(), i) == idx.end()) idx.push_back(i);
    }
    b.actions.clear();
    b.dones.clear();
    for (std::size_t j = 0; j < batch; ++j) {
      const auto c = static_cast<Eigen::Index>(idx[j]);
      b.states.col(static_cast<Eigen::Index>(j)) = demos.states.col(c);
      b.next_states.col(static_cast<Eigen::Index>(j)) = demos.next_states.col(c);
      b.rewards(static_cast<Eigen::Index>(j)) = demos.rewards(c);
      b.actions.push_back(demos.actions[idx[j]]);
      b.dones.push_back(demos.dones[idx[j]]);
    }
    learner.update(b);
  }
  return learner;
}

TrainResult train_predqn(const TaskSpec& spec, const TransitionBatch& demos, Budget& budget,
                         const TrainConfig& config, std::uint64_t seed, const EvalConfig& eval) {
  const int dim = feature_length(spec.observation_spec.inventory_items.size());
  if (demos.size() != 0 && demos.states.rows() != dim)
    throw ConfigError("demonstrations do not match the task's observation layout");
  QLearner learner = pretrain_on_demos(demos, config, seed);
  ReplayBuffer buffer(config.buffer_capacity, dim);
  for (std::size_t i = 0; i < demos.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    buffer.add(demos.states.col(c).data(), demos.actions[i], demos.rewards(c), demos.next_states.col(c).data(),
               demos.dones[i], true);
  }
  return run_q_loop(spec, budget, config, seed, eval, learner, buffer);
}

BcResult train_bc(const std::filesystem::path& root, const std::vector<std::string>& ids, const TexturePack& pack,
                  const TrainConfig& config, std::uint64_t seed, const std::optional<TaskSpec>& spec) {
  config.validate();
  if (ids.empty()) throw ConfigError("behavioral cloning needs a non-empty corpus");
  std::vector<Eigen::MatrixXf> parts;
  std::vector<int> labels;
  for (const auto& id : ids) {
    const SampleBatch b = read_all(root, id, pack, spec);
    parts.push_back(batch_features(b));
    labels.insert(labels.end(), b.actions.begin(), b.actions.end());
  }
  if (labels.empty()) throw ConfigError("behavioral cloning corpus has no tuples");
  Eigen::MatrixXf x(parts.front().rows(), static_cast<Eigen::Index>(labels.size()));
  Eigen::Index col = 0;
  for (const auto& p : parts) {
    if (p.rows() != x.rows()) throw ConfigError("corpus mixes inventory layouts");
    x.middleCols(col, p.cols()) = p;
    col += p.cols();
  }

  SplitMix64 init_rng(child_seed(seed, 0)), shuffle_rng(child_seed(seed, 5));
  nn::Network<float> net(nn::Head::Logits, static_cast<int>(x.rows()), kActionCount, init_rng);
  nn::Adam<float> adam(static_cast<float>(config.learning_rate));
  std::vector<std::size_t> order(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Eigen::MatrixXf xb(x.rows(), config.batch_size);
  std::vector<int> yb;
  for (int epoch = 0; epoch < config.bc_epochs; ++epoch) {
    shuffle(std::span(order), shuffle_rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t n = std::min<std::size_t>(config.batch_size, order.size() - start);
      xb.resize(x.rows(), static_cast<Eigen::Index>(n));
      yb.clear();
      for (std::size_t j = 0; j < n; ++j) {
        xb.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(order[start + j]));
        yb.push_back(labels[order[start + j]]);
      }
      auto grads = nn::Network<float>::zeros_like(net.layers());
      nn::cross_entropy_loss(net, xb, yb, &grads);
      nn::clip_global_norm(grads, static_cast<float>(config.grad_clip));
      adam.step(net.layers(), grads);
    }
  }

  BcResult result;
  std::size_t correct = 0;
  for (Eigen::Index start = 0; start < x.cols(); start += 4096) {
    const Eigen::Index n = std::min<Eigen::Index>(4096, x.cols() - start);
    const Eigen::MatrixXf logits = net.forward(x.middleCols(start, n));
    for (Eigen::Index j = 0; j < n; ++j) correct += argmax(logits.col(j)) == labels[start + j];
  }
  result.train_accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  result.policy = std::make_unique<BcPolicy>(std::move(net));
  return result;
}

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  out << "samples,mean_score\n";
  for (const auto& p : curve) out << p.samples << ',' << p.mean_score << '\n';
  if (!out) throw IoError("short write on " + path.string());
}

std::optional<std::uint64_t> samples_to_threshold(const std::vector<CurvePoint>& curve, double threshold) {
  for (const auto& p : curve)
    if (p.mean_score >= threshold) return p.samples;
  return std::nullopt;
}

}  // namespace tilecraft
