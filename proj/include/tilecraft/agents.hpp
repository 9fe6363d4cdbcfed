#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "tilecraft/nn.hpp"
#include "tilecraft/rng.hpp"
#include "tilecraft/task.hpp"

namespace tilecraft {

// Feature vector: inventory / 64 clamped to [0, 1], sin and cos of the compass
// angle, then a 16x16 grayscale downsample of the pov (4x4 block means).
inline constexpr int kGraySide = 16;
inline constexpr int kGrayFeatures = kGraySide * kGraySide;

constexpr int feature_length(std::size_t inventory_len) {
  return static_cast<int>(inventory_len) + 2 + kGrayFeatures;
}

template <typename Count>
void write_features(const std::uint8_t* pov, std::span<const Count> inventory, double compass, float* out) {
  for (std::size_t i = 0; i < inventory.size(); ++i)
    out[i] = std::min(1.0f, static_cast<float>(inventory[i]) / 64.0f);
  out += inventory.size();
  out[0] = static_cast<float>(std::sin(compass));
  out[1] = static_cast<float>(std::cos(compass));
  out += 2;
  constexpr int block = kPovSide / kGraySide;
  for (int gy = 0; gy < kGraySide; ++gy)
    for (int gx = 0; gx < kGraySide; ++gx) {
      float sum = 0.0f;
      for (int r = 0; r < block; ++r)
        for (int c = 0; c < block; ++c) {
          const std::uint8_t* p = pov + ((gy * block + r) * kPovSide + gx * block + c) * 3;
          sum += 0.299f * p[0] + 0.587f * p[1] + 0.114f * p[2];
        }
      out[gy * kGraySide + gx] = sum / (block * block * 255.0f);
    }
}

Eigen::VectorXf features(const Observation& obs);

// Serializable parameters: each layer is out x (in + 1), bias in the last column.
// Zero layers = random policy, three = behavioral cloning logits, four = dueling Q.
struct ParameterBlob {
  std::vector<Eigen::MatrixXd> layers;
};

inline constexpr std::uint16_t kBlobFormatVersion = 1;

std::vector<std::uint8_t> encode_blob(const ParameterBlob& blob);
ParameterBlob decode_blob(std::span<const std::uint8_t> bytes);
void save_blob(const ParameterBlob& blob, const std::filesystem::path& path);
ParameterBlob load_blob(const std::filesystem::path& path);

template <typename Scalar>
ParameterBlob to_blob(const nn::Network<Scalar>& net) {
  ParameterBlob blob;
  for (const auto& l : net.layers()) {
    Eigen::MatrixXd m(l.W.rows(), l.W.cols() + 1);
    m.leftCols(l.W.cols()) = l.W.template cast<double>();
    m.col(l.W.cols()) = l.b.template cast<double>();
    blob.layers.push_back(std::move(m));
  }
  return blob;
}

template <typename Scalar>
nn::Network<Scalar> network_from_blob(const ParameterBlob& blob) {
  nn::Params<Scalar> layers;
  for (const auto& m : blob.layers) {
    if (m.cols() < 2) throw ConfigError("parameter layer too narrow");
    layers.push_back({m.leftCols(m.cols() - 1).cast<Scalar>(), m.col(m.cols() - 1).cast<Scalar>()});
  }
  const auto head = blob.layers.size() == 4 ? nn::Head::Dueling : nn::Head::Logits;
  return nn::Network<Scalar>(head, std::move(layers));
}

// Learners only ever see observations.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action act(const Observation& obs, bool explore, SplitMix64& rng) = 0;
  virtual ParameterBlob parameters() const = 0;
};

// Scripted policies may read the full episode state; data generation and
// evaluation baselines only.
class PrivilegedPolicy {
 public:
  virtual ~PrivilegedPolicy() = default;
  virtual Action act(const EpisodeState& episode) = 0;
};

class RandomPolicy : public Policy {
 public:
  Action act(const Observation& obs, bool explore, SplitMix64& rng) override;
  ParameterBlob parameters() const override { return {}; }
};

class AlwaysPolicy : public Policy {
 public:
  explicit AlwaysPolicy(Action a) : action_(a) {}
  Action act(const Observation&, bool, SplitMix64&) override { return action_; }
  ParameterBlob parameters() const override { return {}; }

 private:
  Action action_;
};

// Greedy over Q-values (explore: epsilon-greedy with `epsilon`).
class QPolicy : public Policy {
 public:
  explicit QPolicy(nn::Network<float> net, double epsilon = 0.05) : net_(std::move(net)), epsilon_(epsilon) {}
  Action act(const Observation& obs, bool explore, SplitMix64& rng) override;
  ParameterBlob parameters() const override { return to_blob(net_); }
  const nn::Network<float>& network() const { return net_; }

 private:
  nn::Network<float> net_;
  double epsilon_;
};

// Argmax of the logits (explore: sample from the softmax).
class BcPolicy : public Policy {
 public:
  explicit BcPolicy(nn::Network<float> net) : net_(std::move(net)) {}
  Action act(const Observation& obs, bool explore, SplitMix64& rng) override;
  ParameterBlob parameters() const override { return to_blob(net_); }
  const nn::Network<float>& network() const { return net_; }

 private:
  nn::Network<float> net_;
};

std::unique_ptr<Policy> policy_from_blob(const ParameterBlob& blob);

// Index of the largest entry; lowest index wins ties.
template <typename Derived>
int argmax(const Eigen::MatrixBase<Derived>& v) {
  Eigen::Index best;
  v.maxCoeff(&best);
  return static_cast<int>(best);
}

}  // namespace tilecraft
