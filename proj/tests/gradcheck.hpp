#pragma once

// Central finite-difference oracle for the learning losses, in double.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tilecraft/nn.hpp"

namespace gradcheck {

using tilecraft::SplitMix64;
namespace nn = tilecraft::nn;

inline constexpr int kInputs = 262;  // feature length of a 4-item inventory
inline constexpr int kBatch = 8;
inline constexpr int kCoordinates = 256;

inline nn::Network<double> random_network(nn::Head head, SplitMix64& rng) {
  nn::Network<double> net(head, kInputs, 16, rng);
  // Non-zero biases so the check also covers them and ReLUs are not symmetric.
  for (auto& l : net.layers())
    for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b(i) = 0.2 * rng.uniform() - 0.1;
  return net;
}

inline nn::Matrix<double> random_features(SplitMix64& rng) {
  nn::Matrix<double> x(kInputs, kBatch);
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = rng.uniform();
  return x;
}

inline std::vector<int> random_actions(SplitMix64& rng) {
  std::vector<int> a;
  for (int j = 0; j < kBatch; ++j) a.push_back(static_cast<int>(rng.below(16)));
  return a;
}

// Norm-wise relative error between analytic and numeric gradients over a
// random subset of coordinates.
template <typename LossFn>
double relative_error(nn::Network<double>& net, const nn::Params<double>& analytic, LossFn&& loss,
                      SplitMix64& rng) {
  auto grads = analytic;
  const double h = 1e-6;
  double diff = 0, na = 0, nf = 0;
  for (int c = 0; c < kCoordinates; ++c) {
    const auto k = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(net.parameter_count())));
    double& p = net.parameter(k);
    const double saved = p;
    p = saved + h;
    const double up = loss(net);
    p = saved - h;
    const double down = loss(net);
    p = saved;
    const double numeric = (up - down) / (2 * h);
    const double a = nn::Network<double>::flat_ref(grads, k);
    diff += (a - numeric) * (a - numeric);
    na += a * a;
    nf += numeric * numeric;
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nf), 1e-12});
}

inline double bc_error(std::uint64_t seed) {
  SplitMix64 rng(seed);
  auto net = random_network(nn::Head::Logits, rng);
  const auto x = random_features(rng);
  const auto actions = random_actions(rng);
  nn::Params<double> g;
  nn::cross_entropy_loss(net, x, actions, &g);
  return relative_error(net, g, [&](const nn::Network<double>& n) { return nn::cross_entropy_loss(n, x, actions); },
                        rng);
}

inline double dqn_error(std::uint64_t seed) {
  SplitMix64 rng(seed);
  auto online = random_network(nn::Head::Dueling, rng);
  const auto target = random_network(nn::Head::Dueling, rng);
  const auto x = random_features(rng), next = random_features(rng);
  const auto actions = random_actions(rng);
  nn::Vector<double> rewards(kBatch);
  std::vector<std::uint8_t> dones;
  for (int j = 0; j < kBatch; ++j) {
    rewards(j) = 6.0 * rng.uniform() - 3.0;  // both sides of the Huber knee
    dones.push_back(rng.below(4) == 0);
  }
  const nn::Vector<double> y = nn::double_dqn_targets(online, target, next, rewards, dones, 0.99);
  nn::Params<double> g;
  nn::td_loss(online, x, actions, y, &g);
  return relative_error(online, g, [&](const nn::Network<double>& n) { return nn::td_loss(n, x, actions, y); },
                        rng);
}

}  // namespace gradcheck
