#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "tilecraft/errors.hpp"
#include "tilecraft/rng.hpp"

namespace tilecraft::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

template <typename Scalar>
struct Layer {
  Matrix<Scalar> W;  // out x in
  Vector<Scalar> b;  // out

  Eigen::Index parameter_count() const { return W.size() + b.size(); }
};

// Gradients share the parameter layout.
template <typename Scalar>
using Params = std::vector<Layer<Scalar>>;

enum class Head {
  Dueling,  // Q = V + A - mean(A)
  Logits,
};

inline constexpr int kHiddenUnits = 128;

// Two ReLU hidden layers followed by either a dueling Q head (value layer then
// advantage layer) or a plain logits layer. Inputs are column-major batches:
// one column per sample.
template <typename Scalar>
class Network {
 public:
  struct Cache {
    Matrix<Scalar> h1, h2;
  };

  Network() = default;

  Network(Head head, int inputs, int outputs, SplitMix64& rng, int hidden = kHiddenUnits) : head_(head) {
    auto make = [&](int out, int in, double limit) {
      Layer<Scalar> l{Matrix<Scalar>(out, in), Vector<Scalar>::Zero(out)};
      for (Eigen::Index j = 0; j < l.W.cols(); ++j)
        for (Eigen::Index i = 0; i < l.W.rows(); ++i)
          l.W(i, j) = static_cast<Scalar>((2.0 * rng.uniform() - 1.0) * limit);
      return l;
    };
    // He-uniform for ReLU layers, Glorot-uniform for the heads.
    layers_.push_back(make(hidden, inputs, std::sqrt(6.0 / inputs)));
    layers_.push_back(make(hidden, hidden, std::sqrt(6.0 / hidden)));
    if (head == Head::Dueling) layers_.push_back(make(1, hidden, std::sqrt(6.0 / (hidden + 1))));
    layers_.push_back(make(outputs, hidden, std::sqrt(6.0 / (hidden + outputs))));
  }

  Network(Head head, Params<Scalar> layers) : head_(head), layers_(std::move(layers)) {
    const std::size_t expected = head == Head::Dueling ? 4 : 3;
    if (layers_.size() != expected) throw ConfigError("wrong layer count for network head");
    for (std::size_t i = 1; i < layers_.size(); ++i) {
      const auto& prev = i == 3 ? layers_[1] : layers_[i - 1];
      if (layers_[i].W.cols() != prev.W.rows()) throw ConfigError("layer shapes do not chain");
    }
    for (const auto& l : layers_)
      if (l.b.size() != l.W.rows()) throw ConfigError("bias length does not match layer");
  }

  Head head() const { return head_; }
  Eigen::Index inputs() const { return layers_.front().W.cols(); }
  Eigen::Index outputs() const { return layers_.back().W.rows(); }
  const Params<Scalar>& layers() const { return layers_; }
  Params<Scalar>& layers() { return layers_; }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& l : layers_) n += l.parameter_count();
    return n;
  }

  // Flat view used by finite-difference checks: per layer W (column-major) then b.
  Scalar& parameter(Eigen::Index k) { return flat_ref(layers_, k); }

  Matrix<Scalar> forward(const Matrix<Scalar>& X) const {
    Cache cache;
    return forward(X, cache);
  }

  Matrix<Scalar> forward(const Matrix<Scalar>& X, Cache& c) const {
    c.h1 = ((layers_[0].W * X).colwise() + layers_[0].b).cwiseMax(Scalar(0));
    c.h2 = ((layers_[1].W * c.h1).colwise() + layers_[1].b).cwiseMax(Scalar(0));
    if (head_ == Head::Logits) return (layers_[2].W * c.h2).colwise() + layers_[2].b;
    const RowVector<Scalar> v = (layers_[2].W * c.h2).colwise() + layers_[2].b;
    Matrix<Scalar> a = (layers_[3].W * c.h2).colwise() + layers_[3].b;
    const RowVector<Scalar> shift = v - a.colwise().mean();
    a.rowwise() += shift;
    return a;
  }

  // Accumulates dLoss/dparams into `grads` given dLoss/doutput.
  void backward(const Matrix<Scalar>& X, const Cache& c, const Matrix<Scalar>& d_out, Params<Scalar>& grads) const {
    if (grads.size() != layers_.size()) grads = zeros_like(layers_);
    Matrix<Scalar> dh2;
    if (head_ == Head::Logits) {
      grads[2].W.noalias() += d_out * c.h2.transpose();
      grads[2].b += d_out.rowwise().sum();
      dh2.noalias() = layers_[2].W.transpose() * d_out;
    } else {
      const RowVector<Scalar> dv = d_out.colwise().sum();
      Matrix<Scalar> da = d_out;
      const RowVector<Scalar> mean = dv / static_cast<Scalar>(d_out.rows());
      da.rowwise() -= mean;
      grads[2].W.noalias() += dv * c.h2.transpose();
      grads[2].b(0) += dv.sum();
      grads[3].W.noalias() += da * c.h2.transpose();
      grads[3].b += da.rowwise().sum();
      dh2.noalias() = layers_[2].W.transpose() * dv;
      dh2.noalias() += layers_[3].W.transpose() * da;
    }
    dh2 = dh2.cwiseProduct((c.h2.array() > Scalar(0)).template cast<Scalar>().matrix());
    grads[1].W.noalias() += dh2 * c.h1.transpose();
    grads[1].b += dh2.rowwise().sum();
    Matrix<Scalar> dh1 = layers_[1].W.transpose() * dh2;
    dh1 = dh1.cwiseProduct((c.h1.array() > Scalar(0)).template cast<Scalar>().matrix());
    grads[0].W.noalias() += dh1 * X.transpose();
    grads[0].b += dh1.rowwise().sum();
  }

  template <typename Other>
  Network<Other> cast() const {
    Params<Other> out;
    for (const auto& l : layers_) out.push_back({l.W.template cast<Other>(), l.b.template cast<Other>()});
    return Network<Other>(head_, std::move(out));
  }

  static Params<Scalar> zeros_like(const Params<Scalar>& p) {
    Params<Scalar> z;
    for (const auto& l : p) z.push_back({Matrix<Scalar>::Zero(l.W.rows(), l.W.cols()), Vector<Scalar>::Zero(l.b.size())});
    return z;
  }

  static Scalar& flat_ref(Params<Scalar>& p, Eigen::Index k) {
    for (auto& l : p) {
      if (k < l.W.size()) return l.W.data()[k];
      k -= l.W.size();
      if (k < l.b.size()) return l.b(k);
      k -= l.b.size();
    }
    throw std::out_of_range("parameter index");
  }

 private:
  Head head_ = Head::Logits;
  Params<Scalar> layers_;
};

// Mean softmax cross-entropy of `actions` under the logits; adds gradients when
// `grads` is non-null.
template <typename Scalar>
Scalar cross_entropy_loss(const Network<Scalar>& net, const Matrix<Scalar>& X, const std::vector<int>& actions,
                          Params<Scalar>* grads = nullptr) {
  typename Network<Scalar>::Cache cache;
  Matrix<Scalar> logits = net.forward(X, cache);
  const auto n = static_cast<Scalar>(X.cols());
  Scalar loss = 0;
  Matrix<Scalar> d(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const Scalar m = logits.col(j).maxCoeff();
    const Vector<Scalar> e = (logits.col(j).array() - m).exp().matrix();
    const Scalar z = e.sum();
    loss += std::log(z) + m - logits(actions[j], j);
    d.col(j) = e / z;
    d(actions[j], j) -= Scalar(1);
  }
  if (grads) net.backward(X, cache, d / n, *grads);
  return loss / n;
}

template <typename Scalar>
Scalar huber(Scalar x) {
  const Scalar a = std::abs(x);
  return a <= Scalar(1) ? Scalar(0.5) * x * x : a - Scalar(0.5);
}

template <typename Scalar>
Scalar huber_grad(Scalar x) {
  return std::clamp(x, Scalar(-1), Scalar(1));
}

// Mean Huber loss of Q(s, a) against fixed targets.
template <typename Scalar>
Scalar td_loss(const Network<Scalar>& net, const Matrix<Scalar>& X, const std::vector<int>& actions,
               const Vector<Scalar>& targets, Params<Scalar>* grads = nullptr) {
  typename Network<Scalar>::Cache cache;
  Matrix<Scalar> q = net.forward(X, cache);
  const auto n = static_cast<Scalar>(X.cols());
  Scalar loss = 0;
  Matrix<Scalar> d = Matrix<Scalar>::Zero(q.rows(), q.cols());
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const Scalar err = q(actions[j], j) - targets(j);
    loss += huber(err);
    d(actions[j], j) = huber_grad(err) / n;
  }
  if (grads) net.backward(X, cache, d, *grads);
  return loss / n;
}

// Double-DQN targets: r + gamma * Q_target(s', argmax_a Q_online(s', a)) * (1 - done).
template <typename Scalar>
Vector<Scalar> double_dqn_targets(const Network<Scalar>& online, const Network<Scalar>& target,
                                  const Matrix<Scalar>& next, const Vector<Scalar>& rewards,
                                  const std::vector<std::uint8_t>& dones, Scalar gamma) {
  const Matrix<Scalar> q_online = online.forward(next);
  const Matrix<Scalar> q_target = target.forward(next);
  Vector<Scalar> y = rewards;
  for (Eigen::Index j = 0; j < next.cols(); ++j) {
    if (dones[j]) continue;
    Eigen::Index best;
    q_online.col(j).maxCoeff(&best);
    y(j) += gamma * q_target(best, j);
  }
  return y;
}

// Rescales gradients so their global L2 norm is at most `max_norm`; returns the norm before clipping.
template <typename Scalar>
Scalar clip_global_norm(Params<Scalar>& grads, Scalar max_norm) {
  Scalar sq = 0;
  for (const auto& g : grads) sq += g.W.squaredNorm() + g.b.squaredNorm();
  const Scalar norm = std::sqrt(sq);
  if (norm > max_norm) {
    const Scalar s = max_norm / norm;
    for (auto& g : grads) {
      g.W *= s;
      g.b *= s;
    }
  }
  return norm;
}

template <typename Scalar>
class Adam {
 public:
  explicit Adam(Scalar learning_rate, Scalar beta1 = Scalar(0.9), Scalar beta2 = Scalar(0.999),
                Scalar epsilon = Scalar(1e-8))
      : lr_(learning_rate), b1_(beta1), b2_(beta2), eps_(epsilon) {}

  void step(Params<Scalar>& params, const Params<Scalar>& grads) {
    if (m_.empty()) {
      m_ = Network<Scalar>::zeros_like(params);
      v_ = Network<Scalar>::zeros_like(params);
    }
    ++t_;
    const Scalar c1 = Scalar(1) - std::pow(b1_, static_cast<Scalar>(t_));
    const Scalar c2 = Scalar(1) - std::pow(b2_, static_cast<Scalar>(t_));
    const Scalar step = lr_ * std::sqrt(c2) / c1;
    for (std::size_t i = 0; i < params.size(); ++i) {
      update(params[i].W, grads[i].W, m_[i].W, v_[i].W, step);
      update(params[i].b, grads[i].b, m_[i].b, v_[i].b, step);
    }
  }

 private:
  template <typename P, typename G, typename M>
  void update(P& p, const G& g, M& m, M& v, Scalar step) {
    m = b1_ * m + (Scalar(1) - b1_) * g;
    v = b2_ * v + (Scalar(1) - b2_) * g.cwiseAbs2();
    p.array() -= step * m.array() / (v.array().sqrt() + eps_);
  }

  Scalar lr_, b1_, b2_, eps_;
  long t_ = 0;
  Params<Scalar> m_, v_;
};

}  // namespace tilecraft::nn
