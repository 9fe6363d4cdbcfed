#include "doctest.h"
#include "gradcheck.hpp"
#include "tilecraft/agents.hpp"
#include "tilecraft/binio.hpp"

using namespace tilecraft;

TEST_CASE("cross-entropy gradient matches finite differences") {
  for (std::uint64_t s = 1; s <= 10; ++s) CHECK(gradcheck::bc_error(s) <= 1e-4);
}

TEST_CASE("double-DQN Huber gradient matches finite differences") {
  for (std::uint64_t s = 1; s <= 10; ++s) CHECK(gradcheck::dqn_error(s) <= 1e-4);
}

TEST_CASE("dueling head combines value and mean-centred advantages") {
  SplitMix64 rng(3);
  nn::Network<double> net(nn::Head::Dueling, 10, 16, rng, 12);
  nn::Matrix<double> x = nn::Matrix<double>::Random(10, 5);
  const auto& L = net.layers();
  nn::Matrix<double> h1 = ((L[0].W * x).colwise() + L[0].b).cwiseMax(0.0);
  nn::Matrix<double> h2 = ((L[1].W * h1).colwise() + L[1].b).cwiseMax(0.0);
  nn::Matrix<double> v = (L[2].W * h2).colwise() + L[2].b;
  nn::Matrix<double> a = (L[3].W * h2).colwise() + L[3].b;
  const nn::Matrix<double> q = net.forward(x);
  REQUIRE(q.rows() == 16);
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < 16; ++i)
      CHECK(q(i, j) == doctest::Approx(v(0, j) + a(i, j) - a.col(j).mean()).epsilon(1e-12));
  // Mean of Q over actions equals V.
  CHECK(q.col(0).mean() == doctest::Approx(v(0, 0)).epsilon(1e-12));
}

TEST_CASE("scaling the output layers leaves greedy actions unchanged") {
  SplitMix64 rng(9);
  for (auto head : {nn::Head::Dueling, nn::Head::Logits}) {
    nn::Network<double> net(head, 30, 16, rng, 32);
    for (auto& l : net.layers()) l.b.setRandom();
    const nn::Matrix<double> x = nn::Matrix<double>::Random(30, 64);
    const nn::Matrix<double> before = net.forward(x);
    for (double c : {0.01, 0.5, 3.0, 250.0}) {
      auto scaled = net;
      scaled.layers().back().W *= c;
      scaled.layers().back().b *= c;
      const nn::Matrix<double> after = scaled.forward(x);
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        // Skip near-ties, whose argmax is not well defined.
        nn::Vector<double> col = before.col(j);
        std::sort(col.data(), col.data() + col.size());
        if (col(15) - col(14) < 1e-9) continue;
        CHECK(argmax(after.col(j)) == argmax(before.col(j)));
      }
    }
  }
}

TEST_CASE("forward is finite on finite inputs") {
  SplitMix64 rng(5);
  nn::Network<float> net(nn::Head::Dueling, feature_length(4), 16, rng);
  Eigen::MatrixXf x = Eigen::MatrixXf::Random(feature_length(4), 16) * 1000.0f;
  CHECK(net.forward(x).allFinite());
}

TEST_CASE("global norm clipping") {
  nn::Params<double> g(2);
  g[0] = {nn::Matrix<double>::Constant(2, 2, 3.0), nn::Vector<double>::Constant(2, 4.0)};
  g[1] = {nn::Matrix<double>::Zero(1, 2), nn::Vector<double>::Zero(1)};
  // sqrt(4 * 9 + 2 * 16) = sqrt(68)
  CHECK(nn::clip_global_norm(g, 100.0) == doctest::Approx(std::sqrt(68.0)));
  CHECK(g[0].W(0, 0) == 3.0);
  nn::clip_global_norm(g, 1.0);
  double sq = 0;
  for (const auto& l : g) sq += l.W.squaredNorm() + l.b.squaredNorm();
  CHECK(std::sqrt(sq) == doctest::Approx(1.0));
  CHECK(g[0].W(0, 0) / g[0].b(0) == doctest::Approx(0.75));
}

TEST_CASE("Huber loss and its derivative") {
  CHECK(nn::huber(0.5) == doctest::Approx(0.125));
  CHECK(nn::huber(-3.0) == doctest::Approx(2.5));
  CHECK(nn::huber_grad(0.25) == 0.25);
  CHECK(nn::huber_grad(-7.0) == -1.0);
}

TEST_CASE("first Adam step moves each parameter by about the learning rate") {
  nn::Params<double> p(1), g(1);
  p[0] = {nn::Matrix<double>::Zero(1, 3), nn::Vector<double>::Zero(1)};
  g[0] = {(nn::Matrix<double>(1, 3) << 2.0, -0.5, 1e3).finished(), nn::Vector<double>::Constant(1, -4.0)};
  nn::Adam<double> adam(1e-3);
  adam.step(p, g);
  CHECK(p[0].W(0, 0) == doctest::Approx(-1e-3).epsilon(1e-6));
  CHECK(p[0].W(0, 1) == doctest::Approx(1e-3).epsilon(1e-6));
  CHECK(p[0].W(0, 2) == doctest::Approx(-1e-3).epsilon(1e-6));
  CHECK(p[0].b(0) == doctest::Approx(1e-3).epsilon(1e-6));
}

TEST_CASE("parameter blob round trip") {
  SplitMix64 rng(1);
  nn::Network<float> q(nn::Head::Dueling, feature_length(4), 16, rng);
  auto blob = to_blob(q);
  REQUIRE(blob.layers.size() == 4);
  CHECK(blob.layers[0].rows() == nn::kHiddenUnits);
  CHECK(blob.layers[0].cols() == feature_length(4) + 1);

  const auto bytes = encode_blob(blob);
  std::size_t expected = 4 + 2 + 4;
  for (const auto& m : blob.layers) expected += 8 + 8 * static_cast<std::size_t>(m.size());
  CHECK(bytes.size() == expected);
  auto back = network_from_blob<float>(decode_blob(bytes));
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(back.layers()[i].W == q.layers()[i].W);
    CHECK(back.layers()[i].b == q.layers()[i].b);
  }
  // Row-major f64: the first value after the first layer's shape is W(0, 0).
  ByteReader r{std::span<const std::uint8_t>(bytes).subspan(18)};
  CHECK(r.get<double>() == static_cast<double>(q.layers()[0].W(0, 0)));
  CHECK(r.get<double>() == static_cast<double>(q.layers()[0].W(0, 1)));

  auto version = bytes;
  version[4] = 9;
  CHECK_THROWS_AS(decode_blob(version), IncompatibleVersionError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK_THROWS_AS(decode_blob(truncated), ConfigError);
  auto magic = bytes;
  magic[1] = 'X';
  CHECK_THROWS_AS(decode_blob(magic), ConfigError);

  CHECK(dynamic_cast<QPolicy*>(policy_from_blob(blob).get()));
  CHECK(dynamic_cast<RandomPolicy*>(policy_from_blob(ParameterBlob{}).get()));
  nn::Network<float> bc(nn::Head::Logits, feature_length(4), 16, rng);
  CHECK(dynamic_cast<BcPolicy*>(policy_from_blob(to_blob(bc)).get()));
  blob.layers.pop_back();
  blob.layers.pop_back();
  CHECK_THROWS_AS(policy_from_blob(blob), ConfigError);
}
