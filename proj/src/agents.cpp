#include "tilecraft/agents.hpp"

#include <cstring>

#include "tilecraft/binio.hpp"

namespace tilecraft {

Eigen::VectorXf features(const Observation& obs) {
  Eigen::VectorXf f(feature_length(obs.inventory.size()));
  write_features<std::uint32_t>(obs.pov.pixels.data(), obs.inventory, obs.compass_angle, f.data());
  return f;
}

std::vector<std::uint8_t> encode_blob(const ParameterBlob& blob) {
  ByteWriter w;
  w.raw("MRLP", 4);
  w.put<std::uint16_t>(kBlobFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(blob.layers.size()));
  for (const auto& m : blob.layers) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m.rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) w.put<double>(m(i, j));
  }
  return std::move(w.bytes);
}

ParameterBlob decode_blob(std::span<const std::uint8_t> bytes) {
  try {
    ByteReader r(bytes);
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, "MRLP", 4) != 0) throw ConfigError("not a parameter blob (bad magic)");
    if (r.get<std::uint16_t>() != kBlobFormatVersion)
      throw IncompatibleVersionError("unsupported parameter blob version");
    ParameterBlob blob;
    const auto n = r.get<std::uint32_t>();
    for (std::uint32_t k = 0; k < n; ++k) {
      const auto rows = r.get<std::uint32_t>(), cols = r.get<std::uint32_t>();
      if (static_cast<std::uint64_t>(rows) * cols * 8 > r.remaining())
        throw ConfigError("parameter blob truncated");
      Eigen::MatrixXd m(rows, cols);
      for (std::uint32_t i = 0; i < rows; ++i)
        for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = r.get<double>();
      blob.layers.push_back(std::move(m));
    }
    if (r.remaining() != 0) throw ConfigError("trailing bytes after parameter blob");
    return blob;
  } catch (const CorruptLogError&) {
    throw ConfigError("parameter blob truncated");
  }
}

void save_blob(const ParameterBlob& blob, const std::filesystem::path& path) {
  write_file(path, encode_blob(blob));
}

ParameterBlob load_blob(const std::filesystem::path& path) { return decode_blob(read_file(path)); }

Action RandomPolicy::act(const Observation&, bool, SplitMix64& rng) {
  return static_cast<Action>(rng.below(kActionCount));
}

Action QPolicy::act(const Observation& obs, bool explore, SplitMix64& rng) {
  if (explore && rng.uniform() < epsilon_) return static_cast<Action>(rng.below(kActionCount));
  const Eigen::MatrixXf x = features(obs);
  return static_cast<Action>(argmax(net_.forward(x).col(0)));
}

Action BcPolicy::act(const Observation& obs, bool explore, SplitMix64& rng) {
  const Eigen::MatrixXf x = features(obs);
  const Eigen::VectorXf logits = net_.forward(x).col(0);
  if (!explore) return static_cast<Action>(argmax(logits));
  const Eigen::ArrayXf p = (logits.array() - logits.maxCoeff()).exp();
  double u = rng.uniform() * p.sum();
  for (int a = 0; a < kActionCount; ++a) {
    u -= p(a);
    if (u < 0) return static_cast<Action>(a);
  }
  return static_cast<Action>(kActionCount - 1);
}

std::unique_ptr<Policy> policy_from_blob(const ParameterBlob& blob) {
  switch (blob.layers.size()) {
    case 0: return std::make_unique<RandomPolicy>();
    case 3: return std::make_unique<BcPolicy>(network_from_blob<float>(blob));
    case 4: return std::make_unique<QPolicy>(network_from_blob<float>(blob));
    default: throw ConfigError("parameter blob has " + std::to_string(blob.layers.size()) + " layers");
  }
}

}  // namespace tilecraft
