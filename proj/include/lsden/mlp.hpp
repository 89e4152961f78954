#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <boost/crc.hpp>

#include "lsden/emd.hpp"
#include "lsden/error.hpp"
#include "lsden/io.hpp"
#include "lsden/rng.hpp"

namespace lsden {

enum class Activation : std::uint8_t { tanh_sigmoid = 1, linear = 2 };

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Feed-forward regressor: 13 IMF values in, one sample out. Hidden layers
/// use tanh, the output layer is linear. Weights of layer l are stored
/// row-major as (layer_sizes[l+1] x layer_sizes[l]).
struct MlpModel {
  std::vector<int> layer_sizes;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
  Activation hidden_activation = Activation::tanh_sigmoid;
  Activation output_activation = Activation::linear;
  std::uint64_t seed = 0;
  std::uint64_t epochs_trained = 0;

  std::size_t layer_count() const noexcept { return weights.size(); }

  std::size_t parameter_count() const noexcept {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
  }

  /// Flattened as W0, b0, W1, b1, ...
  std::vector<double> parameters() const {
    std::vector<double> p;
    p.reserve(parameter_count());
    for (std::size_t l = 0; l < weights.size(); ++l) {
      p.insert(p.end(), weights[l].begin(), weights[l].end());
      p.insert(p.end(), biases[l].begin(), biases[l].end());
    }
    return p;
  }

  void set_parameters(std::span<const double> p) {
    require(p.size() == parameter_count(), Errc::invalid_argument, "parameter vector size mismatch");
    std::size_t k = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      for (double& w : weights[l]) w = p[k++];
      for (double& b : biases[l]) b = p[k++];
    }
  }

  bool operator==(const MlpModel&) const = default;
};

inline void validate(const MlpModel& m) {
  require(m.layer_sizes.size() >= 2, Errc::invalid_argument, "model needs at least two layers");
  require(m.layer_sizes.front() == static_cast<int>(kImfChannels), Errc::invalid_argument,
          "model input width must be 13");
  require(m.layer_sizes.back() == 1, Errc::invalid_argument, "model output width must be 1");
  require(m.weights.size() == m.layer_sizes.size() - 1 && m.biases.size() == m.weights.size(),
          Errc::invalid_argument, "layer count mismatch");
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    require(m.layer_sizes[l] > 0 && m.layer_sizes[l + 1] > 0, Errc::invalid_argument, "empty layer");
    require(m.weights[l].size() == static_cast<std::size_t>(m.layer_sizes[l]) * m.layer_sizes[l + 1],
            Errc::invalid_argument, "weight shape does not match layer sizes");
    require(m.biases[l].size() == static_cast<std::size_t>(m.layer_sizes[l + 1]),
            Errc::invalid_argument, "bias shape does not match layer sizes");
  }
}

/// The nine candidate architectures, ANN1..ANN9.
inline std::vector<int> ann_structure(int id) {
  static constexpr std::array<std::array<int, 2>, 9> hidden{{
      {35, 0}, {65, 0}, {95, 0}, {25, 15}, {25, 20}, {25, 25}, {35, 15}, {35, 20}, {45, 10}}};
  require(id >= 1 && id <= 9, Errc::invalid_argument, "structure id must be 1..9");
  const auto& h = hidden[id - 1];
  std::vector<int> sizes{static_cast<int>(kImfChannels), h[0]};
  if (h[1] > 0) sizes.push_back(h[1]);
  sizes.push_back(1);
  return sizes;
}

/// Accepts "ann1".."ann9" (any case).
inline int parse_ann_id(std::string_view text) {
  if (text.size() == 4 && (text[0] == 'a' || text[0] == 'A') && (text[1] == 'n' || text[1] == 'N') &&
      (text[2] == 'n' || text[2] == 'N') && text[3] >= '1' && text[3] <= '9')
    return text[3] - '0';
  throw Error(Errc::invalid_argument, "unknown structure '" + std::string(text) + "' (expected ann1..ann9)");
}

/// Glorot-uniform weights in [-s, s], s = sqrt(6 / (fan_in + fan_out)); zero
/// biases.
inline MlpModel build_mlp(std::vector<int> sizes, std::uint64_t seed) {
  MlpModel m;
  m.layer_sizes = std::move(sizes);
  m.seed = seed;
  require(m.layer_sizes.size() >= 2, Errc::invalid_argument, "model needs at least two layers");
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    const int in = m.layer_sizes[l], out = m.layer_sizes[l + 1];
    require(in > 0 && out > 0, Errc::invalid_argument, "layer sizes must be positive");
    const double s = std::sqrt(6.0 / (in + out));
    std::vector<double> w(static_cast<std::size_t>(in) * out);
    for (double& v : w) v = rng.uniform(-s, s);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(out, 0.0);
  }
  validate(m);
  return m;
}

inline MlpModel build_mlp(int ann_id, std::uint64_t seed) { return build_mlp(ann_structure(ann_id), seed); }

/// Single-row evaluation.
inline double forward(const MlpModel& model, std::span<const double> row) {
  require(row.size() == static_cast<std::size_t>(model.layer_sizes.front()), Errc::invalid_argument,
          "input row width does not match the model");
  std::vector<double> a(row.begin(), row.end()), next;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    const int in = model.layer_sizes[l], out = model.layer_sizes[l + 1];
    const bool hidden = l + 1 < model.weights.size();
    next.assign(out, 0.0);
    for (int o = 0; o < out; ++o) {
      double z = model.biases[l][o];
      const double* w = model.weights[l].data() + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) z += w[i] * a[i];
      next[o] = hidden && model.hidden_activation == Activation::tanh_sigmoid ? std::tanh(z) : z;
    }
    a.swap(next);
  }
  return a[0];
}

namespace detail {

inline Eigen::Map<const RowMatrix> weight_map(const MlpModel& m, std::size_t l) {
  return {m.weights[l].data(), m.layer_sizes[l + 1], m.layer_sizes[l]};
}

inline Eigen::Map<const Eigen::RowVectorXd> bias_map(const MlpModel& m, std::size_t l) {
  return {m.biases[l].data(), m.layer_sizes[l + 1]};
}

// Activations of every layer for a batch; acts[0] is the input.
inline std::vector<Eigen::MatrixXd> forward_all(const MlpModel& m, const Eigen::MatrixXd& inputs) {
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(m.weights.size() + 1);
  acts.push_back(inputs);
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    Eigen::MatrixXd z = acts.back() * weight_map(m, l).transpose();
    z.rowwise() += bias_map(m, l);
    if (l + 1 < m.weights.size() && m.hidden_activation == Activation::tanh_sigmoid)
      z = z.array().tanh().matrix();
    acts.push_back(std::move(z));
  }
  return acts;
}

}  // namespace detail

/// Batch evaluation; one input row per sample.
inline Eigen::VectorXd forward_batch(const MlpModel& model, const Eigen::MatrixXd& inputs) {
  require(inputs.cols() == model.layer_sizes.front(), Errc::invalid_argument,
          "input width does not match the model");
  return detail::forward_all(model, inputs).back().col(0);
}

/// d output / d parameter for every row (rows x parameter_count), columns in
/// the same order as MlpModel::parameters(). Also returns the outputs.
inline Eigen::MatrixXd output_jacobian(const MlpModel& model, const Eigen::MatrixXd& inputs,
                                       Eigen::VectorXd* outputs = nullptr) {
  require(inputs.cols() == model.layer_sizes.front(), Errc::invalid_argument,
          "input width does not match the model");
  const auto acts = detail::forward_all(model, inputs);
  const Eigen::Index rows = inputs.rows();
  const std::size_t layers = model.weights.size();
  if (outputs) *outputs = acts.back().col(0);

  // deltas[l]: d output / d pre-activation of layer l, rows x units.
  std::vector<Eigen::MatrixXd> deltas(layers);
  deltas[layers - 1] = Eigen::MatrixXd::Ones(rows, 1);
  for (std::size_t l = layers - 1; l-- > 0;) {
    Eigen::MatrixXd back = deltas[l + 1] * detail::weight_map(model, l + 1);
    if (model.hidden_activation == Activation::tanh_sigmoid)
      back.array() *= 1.0 - acts[l + 1].array().square();
    deltas[l] = std::move(back);
  }

  Eigen::MatrixXd jac(rows, static_cast<Eigen::Index>(model.parameter_count()));
  Eigen::Index col = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = model.layer_sizes[l], out = model.layer_sizes[l + 1];
    for (int o = 0; o < out; ++o)
      for (int i = 0; i < in; ++i) jac.col(col++) = deltas[l].col(o).cwiseProduct(acts[l].col(i));
    for (int o = 0; o < out; ++o) jac.col(col++) = deltas[l].col(o);
  }
  return jac;
}

/// Gradient of mean((output - target)^2) with respect to the parameters.
inline Eigen::VectorXd mse_gradient(const MlpModel& model, const Eigen::MatrixXd& inputs,
                                    const Eigen::VectorXd& targets) {
  Eigen::VectorXd out;
  const Eigen::MatrixXd jac = output_jacobian(model, inputs, &out);
  return (2.0 / static_cast<double>(inputs.rows())) * (jac.transpose() * (out - targets));
}

inline double mse(const MlpModel& model, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets) {
  return (forward_batch(model, inputs) - targets).squaredNorm() / static_cast<double>(inputs.rows());
}

// ---------------------------------------------------------------------------
// Model file
//
// Little-endian binary, version 1:
//   8 bytes  magic "LSDENMLP"
//   u32      version
//   u32      L, number of entries in layer_sizes
//   u32 x L  layer_sizes
//   u8       hidden activation tag (1 = tanh, 2 = linear)
//   u8       output activation tag
//   u64      seed
//   u64      epochs_trained
//   per layer: f64 weights (row-major), f64 biases
//   u32      CRC-32 of every preceding byte

inline constexpr std::string_view kModelMagic = "LSDENMLP";
inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

inline void put_u(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::uint64_t u(int bytes) {
    require(pos_ + bytes <= data_.size(), Errc::schema_error, "model file truncated");
    std::uint64_t v = 0;
    for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(data_[pos_ + i]);
    pos_ += bytes;
    return v;
  }

  double f64() { return std::bit_cast<double>(u(8)); }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

inline std::uint32_t crc32(std::string_view bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

}  // namespace detail

inline std::string serialize_model(const MlpModel& model) {
  validate(model);
  std::string out(kModelMagic);
  detail::put_u(out, kModelVersion, 4);
  detail::put_u(out, model.layer_sizes.size(), 4);
  for (int s : model.layer_sizes) detail::put_u(out, static_cast<std::uint32_t>(s), 4);
  detail::put_u(out, static_cast<std::uint8_t>(model.hidden_activation), 1);
  detail::put_u(out, static_cast<std::uint8_t>(model.output_activation), 1);
  detail::put_u(out, model.seed, 8);
  detail::put_u(out, model.epochs_trained, 8);
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    for (double w : model.weights[l]) detail::put_u(out, std::bit_cast<std::uint64_t>(w), 8);
    for (double b : model.biases[l]) detail::put_u(out, std::bit_cast<std::uint64_t>(b), 8);
  }
  detail::put_u(out, detail::crc32(out), 4);
  return out;
}

inline MlpModel deserialize_model(std::string_view bytes) {
  require(bytes.size() >= kModelMagic.size() + 8 && bytes.substr(0, kModelMagic.size()) == kModelMagic,
          Errc::schema_error, "not a model file (bad magic)");
  detail::ByteReader r(bytes.substr(kModelMagic.size()));
  const auto version = r.u(4);
  require(version == kModelVersion, Errc::version_mismatch,
          "model file version " + std::to_string(version) + ", expected " + std::to_string(kModelVersion));
  require(bytes.size() >= 4, Errc::schema_error, "model file truncated");
  const auto stored_crc = detail::ByteReader(bytes.substr(bytes.size() - 4)).u(4);
  require(stored_crc == detail::crc32(bytes.substr(0, bytes.size() - 4)), Errc::schema_error,
          "model file checksum mismatch");

  MlpModel m;
  const auto count = r.u(4);
  require(count >= 2 && count <= 64, Errc::schema_error, "implausible layer count");
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto s = r.u(4);
    require(s >= 1 && s <= 1u << 16, Errc::schema_error, "implausible layer size");
    m.layer_sizes.push_back(static_cast<int>(s));
  }
  const auto hidden = r.u(1), output = r.u(1);
  require((hidden == 1 || hidden == 2) && (output == 1 || output == 2), Errc::schema_error,
          "unknown activation tag");
  m.hidden_activation = static_cast<Activation>(hidden);
  m.output_activation = static_cast<Activation>(output);
  m.seed = r.u(8);
  m.epochs_trained = r.u(8);
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    std::vector<double> w(static_cast<std::size_t>(m.layer_sizes[l]) * m.layer_sizes[l + 1]);
    std::vector<double> b(m.layer_sizes[l + 1]);
    for (double& v : w) v = r.f64();
    for (double& v : b) v = r.f64();
    m.weights.push_back(std::move(w));
    m.biases.push_back(std::move(b));
  }
  require(r.remaining() == 4, Errc::schema_error, "trailing bytes in model file");
  try {
    validate(m);
  } catch (const Error& e) {
    throw Error(Errc::schema_error, e.what());
  }
  return m;
}

inline void save_model(const MlpModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  atomic_write(path, std::ios::binary, [&](std::ostream& out) { out.write(bytes.data(), bytes.size()); });
}

inline MlpModel load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

}  // namespace lsden
