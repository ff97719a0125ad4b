#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "tdcr/errors.hpp"
#include "tdcr/geometry.hpp"
#include "tdcr/random.hpp"

namespace tdcr {

/// Decoder shape: input (configuration or configuration pair) through
/// hidden layers of strictly increasing width to a flat 3M output that is
/// reshaped into M points.
struct NetworkSpec {
  int input_dim = 8;
  std::vector<int> hidden_dims = {128, 256, 512, 1024};
  int point_count = 512;  // M

  int output_dim() const { return 3 * point_count; }
};

inline void validate(const NetworkSpec& spec) {
  if (spec.input_dim < 1) throw InvalidInput("NetworkSpec: input_dim must be >= 1");
  if (spec.point_count < 1)
    throw InvalidInput("NetworkSpec: point_count must be >= 1");
  if (spec.hidden_dims.empty())
    throw InvalidInput("NetworkSpec: need at least one hidden layer");
  int prev = 0;
  for (int d : spec.hidden_dims) {
    if (d < 1) throw InvalidInput("NetworkSpec: hidden dims must be >= 1");
    if (d <= prev)
      throw InvalidInput("NetworkSpec: hidden dims must be strictly increasing");
    prev = d;
  }
}

struct BatchNormState {
  Eigen::VectorXd scale;         // gamma
  Eigen::VectorXd shift;         // beta
  Eigen::VectorXd running_mean;
  Eigen::VectorXd running_var;
};

struct HiddenLayer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;
  BatchNormState bn;
};

struct NetworkWeights {
  NetworkSpec spec;
  std::vector<HiddenLayer> hidden;
  Eigen::MatrixXd W_out;
  Eigen::VectorXd b_out;
  bool training_mode = false;
  // Batch-norm hyperparameters; not persisted in the weight file.
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;
};

/// Uniform Xavier/Glorot initialization in +/- sqrt(6/(fan_in+fan_out)),
/// zero biases, identity batch-norm with unit running variance.
/// Deterministic for a given seed.
inline NetworkWeights init_xavier(const NetworkSpec& spec, std::uint64_t seed) {
  validate(spec);
  Rng rng(seed);
  auto fill = [&](Eigen::MatrixXd& W, int fan_out, int fan_in) {
    W.resize(fan_out, fan_in);
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) W(r, c) = rng.uniform(-bound, bound);
  };

  NetworkWeights w;
  w.spec = spec;
  int in_dim = spec.input_dim;
  for (int out_dim : spec.hidden_dims) {
    HiddenLayer layer;
    fill(layer.W, out_dim, in_dim);
    layer.b = Eigen::VectorXd::Zero(out_dim);
    layer.bn.scale = Eigen::VectorXd::Ones(out_dim);
    layer.bn.shift = Eigen::VectorXd::Zero(out_dim);
    layer.bn.running_mean = Eigen::VectorXd::Zero(out_dim);
    layer.bn.running_var = Eigen::VectorXd::Ones(out_dim);
    w.hidden.push_back(std::move(layer));
    in_dim = out_dim;
  }
  fill(w.W_out, spec.output_dim(), in_dim);
  w.b_out = Eigen::VectorXd::Zero(spec.output_dim());
  return w;
}

/// Intermediate activations needed by the backward pass.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;    // per hidden layer: B x in
  std::vector<Eigen::MatrixXd> zhat;      // normalized pre-activation
  std::vector<Eigen::MatrixXd> pre_relu;  // scale*zhat + shift
  std::vector<Eigen::VectorXd> inv_std;   // per feature
  Eigen::MatrixXd last_activation;        // input of the output layer
};

/// Single-sample inference pass using running batch-norm statistics.
inline Eigen::VectorXd forward_single_raw(const NetworkWeights& w,
                                          const Eigen::VectorXd& input) {
  if (input.size() != w.spec.input_dim)
    throw InvalidInput("forward: input width mismatch");
  Eigen::VectorXd a = input;
  for (const auto& layer : w.hidden) {
    Eigen::VectorXd z = layer.W * a + layer.b;
    const Eigen::ArrayXd inv_std =
        (layer.bn.running_var.array() + w.bn_eps).sqrt().inverse();
    z = (((z - layer.bn.running_mean).array() * inv_std) *
             layer.bn.scale.array() +
         layer.bn.shift.array())
            .matrix();
    a = z.cwiseMax(0.0);
  }
  return w.W_out * a + w.b_out;
}

/// Batched forward pass. Training mode normalizes with batch statistics
/// (B >= 2) and updates the running statistics in place; inference mode
/// runs each row through the single-sample path, so a row's output never
/// depends on its batch neighbors.
inline Eigen::MatrixXd forward_batch(NetworkWeights& w,
                                     const Eigen::MatrixXd& batch,
                                     ForwardCache* cache = nullptr) {
  if (batch.cols() != w.spec.input_dim)
    throw InvalidInput("forward: batch width mismatch");
  const int B = static_cast<int>(batch.rows());
  if (B < 1) throw InvalidInput("forward: empty batch");

  if (!w.training_mode) {
    Eigen::MatrixXd out(B, w.spec.output_dim());
    for (int r = 0; r < B; ++r)
      out.row(r) = forward_single_raw(w, batch.row(r).transpose()).transpose();
    return out;
  }

  if (B < 2)
    throw InvalidInput("forward: training mode needs a batch of at least 2");
  if (cache) {
    cache->inputs.clear();
    cache->zhat.clear();
    cache->pre_relu.clear();
    cache->inv_std.clear();
  }

  Eigen::MatrixXd a = batch;
  for (auto& layer : w.hidden) {
    Eigen::MatrixXd z =
        (a * layer.W.transpose()).rowwise() + layer.b.transpose();
    const Eigen::RowVectorXd mean = z.colwise().mean();
    Eigen::MatrixXd centered = z.rowwise() - mean;
    const Eigen::RowVectorXd var =
        centered.array().square().colwise().sum() / B;  // biased
    const Eigen::ArrayXd inv_std =
        (var.transpose().array() + w.bn_eps).sqrt().inverse();

    Eigen::MatrixXd zhat =
        centered.array().rowwise() * inv_std.transpose().array();
    Eigen::MatrixXd pre_relu =
        (zhat.array().rowwise() * layer.bn.scale.transpose().array())
            .rowwise() +
        layer.bn.shift.transpose().array();

    // Running statistics track the batch statistics (unbiased variance).
    const double m = w.bn_momentum;
    layer.bn.running_mean =
        (1.0 - m) * layer.bn.running_mean + m * mean.transpose();
    layer.bn.running_var =
        (1.0 - m) * layer.bn.running_var +
        m * (var.transpose() * (static_cast<double>(B) / (B - 1)));

    if (cache) {
      cache->inputs.push_back(a);
      cache->zhat.push_back(zhat);
      cache->pre_relu.push_back(pre_relu);
      cache->inv_std.push_back(inv_std.matrix());
    }
    a = pre_relu.cwiseMax(0.0);
  }
  if (cache) cache->last_activation = a;
  return (a * w.W_out.transpose()).rowwise() + w.b_out.transpose();
}

/// Reshape one flat output row into a cloud (point j = entries 3j..3j+2).
inline PointCloud row_to_cloud(const Eigen::RowVectorXd& row) {
  PointCloud cloud;
  const int m = static_cast<int>(row.size()) / 3;
  cloud.points.reserve(m);
  for (int j = 0; j < m; ++j)
    cloud.points.emplace_back(row(3 * j), row(3 * j + 1), row(3 * j + 2));
  return cloud;
}

inline std::vector<PointCloud> forward(NetworkWeights& w,
                                       const Eigen::MatrixXd& batch) {
  const Eigen::MatrixXd out = forward_batch(w, batch);
  std::vector<PointCloud> clouds;
  clouds.reserve(out.rows());
  for (int r = 0; r < out.rows(); ++r) clouds.push_back(row_to_cloud(out.row(r)));
  return clouds;
}

inline PointCloud forward_single(const NetworkWeights& w,
                                 const Eigen::VectorXd& input) {
  return row_to_cloud(forward_single_raw(w, input).transpose());
}

/// Parameter gradients, mirroring the trainable weight layout.
struct LayerGrads {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
  Eigen::VectorXd bn_scale;
  Eigen::VectorXd bn_shift;
};

struct NetworkGrads {
  std::vector<LayerGrads> hidden;
  Eigen::MatrixXd W_out;
  Eigen::VectorXd b_out;
};

/// Backpropagation through the cached forward pass. d_output is the
/// gradient of the scalar loss with respect to the network output rows.
inline NetworkGrads backward_from_cache(const NetworkWeights& w,
                                        const ForwardCache& cache,
                                        const Eigen::MatrixXd& d_output) {
  const int B = static_cast<int>(d_output.rows());
  NetworkGrads grads;
  grads.hidden.resize(w.hidden.size());

  grads.W_out = d_output.transpose() * cache.last_activation;
  grads.b_out = d_output.colwise().sum().transpose();
  Eigen::MatrixXd d_act = d_output * w.W_out;

  for (int li = static_cast<int>(w.hidden.size()) - 1; li >= 0; --li) {
    const auto& layer = w.hidden[li];
    // ReLU.
    Eigen::MatrixXd d_pre =
        (cache.pre_relu[li].array() > 0.0).cast<double>() * d_act.array();
    // Batch-norm scale/shift.
    LayerGrads& g = grads.hidden[li];
    g.bn_scale = (d_pre.array() * cache.zhat[li].array())
                     .colwise()
                     .sum()
                     .transpose();
    g.bn_shift = d_pre.colwise().sum().transpose();
    Eigen::MatrixXd d_zhat =
        d_pre.array().rowwise() * layer.bn.scale.transpose().array();
    // Batch-norm input gradient with batch statistics:
    // dZ = inv_std/B * (B*dZhat - sum(dZhat) - Zhat * sum(dZhat .* Zhat))
    const Eigen::RowVectorXd sum_dzhat = d_zhat.colwise().sum();
    const Eigen::RowVectorXd sum_dzhat_zhat =
        (d_zhat.array() * cache.zhat[li].array()).colwise().sum();
    Eigen::MatrixXd d_z =
        (static_cast<double>(B) * d_zhat.array() -
         (Eigen::MatrixXd::Ones(B, 1) * sum_dzhat).array() -
         cache.zhat[li].array().rowwise() * sum_dzhat_zhat.array())
            .rowwise() *
        (cache.inv_std[li].transpose().array() / B);

    g.W = d_z.transpose() * cache.inputs[li];
    g.b = d_z.colwise().sum().transpose();
    if (li > 0) d_act = d_z * layer.W;
  }
  return grads;
}

// --- Adam ---------------------------------------------------------------

struct AdamState {
  std::vector<LayerGrads> m_hidden, v_hidden;
  Eigen::MatrixXd m_W_out, v_W_out;
  Eigen::VectorXd m_b_out, v_b_out;
};

inline AdamState make_adam_state(const NetworkWeights& w) {
  AdamState s;
  s.m_hidden.resize(w.hidden.size());
  s.v_hidden.resize(w.hidden.size());
  for (std::size_t i = 0; i < w.hidden.size(); ++i) {
    const auto& layer = w.hidden[i];
    for (auto* part : {&s.m_hidden[i], &s.v_hidden[i]}) {
      part->W = Eigen::MatrixXd::Zero(layer.W.rows(), layer.W.cols());
      part->b = Eigen::VectorXd::Zero(layer.b.size());
      part->bn_scale = Eigen::VectorXd::Zero(layer.bn.scale.size());
      part->bn_shift = Eigen::VectorXd::Zero(layer.bn.shift.size());
    }
  }
  s.m_W_out = Eigen::MatrixXd::Zero(w.W_out.rows(), w.W_out.cols());
  s.v_W_out = Eigen::MatrixXd::Zero(w.W_out.rows(), w.W_out.cols());
  s.m_b_out = Eigen::VectorXd::Zero(w.b_out.size());
  s.v_b_out = Eigen::VectorXd::Zero(w.b_out.size());
  return s;
}

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

namespace detail {

template <typename T>
void adam_update(T& param, const T& grad, T& m, T& v, double lr, int t,
                 const AdamConfig& cfg) {
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
  v = (cfg.beta2 * v.array() + (1.0 - cfg.beta2) * grad.array().square())
          .matrix();
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  param.array() -=
      lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.eps);
}

}  // namespace detail

/// One bias-corrected Adam step (t counts from 1). Running batch-norm
/// statistics are untouched; the training-mode forward pass owns them.
inline void adam_step(NetworkWeights& w, const NetworkGrads& grads,
                      AdamState& state, int t, double lr,
                      const AdamConfig& cfg = {}) {
  for (std::size_t i = 0; i < w.hidden.size(); ++i) {
    auto& layer = w.hidden[i];
    const auto& g = grads.hidden[i];
    detail::adam_update(layer.W, g.W, state.m_hidden[i].W, state.v_hidden[i].W,
                        lr, t, cfg);
    detail::adam_update(layer.b, g.b, state.m_hidden[i].b, state.v_hidden[i].b,
                        lr, t, cfg);
    detail::adam_update(layer.bn.scale, g.bn_scale, state.m_hidden[i].bn_scale,
                        state.v_hidden[i].bn_scale, lr, t, cfg);
    detail::adam_update(layer.bn.shift, g.bn_shift, state.m_hidden[i].bn_shift,
                        state.v_hidden[i].bn_shift, lr, t, cfg);
  }
  detail::adam_update(w.W_out, grads.W_out, state.m_W_out, state.v_W_out, lr,
                      t, cfg);
  detail::adam_update(w.b_out, grads.b_out, state.m_b_out, state.v_b_out, lr,
                      t, cfg);
}

// --- weight-file serialization -------------------------------------------
// Layout: magic "TDCRNET1"; little-endian u32 input_dim, u32 hidden layer
// count, the hidden widths, u32 output width; then per hidden layer the
// row-major f64 arrays W, b, bn_scale, bn_shift, bn_mean, bn_var; then the
// output layer W, b; then a CRC32 of every payload byte after the magic.

namespace detail {

inline std::uint32_t crc32(const unsigned char* data, std::size_t len,
                           std::uint32_t crc = 0) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k)
        c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  crc ^= 0xffffffffu;
  for (std::size_t i = 0; i < len; ++i)
    crc = table[(crc ^ data[i]) & 0xffu] ^ (crc >> 8);
  return crc ^ 0xffffffffu;
}

}  // namespace detail

inline constexpr char kWeightsMagic[8] = {'T', 'D', 'C', 'R',
                                          'N', 'E', 'T', '1'};

inline void save_weights(const NetworkWeights& w, const std::string& path) {
  std::string payload;
  auto put_u32 = [&](std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    payload.append(reinterpret_cast<const char*>(b), 4);
  };
  auto put_f64 = [&](double v) {
    static_assert(sizeof(double) == 8);
    char b[8];
    std::memcpy(b, &v, 8);
    payload.append(b, 8);  // little-endian host assumed
  };
  auto put_matrix = [&](const Eigen::MatrixXd& m) {
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) put_f64(m(r, c));
  };
  auto put_vector = [&](const Eigen::VectorXd& v) {
    for (int i = 0; i < v.size(); ++i) put_f64(v(i));
  };

  put_u32(static_cast<std::uint32_t>(w.spec.input_dim));
  put_u32(static_cast<std::uint32_t>(w.spec.hidden_dims.size()));
  for (int d : w.spec.hidden_dims) put_u32(static_cast<std::uint32_t>(d));
  put_u32(static_cast<std::uint32_t>(w.spec.output_dim()));
  for (const auto& layer : w.hidden) {
    put_matrix(layer.W);
    put_vector(layer.b);
    put_vector(layer.bn.scale);
    put_vector(layer.bn.shift);
    put_vector(layer.bn.running_mean);
    put_vector(layer.bn.running_var);
  }
  put_matrix(w.W_out);
  put_vector(w.b_out);

  const std::uint32_t crc = detail::crc32(
      reinterpret_cast<const unsigned char*>(payload.data()), payload.size());

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  out.write(kWeightsMagic, 8);
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  unsigned char cb[4] = {static_cast<unsigned char>(crc & 0xff),
                         static_cast<unsigned char>((crc >> 8) & 0xff),
                         static_cast<unsigned char>((crc >> 16) & 0xff),
                         static_cast<unsigned char>((crc >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(cb), 4);
  if (!out) throw IoError(path, "write failure");
}

inline NetworkWeights load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open");
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  if (content.size() < 8 ||
      std::memcmp(content.data(), kWeightsMagic, 8) != 0)
    throw WeightsError(WeightsError::Kind::BadMagic,
                       path + ": not a decoder weight file");
  if (content.size() < 12)
    throw WeightsError(WeightsError::Kind::Truncated, path + ": truncated");

  const unsigned char* payload =
      reinterpret_cast<const unsigned char*>(content.data()) + 8;
  const std::size_t payload_len = content.size() - 12;
  const unsigned char* crc_bytes = payload + payload_len;
  const std::uint32_t stored_crc =
      static_cast<std::uint32_t>(crc_bytes[0]) |
      (static_cast<std::uint32_t>(crc_bytes[1]) << 8) |
      (static_cast<std::uint32_t>(crc_bytes[2]) << 16) |
      (static_cast<std::uint32_t>(crc_bytes[3]) << 24);
  if (detail::crc32(payload, payload_len) != stored_crc)
    throw WeightsError(WeightsError::Kind::BadChecksum,
                       path + ": checksum mismatch");

  std::size_t pos = 0;
  auto get_u32 = [&]() {
    if (pos + 4 > payload_len)
      throw WeightsError(WeightsError::Kind::Truncated, path + ": truncated");
    const std::uint32_t v = static_cast<std::uint32_t>(payload[pos]) |
                            (static_cast<std::uint32_t>(payload[pos + 1]) << 8) |
                            (static_cast<std::uint32_t>(payload[pos + 2]) << 16) |
                            (static_cast<std::uint32_t>(payload[pos + 3]) << 24);
    pos += 4;
    return v;
  };
  auto get_f64 = [&]() {
    if (pos + 8 > payload_len)
      throw WeightsError(WeightsError::Kind::Truncated, path + ": truncated");
    double v;
    std::memcpy(&v, payload + pos, 8);
    pos += 8;
    return v;
  };

  NetworkSpec spec;
  spec.input_dim = static_cast<int>(get_u32());
  const std::uint32_t layer_count = get_u32();
  if (layer_count == 0 || layer_count > 64)
    throw WeightsError(WeightsError::Kind::BadShape,
                       path + ": implausible layer count");
  spec.hidden_dims.clear();
  for (std::uint32_t i = 0; i < layer_count; ++i)
    spec.hidden_dims.push_back(static_cast<int>(get_u32()));
  const std::uint32_t out_dim = get_u32();
  if (out_dim == 0 || out_dim % 3 != 0)
    throw WeightsError(WeightsError::Kind::BadShape,
                       path + ": output width not a multiple of 3");
  spec.point_count = static_cast<int>(out_dim / 3);
  try {
    validate(spec);
  } catch (const InvalidInput& e) {
    throw WeightsError(WeightsError::Kind::BadShape,
                       path + ": " + e.what());
  }

  NetworkWeights w;
  w.spec = spec;
  auto get_matrix = [&](int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = get_f64();
    return m;
  };
  auto get_vector = [&](int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = get_f64();
    return v;
  };
  int in_dim = spec.input_dim;
  for (int d : spec.hidden_dims) {
    HiddenLayer layer;
    layer.W = get_matrix(d, in_dim);
    layer.b = get_vector(d);
    layer.bn.scale = get_vector(d);
    layer.bn.shift = get_vector(d);
    layer.bn.running_mean = get_vector(d);
    layer.bn.running_var = get_vector(d);
    w.hidden.push_back(std::move(layer));
    in_dim = d;
  }
  w.W_out = get_matrix(static_cast<int>(out_dim), in_dim);
  w.b_out = get_vector(static_cast<int>(out_dim));
  if (pos != payload_len)
    throw WeightsError(WeightsError::Kind::BadShape,
                       path + ": trailing bytes after weights");
  return w;
}

/// Load with a shape expectation, e.g. to match a dataset's M.
inline NetworkWeights load_weights(const std::string& path,
                                   const NetworkSpec& expected) {
  NetworkWeights w = load_weights(path);
  if (w.spec.input_dim != expected.input_dim ||
      w.spec.hidden_dims != expected.hidden_dims ||
      w.spec.point_count != expected.point_count)
    throw WeightsError(WeightsError::Kind::BadShape,
                       path + ": weight shapes do not match the requested "
                              "network spec");
  return w;
}

}  // namespace tdcr
