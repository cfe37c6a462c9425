#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "travmap/defaults.hpp"
#include "travmap/error.hpp"
#include "travmap/features.hpp"

namespace travmap {

enum class Activation { relu, identity };

/// Fully connected encoder-decoder. Hidden layers use `hidden_activation`;
/// the output layer is always linear. Optional per-dimension standardisation
/// wraps the network so that inputs and reconstructions stay in feature units.
template <class Scalar>
struct MlpModel {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<std::size_t> layer_sizes;
  std::vector<Matrix> weights;  // weights[k]: layer_sizes[k+1] x layer_sizes[k]
  std::vector<Vector> biases;   // biases[k]: layer_sizes[k+1]
  Activation hidden_activation = Activation::relu;
  Vector input_mean;  // empty unless standardising
  Vector input_std;
  std::map<std::string, std::string> metadata;

  std::size_t layers() const noexcept { return weights.size(); }
  std::size_t input_dim() const noexcept { return layer_sizes.empty() ? 0 : layer_sizes.front(); }
  std::size_t output_dim() const noexcept { return layer_sizes.empty() ? 0 : layer_sizes.back(); }
  bool standardized() const noexcept { return input_mean.size() > 0; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t k = 0; k < layers(); ++k) n += weights[k].size() + biases[k].size();
    return n;
  }

  /// Zero-initialised model with the given layer chain.
  static MlpModel zeros(std::vector<std::size_t> sizes, Activation act = Activation::relu) {
    require(sizes.size() >= 2, ErrorCode::shape, "an MLP needs at least input and output sizes");
    for (std::size_t s : sizes) require(s > 0, ErrorCode::shape, "layer sizes must be positive");
    MlpModel m;
    m.layer_sizes = std::move(sizes);
    m.hidden_activation = act;
    for (std::size_t k = 0; k + 1 < m.layer_sizes.size(); ++k) {
      m.weights.push_back(Matrix::Zero(m.layer_sizes[k + 1], m.layer_sizes[k]));
      m.biases.push_back(Vector::Zero(m.layer_sizes[k + 1]));
    }
    return m;
  }

  /// Uniform He-style initialisation: U(-sqrt(6 / fan_in), +sqrt(6 / fan_in)), zero biases.
  static MlpModel he_uniform(std::vector<std::size_t> sizes, std::uint64_t seed, Activation act = Activation::relu) {
    MlpModel m = zeros(std::move(sizes), act);
    std::mt19937_64 rng(seed);
    for (auto& w : m.weights) {
      const double bound = std::sqrt(6.0 / static_cast<double>(w.cols()));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<Scalar>(dist(rng));
    }
    return m;
  }

  void validate() const {
    require(layer_sizes.size() >= 2 && weights.size() + 1 == layer_sizes.size() && biases.size() == weights.size(),
            ErrorCode::shape, "layer count mismatch");
    for (std::size_t k = 0; k < weights.size(); ++k) {
      require(static_cast<std::size_t>(weights[k].rows()) == layer_sizes[k + 1] &&
                  static_cast<std::size_t>(weights[k].cols()) == layer_sizes[k] &&
                  static_cast<std::size_t>(biases[k].size()) == layer_sizes[k + 1],
              ErrorCode::shape, "layer " + std::to_string(k) + " does not chain");
      require(weights[k].allFinite() && biases[k].allFinite(), ErrorCode::non_finite, "non-finite parameters");
    }
  }

  template <class Other>
  MlpModel<Other> cast() const {
    MlpModel<Other> m;
    m.layer_sizes = layer_sizes;
    m.hidden_activation = hidden_activation;
    m.metadata = metadata;
    for (const auto& w : weights) m.weights.push_back(w.template cast<Other>());
    for (const auto& b : biases) m.biases.push_back(b.template cast<Other>());
    m.input_mean = input_mean.template cast<Other>();
    m.input_std = input_std.template cast<Other>();
    return m;
  }
};

using Mlp = MlpModel<float>;

/// Default reconstruction network for 384-d features.
inline std::vector<std::size_t> default_layer_sizes() {
  return {defaults::layer_sizes.begin(), defaults::layer_sizes.end()};
}

// ---------------------------------------------------------------------------
// Forward / loss / gradients

namespace detail {

/// Pre-activations and activations of one batch (samples are columns).
template <class Scalar>
struct ForwardTrace {
  using Matrix = typename MlpModel<Scalar>::Matrix;
  std::vector<Matrix> activations;  // activations[0] = (standardised) input
  std::vector<Matrix> pre;          // pre[k] = W_k a_k + b_k
  Matrix output;                    // reconstruction in feature units
};

template <class Scalar>
ForwardTrace<Scalar> forward_trace(const MlpModel<Scalar>& model, const typename MlpModel<Scalar>::Matrix& input) {
  using Matrix = typename MlpModel<Scalar>::Matrix;
  require(static_cast<std::size_t>(input.rows()) == model.input_dim(), ErrorCode::dimension,
          "input has " + std::to_string(input.rows()) + " dims, model expects " + std::to_string(model.input_dim()));
  ForwardTrace<Scalar> t;
  Matrix a = input;
  if (model.standardized()) {
    a = ((a.colwise() - model.input_mean).array().colwise() / model.input_std.array()).matrix();
  }
  t.activations.push_back(a);
  for (std::size_t k = 0; k < model.layers(); ++k) {
    Matrix z = model.weights[k] * t.activations.back();
    z.colwise() += model.biases[k];
    t.pre.push_back(z);
    const bool last = k + 1 == model.layers();
    if (!last && model.hidden_activation == Activation::relu) z = z.cwiseMax(Scalar(0));
    if (!last) t.activations.push_back(std::move(z));
    else t.output = std::move(z);
  }
  if (model.standardized()) {
    t.output = ((t.output.array().colwise() * model.input_std.array()).colwise() + model.input_mean.array()).matrix();
  }
  return t;
}

template <class Scalar>
typename MlpModel<Scalar>::Matrix to_matrix(std::span<const FeatureVector> batch, std::size_t dim) {
  typename MlpModel<Scalar>::Matrix x(dim, batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) {
    require(batch[j].size() == dim, ErrorCode::dimension,
            "vector has " + std::to_string(batch[j].size()) + " dims, expected " + std::to_string(dim));
    for (std::size_t i = 0; i < dim; ++i) x(i, j) = static_cast<Scalar>(batch[j][i]);
  }
  return x;
}

}  // namespace detail

/// Batch forward pass; columns are samples.
template <class Scalar>
typename MlpModel<Scalar>::Matrix forward(const MlpModel<Scalar>& model, const typename MlpModel<Scalar>::Matrix& input) {
  return detail::forward_trace(model, input).output;
}

template <class Scalar>
FeatureVector forward(const MlpModel<Scalar>& model, const FeatureVector& f) {
  const auto x = detail::to_matrix<Scalar>(std::span<const FeatureVector>(&f, 1), model.input_dim());
  const auto y = forward(model, x);
  FeatureVector out(static_cast<std::size_t>(y.rows()));
  for (Eigen::Index i = 0; i < y.rows(); ++i) out[i] = static_cast<float>(y(i, 0));
  return out;
}

/// Mean squared error over the N feature dimensions.
inline double reconstruction_loss(std::span<const float> f, std::span<const float> f_hat) {
  require(f.size() == f_hat.size(), ErrorCode::dimension, "reconstruction length mismatch");
  require(!f.empty(), ErrorCode::dimension, "empty feature vector");
  double sum = 0.0;
  for (std::size_t n = 0; n < f.size(); ++n) {
    const double d = static_cast<double>(f[n]) - static_cast<double>(f_hat[n]);
    sum += d * d;
  }
  return sum / static_cast<double>(f.size());
}

/// Per-sample reconstruction loss for many vectors, evaluated in chunks.
template <class Scalar>
std::vector<double> reconstruction_losses(const MlpModel<Scalar>& model, std::span<const FeatureVector> vectors,
                                          std::size_t chunk = 512) {
  require(model.input_dim() == model.output_dim(), ErrorCode::shape, "not an autoencoder");
  std::vector<double> losses;
  losses.reserve(vectors.size());
  for (std::size_t start = 0; start < vectors.size(); start += chunk) {
    const auto part = vectors.subspan(start, std::min(chunk, vectors.size() - start));
    const auto x = detail::to_matrix<Scalar>(part, model.input_dim());
    const auto y = forward(model, x);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      losses.push_back(static_cast<double>((y.col(j) - x.col(j)).squaredNorm()) / static_cast<double>(x.rows()));
    }
  }
  return losses;
}

template <class Scalar>
struct Gradients {
  using Matrix = typename MlpModel<Scalar>::Matrix;
  using Vector = typename MlpModel<Scalar>::Vector;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Scalar loss = 0;  // mean batch reconstruction loss
};

/// Analytic gradient of the mean batch loss (1/B) sum_j (1/N) ||x_j - y_j||^2.
/// ReLU derivative at exactly zero is taken as zero.
template <class Scalar>
Gradients<Scalar> gradients(const MlpModel<Scalar>& model, const typename MlpModel<Scalar>::Matrix& batch) {
  using Matrix = typename MlpModel<Scalar>::Matrix;
  require(batch.cols() > 0, ErrorCode::empty_input, "gradient of an empty batch");
  require(model.input_dim() == model.output_dim(), ErrorCode::shape, "not an autoencoder");
  const auto trace = detail::forward_trace(model, batch);
  const Scalar n = static_cast<Scalar>(batch.rows());
  const Scalar b = static_cast<Scalar>(batch.cols());

  const Matrix residual = trace.output - batch;
  Gradients<Scalar> g;
  g.loss = residual.squaredNorm() / (n * b);
  g.weights.resize(model.layers());
  g.biases.resize(model.layers());

  Matrix delta = residual * (Scalar(2) / (n * b));  // dL/d(output)
  if (model.standardized()) delta = (delta.array().colwise() * model.input_std.array()).matrix();
  for (std::size_t k = model.layers(); k-- > 0;) {
    g.weights[k] = delta * trace.activations[k].transpose();
    g.biases[k] = delta.rowwise().sum();
    if (k == 0) break;
    delta = model.weights[k].transpose() * delta;
    if (model.hidden_activation == Activation::relu) {
      delta = (trace.pre[k - 1].array() > Scalar(0)).select(delta, Scalar(0));
    }
  }
  return g;
}

template <class Scalar>
Gradients<Scalar> gradients(const MlpModel<Scalar>& model, std::span<const FeatureVector> batch) {
  return gradients(model, detail::to_matrix<Scalar>(batch, model.input_dim()));
}

// ---------------------------------------------------------------------------
// Training

enum class Optimizer { sgd, adam };

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 100;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double validation_fraction = 0.0;
  bool standardize = false;
  std::vector<std::size_t> layer_sizes = default_layer_sizes();

  void validate() const {
    require(std::isfinite(learning_rate) && learning_rate > 0.0, ErrorCode::invalid_argument, "learning rate must be > 0");
    require(epochs >= 1, ErrorCode::invalid_argument, "epochs must be >= 1");
    require(batch_size >= 1, ErrorCode::invalid_argument, "batch size must be >= 1");
    require(validation_fraction >= 0.0 && validation_fraction < 1.0, ErrorCode::invalid_argument,
            "validation fraction must be in [0, 1)");
    require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0, ErrorCode::invalid_argument,
            "bad Adam parameters");
  }
};

struct TrainResult {
  Mlp model;
  std::vector<double> train_loss;       // per-epoch mean over training samples
  std::vector<double> validation_loss;  // empty without a validation split
};

inline std::string to_string(Optimizer o) { return o == Optimizer::adam ? "adam" : "sgd"; }

/// Seeded mini-batch training of the reconstruction objective. Batch order is
/// reshuffled every epoch from the single config seed.
inline TrainResult train(const std::vector<FeatureVector>& dataset, const TrainConfig& config) {
  using Matrix = Mlp::Matrix;
  config.validate();
  require(!dataset.empty(), ErrorCode::empty_input, "training set is empty");
  const std::size_t dim = config.layer_sizes.front();
  require(config.layer_sizes.back() == dim, ErrorCode::shape, "autoencoder output must match its input");
  for (const auto& v : dataset) {
    require(v.size() == dim, ErrorCode::dimension,
            "training vector has " + std::to_string(v.size()) + " dims, model expects " + std::to_string(dim));
    for (float x : v) require(std::isfinite(x), ErrorCode::non_finite, "training vector has non-finite values");
  }

  std::mt19937_64 rng(config.seed);
  TrainResult result;
  result.model = Mlp::he_uniform(config.layer_sizes, rng());

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_val = static_cast<std::size_t>(std::floor(config.validation_fraction * static_cast<double>(dataset.size())));
  if (n_val >= dataset.size()) n_val = dataset.size() - 1;
  std::vector<std::size_t> train_idx(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> val_idx(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());

  Mlp& model = result.model;
  if (config.standardize) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    for (std::size_t i : train_idx) {
      for (std::size_t k = 0; k < dim; ++k) {
        mean[k] += dataset[i][k];
        sq[k] += static_cast<double>(dataset[i][k]) * dataset[i][k];
      }
    }
    const double n = static_cast<double>(train_idx.size());
    mean /= n;
    Eigen::VectorXd var = (sq / n - mean.cwiseProduct(mean)).cwiseMax(0.0);
    model.input_mean = mean.cast<float>();
    model.input_std = var.cwiseSqrt().cwiseMax(1e-6).cast<float>();
  }

  std::ostringstream lr;
  lr << std::setprecision(9) << config.learning_rate;
  model.metadata["optimizer"] = to_string(config.optimizer);
  model.metadata["learning_rate"] = lr.str();
  model.metadata["epochs"] = std::to_string(config.epochs);
  model.metadata["batch_size"] = std::to_string(config.batch_size);
  model.metadata["seed"] = std::to_string(config.seed);
  model.metadata["standardize"] = config.standardize ? "1" : "0";
  if (config.optimizer == Optimizer::adam) {
    std::ostringstream betas;
    betas << std::setprecision(9) << config.beta1 << ',' << config.beta2 << ',' << config.epsilon;
    model.metadata["adam"] = betas.str();
  }

  std::vector<Matrix> mw, vw;
  std::vector<Mlp::Vector> mb, vb;
  for (std::size_t k = 0; k < model.layers(); ++k) {
    mw.push_back(Matrix::Zero(model.weights[k].rows(), model.weights[k].cols()));
    vw.push_back(mw.back());
    mb.push_back(Mlp::Vector::Zero(model.biases[k].size()));
    vb.push_back(mb.back());
  }
  const auto lr_f = static_cast<float>(config.learning_rate);
  const auto b1 = static_cast<float>(config.beta1), b2 = static_cast<float>(config.beta2);
  const auto eps = static_cast<float>(config.epsilon);
  long step = 0;

  auto gather = [&](const std::vector<std::size_t>& idx, std::size_t begin, std::size_t end) {
    Matrix x(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(end - begin));
    for (std::size_t j = begin; j < end; ++j) {
      const auto& v = dataset[idx[j]];
      for (std::size_t i = 0; i < dim; ++i) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - begin)) = v[i];
    }
    return x;
  };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < train_idx.size(); begin += config.batch_size) {
      const std::size_t end = std::min(train_idx.size(), begin + config.batch_size);
      const auto g = gradients(model, gather(train_idx, begin, end));
      if (!std::isfinite(g.loss)) {
        fail(ErrorCode::numeric, "non-finite loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                                     std::to_string(begin) + " (learning rate " + lr.str() + ")");
      }
      epoch_loss += static_cast<double>(g.loss) * static_cast<double>(end - begin);
      ++step;
      if (config.optimizer == Optimizer::sgd) {
        for (std::size_t k = 0; k < model.layers(); ++k) {
          model.weights[k] -= lr_f * g.weights[k];
          model.biases[k] -= lr_f * g.biases[k];
        }
      } else {
        const float c1 = 1.0f - std::pow(b1, static_cast<float>(step));
        const float c2 = 1.0f - std::pow(b2, static_cast<float>(step));
        auto adam = [&](auto& param, auto& m, auto& v, const auto& grad) {
          m = b1 * m + (1.0f - b1) * grad;
          v = b2 * v + (1.0f - b2) * grad.cwiseProduct(grad);
          param.array() -= lr_f * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
        };
        for (std::size_t k = 0; k < model.layers(); ++k) {
          adam(model.weights[k], mw[k], vw[k], g.weights[k]);
          adam(model.biases[k], mb[k], vb[k], g.biases[k]);
        }
      }
    }
    result.train_loss.push_back(epoch_loss / static_cast<double>(train_idx.size()));
    if (!val_idx.empty()) {
      std::vector<FeatureVector> val;
      for (std::size_t i : val_idx) val.push_back(dataset[i]);
      const auto losses = reconstruction_losses(model, std::span<const FeatureVector>(val));
      result.validation_loss.push_back(std::accumulate(losses.begin(), losses.end(), 0.0) /
                                       static_cast<double>(losses.size()));
    }
  }
  model.validate();
  return result;
}

// ---------------------------------------------------------------------------
// Model file

inline constexpr std::array<char, 8> model_magic{'S', 'T', 'E', 'P', 'P', 'M', 'L', 'P'};
inline constexpr std::uint32_t model_version = 1;

namespace detail {

inline std::string join_floats(const Eigen::VectorXf& v) {
  std::ostringstream s;
  s << std::setprecision(9);
  for (Eigen::Index i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
  return s.str();
}

inline Eigen::VectorXf split_floats(const std::string& text) {
  std::vector<float> values;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) values.push_back(std::stof(item));
  return Eigen::Map<Eigen::VectorXf>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace detail

/// magic "STEPPMLP" | u32 version | u32 size count | u32 sizes... |
/// per layer: weights (row-major, out x in) then biases as f32 |
/// u32 byte length | "key=value\n" metadata text. Little endian throughout.
inline std::string encode_model(const Mlp& model) {
  model.validate();
  std::string out(model_magic.begin(), model_magic.end());
  detail::put_u32(out, model_version);
  detail::put_u32(out, static_cast<std::uint32_t>(model.layer_sizes.size()));
  for (std::size_t s : model.layer_sizes) detail::put_u32(out, static_cast<std::uint32_t>(s));
  for (std::size_t k = 0; k < model.layers(); ++k) {
    const auto& w = model.weights[k];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) detail::put_f32(out, w(r, c));
    }
    for (Eigen::Index r = 0; r < model.biases[k].size(); ++r) detail::put_f32(out, model.biases[k][r]);
  }
  auto meta = model.metadata;
  meta["hidden_activation"] = model.hidden_activation == Activation::relu ? "relu" : "identity";
  if (model.standardized()) {
    meta["norm_mean"] = detail::join_floats(model.input_mean);
    meta["norm_std"] = detail::join_floats(model.input_std);
  } else {
    meta.erase("norm_mean");
    meta.erase("norm_std");
  }
  std::string text;
  for (const auto& [key, value] : meta) {
    require(key.find_first_of("=\n") == std::string::npos && value.find('\n') == std::string::npos,
            ErrorCode::invalid_argument, "metadata key/value contains a separator: " + key);
    text += key + "=" + value + "\n";
  }
  detail::put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  return out;
}

/// `expected_sizes`, when non-empty, must equal the stored layer chain.
inline Mlp decode_model(const std::string& bytes, const std::vector<std::size_t>& expected_sizes = {}) {
  require(bytes.size() >= 8 && std::memcmp(bytes.data(), model_magic.data(), 8) == 0, ErrorCode::bad_magic,
          "model file: bad magic");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  std::size_t pos = 8;
  auto u32 = [&]() {
    require(bytes.size() >= pos + 4, ErrorCode::truncated, "model file: truncated");
    const std::uint32_t v = detail::get_u32(p + pos);
    pos += 4;
    return v;
  };
  const std::uint32_t version = u32();
  require(version == model_version, ErrorCode::version, "model file: unsupported version " + std::to_string(version));
  const std::uint32_t count = u32();
  require(count >= 2 && count <= 64, ErrorCode::shape, "model file: implausible layer count " + std::to_string(count));
  std::vector<std::size_t> sizes;
  for (std::uint32_t i = 0; i < count; ++i) sizes.push_back(u32());
  for (std::size_t s : sizes) require(s > 0 && s <= (1u << 20), ErrorCode::shape, "model file: bad layer size");
  if (!expected_sizes.empty()) {
    require(sizes == expected_sizes, ErrorCode::shape, "model file: layer sizes do not match the expected chain");
  }
  require(sizes.front() == sizes.back(), ErrorCode::shape, "model file: input and output sizes differ");

  Mlp model = Mlp::zeros(sizes);
  auto f32 = [&]() {
    require(bytes.size() >= pos + 4, ErrorCode::truncated, "model file: truncated parameters");
    const float v = detail::get_f32(p + pos);
    pos += 4;
    require(std::isfinite(v), ErrorCode::non_finite, "model file: non-finite parameter");
    return v;
  };
  for (std::size_t k = 0; k < model.layers(); ++k) {
    auto& w = model.weights[k];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = f32();
    }
    for (Eigen::Index r = 0; r < model.biases[k].size(); ++r) model.biases[k][r] = f32();
  }
  const std::uint32_t text_len = u32();
  require(bytes.size() == pos + text_len, ErrorCode::truncated, "model file: metadata length mismatch");
  std::istringstream text(bytes.substr(pos, text_len));
  std::string line;
  while (std::getline(text, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    model.metadata[line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (auto it = model.metadata.find("hidden_activation"); it != model.metadata.end()) {
    model.hidden_activation = it->second == "identity" ? Activation::identity : Activation::relu;
    model.metadata.erase(it);
  }
  if (model.metadata.count("norm_mean")) {
    model.input_mean = detail::split_floats(model.metadata["norm_mean"]);
    model.input_std = detail::split_floats(model.metadata["norm_std"]);
    require(static_cast<std::size_t>(model.input_mean.size()) == model.input_dim() &&
                static_cast<std::size_t>(model.input_std.size()) == model.input_dim(),
            ErrorCode::shape, "model file: normalisation stats have the wrong length");
    model.metadata.erase("norm_mean");
    model.metadata.erase("norm_std");
  }
  return model;
}

inline void save_model(const Mlp& model, const std::string& path) { detail::spill(encode_model(model), path); }

inline Mlp load_model(const std::string& path, const std::vector<std::size_t>& expected_sizes = {}) {
  return decode_model(detail::slurp(path), expected_sizes);
}

}  // namespace travmap
