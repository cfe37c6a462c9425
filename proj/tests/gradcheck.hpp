#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "travmap/autoencoder.hpp"

namespace travmap::test {

using MlpD = MlpModel<double>;

/// Mean batch loss evaluated straight from the forward pass.
inline double batch_loss(const MlpD& model, const MlpD::Matrix& x) {
  const MlpD::Matrix y = forward(model, x);
  return (y - x).squaredNorm() / static_cast<double>(x.rows() * x.cols());
}

/// Largest |analytic - numeric| / max(|analytic|, |numeric|, floor) over every
/// parameter, with central differences of step h.
inline double max_gradient_error(MlpD model, const MlpD::Matrix& x, double h = 1e-5, double floor = 1e-6) {
  const auto g = gradients(model, x);
  double worst = 0.0;
  auto check = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double up = batch_loss(model, x);
    param = saved - h;
    const double down = batch_loss(model, x);
    param = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
  };
  for (std::size_t k = 0; k < model.layers(); ++k) {
    for (Eigen::Index i = 0; i < model.weights[k].size(); ++i) check(model.weights[k].data()[i], g.weights[k].data()[i]);
    for (Eigen::Index i = 0; i < model.biases[k].size(); ++i) check(model.biases[k].data()[i], g.biases[k].data()[i]);
  }
  return worst;
}

/// Random [4,3,2,3,4] network with non-zero biases and a random batch.
inline std::pair<MlpD, MlpD::Matrix> random_small_problem(std::uint64_t seed, std::size_t batch = 5) {
  auto model = MlpD::he_uniform({4, 3, 2, 3, 4}, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& b : model.biases) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = 0.3 * n(rng);
  }
  MlpD::Matrix x(4, static_cast<Eigen::Index>(batch));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
  return {model, x};
}

}  // namespace travmap::test
