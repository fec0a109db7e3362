#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "dataset.hpp"
#include "matrix.hpp"
#include "rng.hpp"

namespace tipinet {

// The predictor is a bias-free linear map from the 10 normalized item
// answers to the 5 normalized factor scores: 50 trainable parameters.
// Row f of the weight matrix holds factor f's weights over the items.

enum class Optimizer { kGradientDescent, kAdaptiveMoment };

struct TrainConfig {
  int epochs = 300;
  double learning_rate = 0.5;
  double val_fraction = 0.4;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::kGradientDescent;
  int batch_size = 0;  // 0 = full batch
};

struct ReplicateRun {
  std::vector<double> train_mse, train_mae, val_mse, val_mae;
  // Validation error at initialization, before any update (epoch 0).
  double initial_val_mse = 0.0, initial_val_mae = 0.0;
  Matrix final_weights;  // 5 x 10
  std::uint64_t seed = 0;
  // Weight copies captured after selected epochs (1-based), when requested.
  std::map<int, Matrix> weight_snapshots;
};

// output[f] = sum_k w(f, k) * x[k]
std::array<double, kNumFactors> forward(const Matrix& w,
                                        std::span<const double, kNumItems> x);

// N x 10 inputs -> N x 5 predictions.
Matrix forward_batch(const Matrix& w, const Matrix& x);

// Mean over all N*5 entries.
double mse(const Matrix& pred, const Matrix& truth);
double mae(const Matrix& pred, const Matrix& truth);

// Exact gradient of mse(forward_batch(w, x), y) with respect to w:
// (2 / (5 N)) * (X w^T - Y)^T X.
Matrix grad_mse(const Matrix& w, const Matrix& x, const Matrix& y);

// Uniform fan-based initialization on [-sqrt(6/15), +sqrt(6/15)].
Matrix init_weights(Rng& rng);

// Gradient descent on the training partition; train/validation MSE and MAE
// are recorded after every epoch. Deterministic given config.seed. When
// fixed_split is given the internal split draw is skipped.
ReplicateRun train(const Matrix& items, const Matrix& targets,
                   const TrainConfig& config,
                   const Split* fixed_split = nullptr,
                   std::span<const int> weight_snapshot_epochs = {});

// MSE between the normalized target factor scores and the normalized scale
// scores computed from the items; the floor a generalizing predictor
// cannot beat.
double baseline_mse(const Dataset& ds);

}  // namespace tipinet
