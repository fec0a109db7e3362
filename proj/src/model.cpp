#include "model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "error.hpp"
#include "likert.hpp"

namespace tipinet {

namespace {

void check_shapes(const Matrix& pred, const Matrix& truth) {
  if (!pred.same_shape(truth) || pred.rows() < 1) {
    throw ValidationError(
        "shape mismatch: " + std::to_string(pred.rows()) + "x" +
        std::to_string(pred.cols()) + " vs " + std::to_string(truth.rows()) +
        "x" + std::to_string(truth.cols()));
  }
}

Matrix gather_rows(const Matrix& m, const std::vector<int>& idx) {
  Matrix out(static_cast<int>(idx.size()), m.cols());
  for (int r = 0; r < out.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) out(r, c) = m(idx[static_cast<std::size_t>(r)], c);
  }
  return out;
}

}  // namespace

std::array<double, kNumFactors> forward(const Matrix& w,
                                        std::span<const double, kNumItems> x) {
  std::array<double, kNumFactors> out{};
  for (int f = 0; f < kNumFactors; ++f) {
    double acc = 0.0;
    for (int k = 0; k < kNumItems; ++k) acc += w(f, k) * x[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(f)] = acc;
  }
  return out;
}

Matrix forward_batch(const Matrix& w, const Matrix& x) {
  if (x.cols() != kNumItems || w.rows() != kNumFactors ||
      w.cols() != kNumItems) {
    throw ValidationError("forward_batch expects N x 10 inputs and 5 x 10 weights");
  }
  Matrix out(x.rows(), kNumFactors);
  for (int r = 0; r < x.rows(); ++r) {
    const double* xr = x.row(r);
    for (int f = 0; f < kNumFactors; ++f) {
      const double* wf = w.row(f);
      double acc = 0.0;
      for (int k = 0; k < kNumItems; ++k) acc += wf[k] * xr[k];
      out(r, f) = acc;
    }
  }
  return out;
}

double mse(const Matrix& pred, const Matrix& truth) {
  check_shapes(pred, truth);
  double acc = 0.0;
  const double* p = pred.data();
  const double* t = truth.data();
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = p[i] - t[i];
    acc += r * r;
  }
  return acc / static_cast<double>(pred.size());
}

double mae(const Matrix& pred, const Matrix& truth) {
  check_shapes(pred, truth);
  double acc = 0.0;
  const double* p = pred.data();
  const double* t = truth.data();
  for (std::size_t i = 0; i < pred.size(); ++i) acc += std::fabs(p[i] - t[i]);
  return acc / static_cast<double>(pred.size());
}

Matrix grad_mse(const Matrix& w, const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows() || x.cols() != kNumItems ||
      y.cols() != kNumFactors || x.rows() < 1) {
    throw ValidationError("grad_mse shape mismatch");
  }
  const Matrix pred = forward_batch(w, x);
  const double scale = 2.0 / static_cast<double>(pred.size());
  Matrix g(kNumFactors, kNumItems);
  for (int r = 0; r < x.rows(); ++r) {
    const double* xr = x.row(r);
    for (int f = 0; f < kNumFactors; ++f) {
      const double resid = pred(r, f) - y(r, f);
      double* gf = g.row(f);
      for (int k = 0; k < kNumItems; ++k) gf[k] += scale * resid * xr[k];
    }
  }
  return g;
}

Matrix init_weights(Rng& rng) {
  const double bound = std::sqrt(6.0 / (kNumItems + kNumFactors));
  Matrix w(kNumFactors, kNumItems);
  for (int f = 0; f < kNumFactors; ++f) {
    for (int k = 0; k < kNumItems; ++k) w(f, k) = rng.uniform(-bound, bound);
  }
  return w;
}

ReplicateRun train(const Matrix& items, const Matrix& targets,
                   const TrainConfig& config, const Split* fixed_split,
                   std::span<const int> weight_snapshot_epochs) {
  if (items.rows() != targets.rows() || items.cols() != kNumItems ||
      targets.cols() != kNumFactors) {
    throw ValidationError("train: shape mismatch between items and targets");
  }
  if (items.rows() < 5) {
    throw ValidationError("train: need at least 5 rows");
  }
  if (config.epochs < 1) throw ValidationError("train: epochs must be >= 1");
  if (config.learning_rate <= 0) {
    throw ValidationError("train: learning rate must be positive");
  }
  if (config.batch_size < 0) {
    throw ValidationError("train: batch size must be nonnegative");
  }

  Rng rng(config.seed);
  Split local_split;
  const Split* split = fixed_split;
  if (split == nullptr) {
    local_split = split_train_val(items.rows(), config.val_fraction, rng);
    split = &local_split;
  }

  const Matrix x_train = gather_rows(items, split->train);
  const Matrix y_train = gather_rows(targets, split->train);
  const Matrix x_val = gather_rows(items, split->val);
  const Matrix y_val = gather_rows(targets, split->val);

  Matrix w = init_weights(rng);

  // Adaptive-moment state (used only when selected).
  Matrix moment1(kNumFactors, kNumItems), moment2(kNumFactors, kNumItems);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long step = 0;

  auto apply_update = [&](const Matrix& g) {
    if (config.optimizer == Optimizer::kGradientDescent) {
      for (int f = 0; f < kNumFactors; ++f) {
        for (int k = 0; k < kNumItems; ++k) {
          w(f, k) -= config.learning_rate * g(f, k);
        }
      }
      return;
    }
    ++step;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (int f = 0; f < kNumFactors; ++f) {
      for (int k = 0; k < kNumItems; ++k) {
        moment1(f, k) = beta1 * moment1(f, k) + (1 - beta1) * g(f, k);
        moment2(f, k) = beta2 * moment2(f, k) + (1 - beta2) * g(f, k) * g(f, k);
        w(f, k) -= config.learning_rate * (moment1(f, k) / c1) /
                   (std::sqrt(moment2(f, k) / c2) + eps);
      }
    }
  };

  ReplicateRun run;
  run.seed = config.seed;
  run.train_mse.reserve(static_cast<std::size_t>(config.epochs));

  {
    const Matrix pred_val0 = forward_batch(w, x_val);
    run.initial_val_mse = mse(pred_val0, y_val);
    run.initial_val_mae = mae(pred_val0, y_val);
  }

  std::vector<int> batch_order(split->train.size());
  std::iota(batch_order.begin(), batch_order.end(), 0);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.batch_size == 0 ||
        config.batch_size >= static_cast<int>(split->train.size())) {
      apply_update(grad_mse(w, x_train, y_train));
    } else {
      rng.shuffle(batch_order);
      for (std::size_t start = 0; start < batch_order.size();
           start += static_cast<std::size_t>(config.batch_size)) {
        const std::size_t stop = std::min(
            batch_order.size(), start + static_cast<std::size_t>(config.batch_size));
        Matrix xb(static_cast<int>(stop - start), kNumItems);
        Matrix yb(static_cast<int>(stop - start), kNumFactors);
        for (std::size_t r = start; r < stop; ++r) {
          const int src = batch_order[r];
          for (int c = 0; c < kNumItems; ++c) xb(static_cast<int>(r - start), c) = x_train(src, c);
          for (int c = 0; c < kNumFactors; ++c) yb(static_cast<int>(r - start), c) = y_train(src, c);
        }
        apply_update(grad_mse(w, xb, yb));
      }
    }

    const Matrix pred_train = forward_batch(w, x_train);
    const Matrix pred_val = forward_batch(w, x_val);
    const double tr_mse = mse(pred_train, y_train);
    const double tr_mae = mae(pred_train, y_train);
    const double va_mse = mse(pred_val, y_val);
    const double va_mae = mae(pred_val, y_val);
    if (!std::isfinite(tr_mse) || !std::isfinite(va_mse)) {
      throw DivergedError(epoch, "training diverged at epoch " +
                                     std::to_string(epoch));
    }
    run.train_mse.push_back(tr_mse);
    run.train_mae.push_back(tr_mae);
    run.val_mse.push_back(va_mse);
    run.val_mae.push_back(va_mae);

    for (int snap : weight_snapshot_epochs) {
      if (snap == epoch) run.weight_snapshots.emplace(epoch, w);
    }
  }
  run.final_weights = w;
  return run;
}

double baseline_mse(const Dataset& ds) {
  const NormalizedData norm = normalize(ds);
  Matrix scores(norm.targets.rows(), kNumFactors);
  for (int r = 0; r < scores.rows(); ++r) {
    const BigFiveScores s =
        score_tipi(std::span<const int, kNumItems>(
            ds.records[static_cast<std::size_t>(r)].items));
    const auto arr = s.as_array();
    for (int f = 0; f < kNumFactors; ++f) {
      scores(r, f) = arr[static_cast<std::size_t>(f)] / ds.item_scale_max;
    }
  }
  return mse(scores, norm.targets);
}

}  // namespace tipinet
