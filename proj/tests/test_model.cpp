#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "interpret.hpp"
#include "likert.hpp"
#include "model.hpp"
#include "synth.hpp"

using namespace tipinet;

namespace {

Matrix random_matrix(int rows, int cols, Rng& rng, double lo = -1,
                     double hi = 1) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(lo, hi);
  }
  return m;
}

double finite_difference(const Matrix& w, const Matrix& x, const Matrix& y,
                         int f, int k, double step) {
  Matrix plus = w, minus = w;
  plus(f, k) += step;
  minus(f, k) -= step;
  return (mse(forward_batch(plus, x), y) - mse(forward_batch(minus, x), y)) /
         (2 * step);
}

}  // namespace

TEST_CASE("forward with zero weights is the zero map") {
  const Matrix w(kNumFactors, kNumItems);
  std::array<double, 10> x = {1, 2, 3, 4, 5, 6, 7, 1, 2, 3};
  for (double v : forward(w, std::span<const double, 10>(x))) CHECK(v == 0.0);
}

TEST_CASE("forward is linear in the input") {
  Rng rng(31);
  const Matrix w = random_matrix(kNumFactors, kNumItems, rng);
  std::array<double, 10> x, y, mix;
  const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
  for (int i = 0; i < 10; ++i) {
    x[static_cast<std::size_t>(i)] = rng.uniform(-1, 1);
    y[static_cast<std::size_t>(i)] = rng.uniform(-1, 1);
    mix[static_cast<std::size_t>(i)] = a * x[static_cast<std::size_t>(i)] +
                                       b * y[static_cast<std::size_t>(i)];
  }
  const auto fx = forward(w, std::span<const double, 10>(x));
  const auto fy = forward(w, std::span<const double, 10>(y));
  const auto fmix = forward(w, std::span<const double, 10>(mix));
  for (int f = 0; f < kNumFactors; ++f) {
    CHECK(fmix[static_cast<std::size_t>(f)] ==
          doctest::Approx(a * fx[static_cast<std::size_t>(f)] +
                          b * fy[static_cast<std::size_t>(f)])
              .epsilon(1e-12));
  }
}

// The reverse-coded template applied to reverse-coded normalized items
// reproduces the normalized scale scores.
TEST_CASE("forward with the template matches normalized scoring") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::array<int, 10> items;
    for (int& v : items) v = 1 + static_cast<int>(rng.below(7));
    Matrix x(1, kNumItems);
    for (int c = 0; c < kNumItems; ++c) x(0, c) = items[static_cast<std::size_t>(c)] / 7.0;
    pre_reverse_items(x, 7.0);

    const Matrix w = template_matrix(true);
    const Matrix out = forward_batch(w, x);
    const auto expected =
        score_tipi(std::span<const int, 10>(items)).as_array();
    for (int f = 0; f < kNumFactors; ++f) {
      CHECK(out(0, f) ==
            doctest::Approx(expected[static_cast<std::size_t>(f)] / 7.0)
                .epsilon(1e-14));
    }
  }
}

TEST_CASE("parameter count is exactly 50") {
  Rng rng(1);
  CHECK(init_weights(rng).size() == 50);
}

TEST_CASE("mse basics") {
  Matrix a(3, kNumFactors, 0.5), b(3, kNumFactors, 0.5);
  CHECK(mse(a, b) == 0.0);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < kNumFactors; ++c) b(r, c) = 0.6;
  }
  CHECK(mse(a, b) == doctest::Approx(0.01).epsilon(1e-12));

  Matrix wrong(2, kNumFactors);
  CHECK_THROWS_AS(mse(a, wrong), ValidationError);
}

TEST_CASE("mae basics") {
  Matrix a(2, kNumFactors, 1.0), b(2, kNumFactors, 1.0);
  CHECK(mae(a, b) == 0.0);
  // residuals +0.2 and -0.2 in equal number
  for (int c = 0; c < kNumFactors; ++c) {
    b(0, c) = 1.2;
    b(1, c) = 0.8;
  }
  CHECK(mae(a, b) == doctest::Approx(0.2).epsilon(1e-12));
  Matrix wrong(3, kNumFactors);
  CHECK_THROWS_AS(mae(a, wrong), ValidationError);
}

TEST_CASE("mse and mae match a brute-force oracle on random input") {
  Rng rng(8);
  const Matrix p = random_matrix(4, kNumFactors, rng);
  const Matrix t = random_matrix(4, kNumFactors, rng);
  double sq = 0.0, ab = 0.0;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < kNumFactors; ++c) {
      sq += (p(r, c) - t(r, c)) * (p(r, c) - t(r, c));
      ab += std::fabs(p(r, c) - t(r, c));
    }
  }
  CHECK(mse(p, t) == doctest::Approx(sq / 20.0).epsilon(1e-14));
  CHECK(mae(p, t) == doctest::Approx(ab / 20.0).epsilon(1e-14));
}

TEST_CASE("mae squared never exceeds mse") {
  Rng rng(44);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(12));
    const Matrix p = random_matrix(n, kNumFactors, rng, -3, 3);
    const Matrix t = random_matrix(n, kNumFactors, rng, -3, 3);
    const double m1 = mae(p, t);
    CHECK(m1 * m1 <= mse(p, t) + 1e-12);
  }
}

TEST_CASE("grad_mse vanishes where predictions equal targets") {
  Rng rng(5);
  const Matrix w = random_matrix(kNumFactors, kNumItems, rng);
  const Matrix x = random_matrix(6, kNumItems, rng, 0, 1);
  const Matrix y = forward_batch(w, x);
  const Matrix g = grad_mse(w, x, y);
  for (int f = 0; f < kNumFactors; ++f) {
    for (int k = 0; k < kNumItems; ++k) {
      CHECK(g(f, k) == doctest::Approx(0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("grad_mse closed form for a single active input coordinate") {
  Matrix w(kNumFactors, kNumItems);
  w(2, 3) = 0.7;
  Matrix x(1, kNumItems);
  x(0, 3) = 0.5;
  Matrix y(1, kNumFactors);
  y(0, 2) = 0.1;
  // residual = 0.7*0.5 - 0.1 = 0.25; d/dw(2,3) = (2/5) * 0.25 * 0.5 = 0.05
  const Matrix g = grad_mse(w, x, y);
  CHECK(g(2, 3) == doctest::Approx(0.05).epsilon(1e-14));
  for (int f = 0; f < kNumFactors; ++f) {
    for (int k = 0; k < kNumItems; ++k) {
      if (f == 2 && k == 3) continue;
      if (k == 3) {
        // other rows see residual -y only when y is nonzero there; it is 0
        CHECK(g(f, k) == doctest::Approx(0.0).epsilon(1e-14));
      } else {
        CHECK(g(f, k) == 0.0);
      }
    }
  }
}

TEST_CASE("grad_mse matches central finite differences") {
  Rng rng(123);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(6));
    const Matrix w = random_matrix(kNumFactors, kNumItems, rng);
    const Matrix x = random_matrix(n, kNumItems, rng, 0, 1);
    const Matrix y = random_matrix(n, kNumFactors, rng, 0, 1);
    const Matrix g = grad_mse(w, x, y);
    for (int probe = 0; probe < 5; ++probe) {
      const int f = static_cast<int>(rng.below(kNumFactors));
      const int k = static_cast<int>(rng.below(kNumItems));
      const double fd = finite_difference(w, x, y, f, k, 1e-5);
      CHECK(std::fabs(g(f, k) - fd) <=
            1e-6 * std::max(1.0, std::fabs(fd)));
    }
  }
}

TEST_CASE("init_weights determinism, support and centering") {
  Rng a(10), b(10);
  CHECK(init_weights(a) == init_weights(b));

  const double bound = std::sqrt(6.0 / 15.0);
  Rng rng(2);
  double sum = 0.0;
  int count = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const Matrix w = init_weights(rng);
    for (int f = 0; f < kNumFactors; ++f) {
      for (int k = 0; k < kNumItems; ++k) {
        CHECK(w(f, k) >= -bound);
        CHECK(w(f, k) <= bound);
        sum += w(f, k);
        ++count;
      }
    }
  }
  CHECK(count == 10000);
  CHECK(std::fabs(sum / count) < 0.02);
}

TEST_CASE("train validates its contract") {
  Rng rng(3);
  const Matrix x = random_matrix(20, kNumItems, rng, 0.1, 1);
  const Matrix y = random_matrix(20, kNumFactors, rng, 0, 1);
  TrainConfig cfg;
  cfg.seed = 4;

  cfg.epochs = 0;
  CHECK_THROWS_AS(train(x, y, cfg), ValidationError);

  cfg.epochs = 1;
  const ReplicateRun run = train(x, y, cfg);
  CHECK(run.train_mse.size() == 1);
  CHECK(run.val_mse.size() == 1);
  CHECK(run.train_mae.size() == 1);
  CHECK(run.val_mae.size() == 1);

  Matrix tiny(3, kNumItems);
  Matrix tiny_y(3, kNumFactors);
  CHECK_THROWS_AS(train(tiny, tiny_y, cfg), ValidationError);
}

TEST_CASE("train is bitwise deterministic given a seed") {
  Rng rng(21);
  const Matrix x = random_matrix(30, kNumItems, rng, 0.1, 1);
  const Matrix y = random_matrix(30, kNumFactors, rng, 0, 1);
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.seed = 77;
  const ReplicateRun a = train(x, y, cfg);
  const ReplicateRun b = train(x, y, cfg);
  CHECK(a.train_mse == b.train_mse);
  CHECK(a.val_mse == b.val_mse);
  CHECK(a.train_mae == b.train_mae);
  CHECK(a.val_mae == b.val_mae);
  CHECK(a.final_weights == b.final_weights);
}

TEST_CASE("a small gradient step never increases full-batch training MSE") {
  Rng rng(66);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix w = random_matrix(kNumFactors, kNumItems, rng);
    const Matrix x = random_matrix(25, kNumItems, rng, 0.1, 1);
    const Matrix y = random_matrix(25, kNumFactors, rng, 0, 1);
    const double before = mse(forward_batch(w, x), y);
    Matrix stepped = w;
    const Matrix g = grad_mse(w, x, y);
    for (int f = 0; f < kNumFactors; ++f) {
      for (int k = 0; k < kNumItems; ++k) {
        stepped(f, k) -= 1e-3 * g(f, k);
      }
    }
    CHECK(mse(forward_batch(stepped, x), y) <= before);
  }
}

TEST_CASE("train recovers planted linear targets, fails on shuffled ones") {
  Rng rng(91);
  const int n = 200;
  const Matrix planted = random_matrix(kNumFactors, kNumItems, rng, -0.5, 0.5);
  Matrix x(n, kNumItems);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < kNumItems; ++c) {
      x(r, c) = (1 + static_cast<int>(rng.below(7))) / 7.0;
    }
  }
  const Matrix y = forward_batch(planted, x);

  TrainConfig cfg;
  cfg.epochs = 500;
  cfg.seed = 12;
  const ReplicateRun run = train(x, y, cfg);
  CHECK(run.val_mse.back() < 1e-4);

  Rng perm_rng(13);
  const Matrix shuffled = permute_rows(y, perm_rng);
  const ReplicateRun bad = train(x, shuffled, cfg);
  CHECK(bad.val_mse.back() > 10.0 * run.val_mse.back());
}

TEST_CASE("train records weight snapshots at requested epochs") {
  Rng rng(14);
  const Matrix x = random_matrix(20, kNumItems, rng, 0.1, 1);
  const Matrix y = random_matrix(20, kNumFactors, rng, 0, 1);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.seed = 5;
  const std::vector<int> snaps = {1, 5, 10};
  const ReplicateRun run = train(x, y, cfg, nullptr, snaps);
  REQUIRE(run.weight_snapshots.size() == 3);
  CHECK(run.weight_snapshots.at(10) == run.final_weights);
}

TEST_CASE("adaptive-moment and mini-batch modes run and converge") {
  Rng rng(19);
  const Matrix planted = random_matrix(kNumFactors, kNumItems, rng, -0.5, 0.5);
  Matrix x(80, kNumItems);
  for (int r = 0; r < 80; ++r) {
    for (int c = 0; c < kNumItems; ++c) {
      x(r, c) = (1 + static_cast<int>(rng.below(7))) / 7.0;
    }
  }
  const Matrix y = forward_batch(planted, x);

  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.seed = 3;
  cfg.optimizer = Optimizer::kAdaptiveMoment;
  cfg.learning_rate = 0.05;
  CHECK(train(x, y, cfg).val_mse.back() < 1e-2);

  cfg.optimizer = Optimizer::kGradientDescent;
  cfg.learning_rate = 0.5;
  cfg.batch_size = 16;
  const ReplicateRun mb = train(x, y, cfg);
  CHECK(mb.val_mse.back() < 1e-3);
}

TEST_CASE("train reports divergence with the failing epoch") {
  Rng rng(23);
  const Matrix x = random_matrix(20, kNumItems, rng, 0.5, 1);
  const Matrix y = random_matrix(20, kNumFactors, rng, 0, 1);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.learning_rate = 50.0;  // far beyond the stability limit
  cfg.seed = 1;
  CHECK_THROWS_AS(train(x, y, cfg), DivergedError);
}

TEST_CASE("baseline_mse is zero for self-consistent synthetic data") {
  SynthConfig cfg;
  cfg.n_respondents = 50;
  cfg.seed = 7;
  CHECK(baseline_mse(generate(cfg)) == doctest::Approx(0.0).epsilon(1e-18));
}

TEST_CASE("baseline_mse on a two-record toy dataset by hand") {
  Dataset ds;
  RespondentRecord a;
  a.id = "a";
  a.items.fill(4);           // every score 4 -> normalized 4/7
  a.targets.fill(2.8);       // normalized 2.8/7 = 0.4
  RespondentRecord b;
  b.id = "b";
  b.items = {7, 1, 4, 4, 4, 1, 7, 4, 4, 4};  // scores (7,7,4,4,4)
  b.targets = {7, 7, 4, 4, 4};               // identical after normalization
  ds.records = {a, b};
  ds.target_scale_max.fill(7.0);
  ds.declared_maxima = true;
  // Only record a contributes: five residuals of 4/7 - 2/5 = 6/35 over
  // ten entries -> (6/35)^2 / 2.
  const double expected = (6.0 / 35.0) * (6.0 / 35.0) / 2.0;
  CHECK(baseline_mse(ds) == doctest::Approx(expected).epsilon(1e-14));
}
