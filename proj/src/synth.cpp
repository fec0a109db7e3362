#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"
#include "interpret.hpp"
#include "rng.hpp"

namespace tipinet {

Schema synth_schema() {
  Schema s;
  for (int i = 0; i < kNumItems; ++i) {
    s.item_columns[static_cast<std::size_t>(i)] =
        "TIPI_" + std::to_string(i + 1);
  }
  for (int f = 0; f < kNumFactors; ++f) {
    s.target_columns[static_cast<std::size_t>(f)] =
        std::string("PFQ_") + kFactorNames[f];
  }
  std::array<double, kNumFactors> maxima;
  maxima.fill(kLikertMax);
  s.scale_max = maxima;
  s.id_column = "id";
  return s;
}

Dataset generate(const SynthConfig& config) {
  if (config.n_respondents < 5) {
    throw ValidationError("synth: need at least 5 respondents");
  }
  if (config.noise_sd < 0) {
    throw ValidationError("synth: noise_sd must be nonnegative");
  }
  const Matrix map =
      config.planted_map.size() == 0 ? template_matrix() : config.planted_map;
  if (map.rows() != kNumFactors || map.cols() != kNumItems) {
    throw ValidationError("synth: planted map must be 5 x 10");
  }

  // Per-factor achievable range of map * items over items in [1, 7].
  std::array<double, kNumFactors> lo{}, hi{};
  for (int f = 0; f < kNumFactors; ++f) {
    for (int k = 0; k < kNumItems; ++k) {
      const double w = map(f, k);
      lo[static_cast<std::size_t>(f)] += w > 0 ? w * kLikertMin : w * kLikertMax;
      hi[static_cast<std::size_t>(f)] += w > 0 ? w * kLikertMax : w * kLikertMin;
    }
  }

  Rng rng(config.seed);
  // Separate stream so the item draws do not depend on noise_sd.
  Rng noise_rng(Rng::derive(config.seed, 0x6e015e, 1));
  Dataset ds;
  ds.item_scale_max = kLikertMax;
  ds.target_scale_max.fill(kLikertMax);
  ds.declared_maxima = true;
  ds.records.reserve(static_cast<std::size_t>(config.n_respondents));
  for (int r = 0; r < config.n_respondents; ++r) {
    RespondentRecord rec;
    rec.id = "r" + std::to_string(r + 1);
    for (int i = 0; i < kNumItems; ++i) {
      rec.items[static_cast<std::size_t>(i)] =
          kLikertMin + static_cast<int>(rng.below(kLikertMax));
    }
    for (int f = 0; f < kNumFactors; ++f) {
      double z = 0.0;
      for (int k = 0; k < kNumItems; ++k) {
        z += map(f, k) * rec.items[static_cast<std::size_t>(k)];
      }
      const double span = hi[static_cast<std::size_t>(f)] -
                          lo[static_cast<std::size_t>(f)];
      double t = span > 0
                     ? kLikertMin + (z - lo[static_cast<std::size_t>(f)]) *
                                        (kLikertMax - kLikertMin) / span
                     : 0.5 * (kLikertMin + kLikertMax);
      if (config.noise_sd > 0) {
        t += noise_rng.gaussian() * config.noise_sd * kLikertMax;
      }
      rec.targets[static_cast<std::size_t>(f)] =
          std::clamp(t, static_cast<double>(kLikertMin),
                     static_cast<double>(kLikertMax));
    }
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

}  // namespace tipinet
