#pragma once

#include <cstdint>

#include "dataset.hpp"
#include "matrix.hpp"

namespace tipinet {

// Synthetic questionnaire generator with planted linear structure; the
// oracle the rest of the pipeline is validated against.
struct SynthConfig {
  int n_respondents = 457;
  double noise_sd = 0.0;  // on the normalized target scale
  Matrix planted_map;     // 5 x 10; empty = template_matrix()
  std::uint64_t seed = 0;
};

// Items drawn uniformly from 1..7; targets are the planted map applied to
// the raw items, affinely rescaled per factor into [1, 7], plus optional
// Gaussian noise, clipped to the scale bounds. target_scale_max is 7.
Dataset generate(const SynthConfig& config);

// Canonical column names for synthetic files (TIPI_1..TIPI_10, PFQ_*).
Schema synth_schema();

}  // namespace tipinet
