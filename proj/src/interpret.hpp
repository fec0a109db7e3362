#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>

#include "likert.hpp"
#include "matrix.hpp"

namespace tipinet {

// The sparse weight pattern implied by the scale formulas: +0.5 on each
// factor's direct item and -0.5 on its reverse-keyed item. When the inputs
// were reverse-coded before training, both entries become +0.5.
Matrix template_matrix(bool pre_reversed = false);

// Elementwise mean of final weight matrices.
Matrix average_weights(std::span<const Matrix> weights);

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> pixels;  // row-major, 0 = black
};

// 5 x 10 weight grid as grayscale cells: +max|w| -> black, -max|w| -> white,
// 0 -> mid-gray. An all-zero matrix renders uniform mid-gray.
GrayImage render_heatmap(const Matrix& w, int cell_pixels = 32);

void write_pgm(const GrayImage& img, const std::filesystem::path& path,
               bool binary = true);

struct FactorAlignment {
  double mass_fraction = 0.0;  // L1 share on the two template items
  bool sign_correct = false;
  std::string verdict;  // "aligned", "diffuse" or "degenerate"
};

struct AlignmentReport {
  std::array<FactorAlignment, kNumFactors> factors;
  double threshold = 0.5;
};

AlignmentReport alignment_score(const Matrix& w, const Matrix& tmpl,
                                double threshold = 0.5);

}  // namespace tipinet
