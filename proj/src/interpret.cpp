#include "interpret.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "error.hpp"

namespace tipinet {

Matrix template_matrix(bool pre_reversed) {
  Matrix t(kNumFactors, kNumItems);
  for (int f = 0; f < kNumFactors; ++f) {
    t(f, kDirectItem[static_cast<std::size_t>(f)]) = 0.5;
    t(f, kReversedItem[static_cast<std::size_t>(f)]) = pre_reversed ? 0.5 : -0.5;
  }
  return t;
}

Matrix average_weights(std::span<const Matrix> weights) {
  if (weights.empty()) {
    throw ValidationError("average_weights: empty list");
  }
  Matrix acc(weights[0].rows(), weights[0].cols());
  for (const Matrix& w : weights) {
    if (!w.same_shape(acc)) {
      throw ValidationError("average_weights: shape mismatch");
    }
    for (int r = 0; r < acc.rows(); ++r) {
      for (int c = 0; c < acc.cols(); ++c) acc(r, c) += w(r, c);
    }
  }
  const double inv = 1.0 / static_cast<double>(weights.size());
  for (int r = 0; r < acc.rows(); ++r) {
    for (int c = 0; c < acc.cols(); ++c) acc(r, c) *= inv;
  }
  return acc;
}

GrayImage render_heatmap(const Matrix& w, int cell_pixels) {
  if (cell_pixels < 1) {
    throw ValidationError("render_heatmap: cell_pixels must be >= 1");
  }
  if (!w.all_finite()) {
    throw ValidationError("render_heatmap: non-finite weight");
  }
  double max_abs = 0.0;
  for (int r = 0; r < w.rows(); ++r) {
    for (int c = 0; c < w.cols(); ++c) {
      max_abs = std::max(max_abs, std::fabs(w(r, c)));
    }
  }

  GrayImage img;
  img.width = w.cols() * cell_pixels;
  img.height = w.rows() * cell_pixels;
  img.pixels.assign(static_cast<std::size_t>(img.width) * img.height, 128);
  if (max_abs == 0.0) return img;

  for (int r = 0; r < w.rows(); ++r) {
    for (int c = 0; c < w.cols(); ++c) {
      const double rel = w(r, c) / max_abs;  // [-1, 1]
      const long v = std::lround(127.5 * (1.0 - rel));
      const auto intensity =
          static_cast<unsigned char>(std::clamp(v, 0L, 255L));
      for (int py = r * cell_pixels; py < (r + 1) * cell_pixels; ++py) {
        for (int px = c * cell_pixels; px < (c + 1) * cell_pixels; ++px) {
          img.pixels[static_cast<std::size_t>(py) * img.width + px] = intensity;
        }
      }
    }
  }
  return img;
}

void write_pgm(const GrayImage& img, const std::filesystem::path& path,
               bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image: " + path.string());
  out << (binary ? "P5" : "P2") << "\n"
      << img.width << " " << img.height << "\n255\n";
  if (binary) {
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
  } else {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        out << static_cast<int>(
                   img.pixels[static_cast<std::size_t>(y) * img.width + x])
            << (x + 1 < img.width ? ' ' : '\n');
      }
    }
  }
  if (!out) throw IoError("failed writing image: " + path.string());
}

AlignmentReport alignment_score(const Matrix& w, const Matrix& tmpl,
                                double threshold) {
  if (w.rows() != kNumFactors || w.cols() != kNumItems ||
      !tmpl.same_shape(w)) {
    throw ValidationError("alignment_score expects 5 x 10 matrices");
  }
  if (!w.all_finite()) {
    throw ValidationError("alignment_score: non-finite weight");
  }
  AlignmentReport report;
  report.threshold = threshold;
  for (int f = 0; f < kNumFactors; ++f) {
    const int a = kDirectItem[static_cast<std::size_t>(f)];
    const int b = kReversedItem[static_cast<std::size_t>(f)];
    double total = 0.0;
    for (int k = 0; k < kNumItems; ++k) total += std::fabs(w(f, k));
    FactorAlignment& fa = report.factors[static_cast<std::size_t>(f)];
    if (total == 0.0) {
      fa.mass_fraction = 0.0;
      fa.sign_correct = false;
      fa.verdict = "degenerate";
      continue;
    }
    fa.mass_fraction = (std::fabs(w(f, a)) + std::fabs(w(f, b))) / total;
    auto sgn = [](double v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); };
    fa.sign_correct =
        sgn(w(f, a)) == sgn(tmpl(f, a)) && sgn(w(f, b)) == sgn(tmpl(f, b));
    fa.verdict = (fa.mass_fraction >= threshold && fa.sign_correct)
                     ? "aligned"
                     : "diffuse";
  }
  return report;
}

}  // namespace tipinet
