#include "stats.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace tipinet {

Ecdf::Ecdf(std::span<const double> sample)
    : sorted_(sample.begin(), sample.end()) {
  if (sorted_.empty()) throw ValidationError("empty sample for ECDF");
  for (double v : sorted_) {
    if (!std::isfinite(v)) throw ValidationError("non-finite value in sample");
  }
  std::sort(sorted_.begin(), sorted_.end());
}

double Ecdf::operator()(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) /
         static_cast<double>(sorted_.size());
}

double kolmogorov_sf(double lambda) {
  // Q(lambda) > 1 - 1e-12 already at lambda = 0.2.
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    if (term < 1e-10) break;
    sum += sign * term;
    sign = -sign;
  }
  const double p = 2.0 * sum;
  return std::min(1.0, std::max(p, 0.0));
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  const Ecdf fa(a), fb(b);
  const auto& sa = fa.sorted();
  const auto& sb = fb.sorted();
  const int n = static_cast<int>(sa.size());
  const int m = static_cast<int>(sb.size());

  // Sweep the pooled sorted values; at each distinct value advance both
  // counters past every tie before comparing the step heights.
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < sa.size() || j < sb.size()) {
    double x;
    if (j >= sb.size() || (i < sa.size() && sa[i] <= sb[j])) {
      x = sa[i];
    } else {
      x = sb[j];
    }
    while (i < sa.size() && sa[i] <= x) ++i;
    while (j < sb.size() && sb[j] <= x) ++j;
    const double diff = std::fabs(static_cast<double>(i) / n -
                                  static_cast<double>(j) / m);
    d = std::max(d, diff);
  }

  const double ne = static_cast<double>(n) * m / (n + m);
  const double sqrt_ne = std::sqrt(ne);
  const double lambda = (sqrt_ne + 0.12 + 0.11 / sqrt_ne) * d;
  double p = kolmogorov_sf(lambda);
  p = std::min(1.0, std::max(p, kLogPFloor));
  return {d, p, n, m};
}

double safe_log_p(double p) { return std::log(std::max(p, kLogPFloor)); }

}  // namespace tipinet
