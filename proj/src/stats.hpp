#pragma once

#include <span>
#include <vector>

namespace tipinet {

// Right-continuous empirical CDF; ties counted with multiplicity.
class Ecdf {
 public:
  explicit Ecdf(std::span<const double> sample);

  // F(x) = #{s <= x} / n.
  double operator()(double x) const;

  const std::vector<double>& sorted() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

struct KsResult {
  double d;        // sup |F_a - F_b|
  double p_value;  // asymptotic, clamped into (0, 1]
  int n;
  int m;
};

// Survival function of the Kolmogorov distribution,
// Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_sf(double lambda);

// Two-sample Kolmogorov-Smirnov test. The p-value uses the asymptotic
// Kolmogorov distribution with the small-sample correction
// lambda = (sqrt(ne) + 0.12 + 0.11/sqrt(ne)) * d, ne = n m / (n + m).
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// ln(p) with the underflow floor applied so trajectories stay finite.
double safe_log_p(double p);

inline constexpr double kLogPFloor = 1e-300;

}  // namespace tipinet
