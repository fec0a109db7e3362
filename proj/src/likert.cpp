#include "likert.hpp"

#include <string>

#include "error.hpp"

namespace tipinet {

int reverse_likert(int value) {
  if (value < kLikertMin || value > kLikertMax) {
    throw ValidationError("Likert value out of range [1, 7]: " +
                          std::to_string(value));
  }
  return kLikertMax + kLikertMin - value;
}

BigFiveScores score_tipi(std::span<const int, kNumItems> items) {
  std::array<double, kNumFactors> s;
  for (int f = 0; f < kNumFactors; ++f) {
    const int direct = items[static_cast<std::size_t>(kDirectItem[f])];
    const int reversed = items[static_cast<std::size_t>(kReversedItem[f])];
    if (direct < kLikertMin || direct > kLikertMax) {
      throw ValidationError("Likert value out of range [1, 7]: " +
                            std::to_string(direct));
    }
    s[static_cast<std::size_t>(f)] =
        0.5 * (direct + reverse_likert(reversed));
  }
  return {s[0], s[1], s[2], s[3], s[4]};
}

}  // namespace tipinet
