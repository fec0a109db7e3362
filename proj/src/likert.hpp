#pragma once

#include <array>
#include <span>

namespace tipinet {

inline constexpr int kNumItems = 10;
inline constexpr int kNumFactors = 5;
inline constexpr int kLikertMin = 1;
inline constexpr int kLikertMax = 7;

inline constexpr std::array<const char*, kNumFactors> kFactorNames = {
    "E", "A", "C", "ES", "O"};

// Zero-based item index carrying each factor directly / reverse-keyed.
// E: items 1/6, A: 7/2, C: 3/8, ES: 9/4, O: 5/10 (one-based).
inline constexpr std::array<int, kNumFactors> kDirectItem = {0, 6, 2, 8, 4};
inline constexpr std::array<int, kNumFactors> kReversedItem = {5, 1, 7, 3, 9};

struct BigFiveScores {
  double e, a, c, es, o;

  std::array<double, kNumFactors> as_array() const { return {e, a, c, es, o}; }
};

// 7 -> 1, 6 -> 2, ... Throws ValidationError outside [1, 7].
int reverse_likert(int value);

// Scale scores from the ten item answers, each the mean of a direct and a
// reverse-keyed item.
BigFiveScores score_tipi(std::span<const int, kNumItems> items);

}  // namespace tipinet
