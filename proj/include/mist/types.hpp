#pragma once

#include <cstdint>
#include <vector>

namespace mist {

using ClassId = int;

// Returned by predictors that have not seen any labelled data yet.
inline constexpr ClassId kUnknownClass = -1;

struct Sample {
  std::vector<double> x;
  ClassId y = 0;
  int task = 0;
};

enum class FeatureKind { Continuous, Categorical };

// SplitMix64 finaliser, used to derive independent child seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace mist
