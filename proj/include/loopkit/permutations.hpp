#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace loopkit {

enum class Regime {
  cyclic_classes,       // permutations on the circle, (k-1)! of them
  cyclic_translations,  // the k shifts j -> j + i mod k
  full,                 // all k! permutations
};

std::string_view to_string(Regime regime);
Regime regime_from_string(std::string_view name);

// Zero-based images: perm[j] is the index placed at position j.
using Permutation = std::vector<int>;

inline constexpr int kMaxPermutationOrder = 8;

/// Permutations of {0..k-1} in the given regime, in lexicographic order.
/// Cyclic classes are represented by the member with perm[0] = 0. Throws
/// TooManyPermutations for k > 8 and InvalidArgument for k < 1.
std::vector<Permutation> enumerate_regime(Regime regime, int k);

/// Sum of terms in fixed pairwise order, so reductions are bit-stable.
double pairwise_sum(const std::vector<double>& terms);

}  // namespace loopkit
