#include "loopkit/permutations.hpp"

#include <algorithm>
#include <numeric>

#include "loopkit/errors.hpp"

namespace loopkit {

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::cyclic_classes: return "cyclic_classes";
    case Regime::cyclic_translations: return "cyclic_translations";
    case Regime::full: return "full";
  }
  return "unknown";
}

Regime regime_from_string(std::string_view name) {
  if (name == "cyclic_classes") return Regime::cyclic_classes;
  if (name == "cyclic_translations") return Regime::cyclic_translations;
  if (name == "full") return Regime::full;
  throw Error(ErrorCode::MalformedInput, "unknown regime '" + std::string(name) + "'");
}

std::vector<Permutation> enumerate_regime(Regime regime, int k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "permutation order must be >= 1");
  if (k > kMaxPermutationOrder) {
    throw Error(ErrorCode::TooManyPermutations,
                "k = " + std::to_string(k) + " exceeds the explicit enumeration limit of 8");
  }
  Permutation base(static_cast<std::size_t>(k));
  std::iota(base.begin(), base.end(), 0);

  std::vector<Permutation> out;
  switch (regime) {
    case Regime::full:
      do {
        out.push_back(base);
      } while (std::next_permutation(base.begin(), base.end()));
      break;
    case Regime::cyclic_classes:
      do {
        out.push_back(base);
      } while (std::next_permutation(base.begin() + 1, base.end()));
      break;
    case Regime::cyclic_translations:
      for (int shift = 0; shift < k; ++shift) {
        Permutation p(static_cast<std::size_t>(k));
        for (int j = 0; j < k; ++j) p[static_cast<std::size_t>(j)] = (j + shift) % k;
        out.push_back(std::move(p));
      }
      break;
  }
  return out;
}

double pairwise_sum(const std::vector<double>& terms) {
  std::vector<double> level = terms;
  if (level.empty()) return 0.0;
  while (level.size() > 1) {
    std::vector<double> next((level.size() + 1) / 2);
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] = 2 * i + 1 < level.size() ? level[2 * i] + level[2 * i + 1] : level[2 * i];
    }
    level.swap(next);
  }
  return level.front();
}

}  // namespace loopkit
