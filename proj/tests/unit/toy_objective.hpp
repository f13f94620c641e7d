#pragma once

// Separable toy objective over NN structures and an exact rank oracle for it,
// computed by counting rather than by enumerating all 35^5 structures.

#include <cstdint>
#include <vector>

#include "ctp/mlp.hpp"

namespace ctp::test {

inline double toy_score(const NNConfig& c) {
  const double dl = c.hidden_layers() - 3;
  double s = dl * dl;
  double spread = 0.0;
  for (int n : c.neurons) spread += (n - 20.0) * (n - 20.0);
  return s + spread / 1000.0;
}

/// For each layer count L, counts[L][S] = number of width lists whose integer
/// spread sum((n-20)^2) equals S.
class ToyRankOracle {
 public:
  ToyRankOracle() {
    std::vector<std::uint64_t> one(kMaxSpread1 + 1, 0);
    for (int n = 1; n <= 35; ++n) one[(n - 20) * (n - 20)] += 1;
    std::vector<std::uint64_t> cur = {1};
    counts_.resize(6);
    for (int layers = 1; layers <= 5; ++layers) {
      std::vector<std::uint64_t> next(cur.size() + kMaxSpread1, 0);
      for (std::size_t a = 0; a < cur.size(); ++a) {
        if (!cur[a]) continue;
        for (std::size_t b = 0; b < one.size(); ++b) next[a + b] += cur[a] * one[b];
      }
      cur = next;
      counts_[layers] = cur;
      for (auto v : cur) total_ += v;
    }
  }

  std::uint64_t total() const { return total_; }

  /// Fraction of the space scoring strictly better than `c`.
  double better_fraction(const NNConfig& c) const {
    return static_cast<double>(better_count(c)) / static_cast<double>(total_);
  }

  /// Structures with at most `max_layers` layers scoring strictly better than `c`.
  std::uint64_t better_count(const NNConfig& c, int max_layers = 5) const {
    const std::int64_t target = key(c.hidden_layers(), spread(c));
    std::uint64_t better = 0;
    for (int layers = 1; layers <= max_layers; ++layers) {
      for (std::size_t s = 0; s < counts_[layers].size(); ++s) {
        if (counts_[layers][s] && key(layers, static_cast<std::int64_t>(s)) < target) better += counts_[layers][s];
      }
    }
    return better;
  }

 private:
  static constexpr std::size_t kMaxSpread1 = 361;  // (1 - 20)^2
  // Score scaled by 1000 is an exact integer.
  static std::int64_t key(int layers, std::int64_t spread) {
    return 1000 * static_cast<std::int64_t>((layers - 3) * (layers - 3)) + spread;
  }
  static std::int64_t spread(const NNConfig& c) {
    std::int64_t s = 0;
    for (int n : c.neurons) s += (n - 20) * (n - 20);
    return s;
  }

  std::vector<std::vector<std::uint64_t>> counts_;
  std::uint64_t total_ = 0;
};

}  // namespace ctp::test
