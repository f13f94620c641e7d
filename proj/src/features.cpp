#include "ctp/features.hpp"

#include "ctp/error.hpp"

namespace ctp {

Standardizer Standardizer::fit(std::span<const Vec3> inputs) {
  if (inputs.empty()) throw Error(Errc::EmptyInput, "cannot fit a standardizer on zero inputs");
  Standardizer s;
  const double n = static_cast<double>(inputs.size());
  for (std::size_t d = 0; d < 3; ++d) {
    double mean = 0.0;
    for (const auto& x : inputs) mean += x[d];
    mean /= n;
    double var = 0.0;
    for (const auto& x : inputs) var += (x[d] - mean) * (x[d] - mean);
    var /= n;
    s.means[d] = mean;
    const double sd = std::sqrt(var);
    // Relative floor: counters are large integers, so rounding noise alone
    // must not pass for variance.
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      s.stds[d] = 1.0;
      s.degenerate[d] = true;
    } else {
      s.stds[d] = sd;
    }
  }
  return s;
}

}  // namespace ctp
