#pragma once

#include <array>
#include <cstdint>

namespace ctp {

/// Probe counters from one profiling pass (CPU, then memory, then disk).
struct ContentionVector {
  std::uint64_t c_cpu = 0;
  std::uint64_t c_mem = 0;
  std::uint64_t c_disk = 0;
  double window = 0.0;    // seconds each probe ran
  double taken_at = 0.0;  // unix seconds when the pass started

  std::array<double, 3> counters() const noexcept {
    return {static_cast<double>(c_cpu), static_cast<double>(c_mem), static_cast<double>(c_disk)};
  }

  friend bool operator==(const ContentionVector&, const ContentionVector&) = default;
};

/// One training tuple: a profiling pass followed by a timed run of the target.
/// The sample is timestamped at the start of its profiling pass.
struct Sample {
  ContentionVector contention;
  double t_app = 0.0;  // seconds

  double taken_at() const noexcept { return contention.taken_at; }

  friend bool operator==(const Sample&, const Sample&) = default;
};

}  // namespace ctp
