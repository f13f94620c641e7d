#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

#include "ctp/dataset.hpp"
#include "ctp/features.hpp"
#include "ctp/probes.hpp"

namespace ctp {

// ------------------------------------------------------- synthetic datasets

enum class OracleForm {
  Polynomial,   // t = sum_k coefficients[k] * poly2_expand(z)[k]
  Exponential,  // t = exp_scale * exp(exp_weights . z)
};

/// Ground truth over counters standardized with the moments of the uniform
/// draw ranges: z_d = (c_d - (lo+hi)/2) / ((hi-lo)/sqrt(12)).
struct SynthSpec {
  OracleForm form = OracleForm::Polynomial;
  std::array<double, kPolyFeatures> coefficients{};
  double exp_scale = 1.0;
  Vec3 exp_weights{};
  double noise_sigma = 0.0;  // relative
  std::size_t n = 1000;
  std::array<std::pair<double, double>, 3> counter_ranges{};
  std::uint64_t seed = 1;
  double window = kDefaultProfilingWindow;
  double start_time = 1.7e9;  // taken_at of the first sample
  double spacing = 12.0;      // seconds between samples

  static SynthSpec polynomial_default();
  static SynthSpec exponential_default();

  /// Throws InvalidConfig.
  void validate() const;
  Standardizer truth_standardizer() const noexcept;
  double truth(const Vec3& counters) const noexcept;
};

/// Deterministic per seed. Throws NonPositiveTarget when the ground truth
/// keeps yielding t <= 0 (more than 100 * n redraws).
Dataset gen_synth_dataset(const SynthSpec& spec);

// ----------------------------------------------------------- load injectors

enum class LoadKind { CpuHog, MemStream, DiskRead };

std::string_view to_string(LoadKind kind) noexcept;
LoadKind parse_load_kind(std::string_view text);

struct LoadSpec {
  LoadKind kind = LoadKind::CpuHog;
  unsigned intensity = 1;  // workers
  double duration = 0.0;   // seconds; 0 = until stopped
  std::size_t mem_bytes = kGiB;  // per MemStream worker
  std::size_t mem_stride_bytes = 64;
  std::filesystem::path disk_dir = scratch_path("");
  std::size_t disk_file_bytes = 256 * kMiB;
  std::size_t disk_page_bytes = 4 * kKiB;
};

/// Background workers owned by the handle. Destruction stops them.
class LoadHandle {
 public:
  LoadHandle() = default;
  ~LoadHandle();
  LoadHandle(LoadHandle&&) noexcept;
  LoadHandle& operator=(LoadHandle&&) noexcept;
  LoadHandle(const LoadHandle&) = delete;
  LoadHandle& operator=(const LoadHandle&) = delete;

  bool running() const noexcept;
  /// Joins the workers and removes private files. Safe to call repeatedly.
  void stop() noexcept;
  /// Blocks until a finite-duration load has run out.
  void wait() noexcept;

 private:
  friend LoadHandle start_load(const LoadSpec& spec);
  struct State;
  std::unique_ptr<State> state_;
};

/// Throws SpawnFailure, AllocationFailure, FileCreationFailure, InvalidConfig.
LoadHandle start_load(const LoadSpec& spec);
inline void stop_load(LoadHandle& handle) noexcept { handle.stop(); }

/// Threads currently alive in this process (from /proc/self/task).
std::size_t live_thread_count();

// ----------------------------------------------------------- target kernel

struct KernelConfig {
  std::size_t array_bytes = 512 * kMiB;
  std::size_t stride_bytes = 128;
  std::size_t sweep_bytes_per_unit = 64 * kMiB;
  std::size_t arith_iterations_per_unit = 8'000'000;
  std::size_t io_pages_per_unit = 16;
  std::size_t io_page_bytes = 4 * kKiB;
  std::size_t io_file_bytes = 16 * kMiB;
  std::filesystem::path io_path = scratch_path("ctp_kernel.dat");
};

/// Contention-sensitive stand-in application: each work unit does a fixed
/// amount of arithmetic, a strided sweep over part of a large array and a
/// few direct-I/O page reads.
class TargetKernel {
 public:
  explicit TargetKernel(KernelConfig config = {});
  /// Seconds spent on the work itself (setup excluded). Throws InvalidConfig
  /// for zero units.
  double run(std::size_t work_units);
  const KernelConfig& config() const noexcept { return config_; }

 private:
  KernelConfig config_;
  MemArena arena_;
  DirectFile file_;
  AlignedBuffer buffer_;
  std::size_t sweep_cursor_ = 0;
  std::size_t page_cursor_ = 0;
};

double run_target_kernel(std::size_t work_units, const KernelConfig& config = {});

}  // namespace ctp
