#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ctp/contention.hpp"
#include "ctp/dataset.hpp"
#include "ctp/probes.hpp"

namespace ctp {

/// Program + argument list; the environment is inherited unchanged.
struct TargetCommand {
  std::string program;
  std::vector<std::string> args;
};

/// Spawns `target`, waits for it, returns wall seconds from spawn to exit.
/// Throws TargetLaunchFailure or TargetNonZeroExit.
double time_command(const TargetCommand& target);

struct ProfilerOptions {
  unsigned cpu_workers = 0;  // 0 = probe defaults
  unsigned mem_workers = 0;
  unsigned disk_workers = 0;
  std::size_t mem_array_bytes = 2 * kGiB;
  std::size_t mem_stride_bytes = 128;
  std::size_t disk_file_bytes = 256 * kMiB;
  std::size_t disk_page_bytes = 4 * kKiB;
  std::filesystem::path disk_path = scratch_path("ctp_probe.dat");
  double inter_iteration_pause = 0.0;
};

/// Runs the three probes back to back. Owns the memory arena and the probe
/// file so repeated passes do not pay allocation or file creation again.
/// Not thread-safe; one profiler per process.
class Profiler {
 public:
  explicit Profiler(ProfilerOptions options = {});

  ContentionVector profile(double window);

  Sample collect_iteration(const TargetCommand& target, double window);

  /// Appends each successful sample through `sink`. Failed target runs are
  /// reported through `on_failure` (if set) and skipped. Returns the number
  /// of samples stored.
  std::size_t collect_campaign(const TargetCommand& target, double window, std::size_t iterations,
                               const std::function<void(const Sample&)>& sink,
                               const std::function<void(const std::string&)>& on_failure = {});
  std::size_t collect_campaign(const TargetCommand& target, double window, std::size_t iterations,
                               DatasetWriter& store,
                               const std::function<void(const std::string&)>& on_failure = {});

  /// Order of probe kinds from the most recent profile() call.
  const std::vector<ProbeKind>& last_probe_order() const noexcept { return last_order_; }
  const ProfilerOptions& options() const noexcept { return options_; }

 private:
  ProbeConfig config_for(ProbeKind kind, double window) const;
  MemArena& arena();
  const DirectFile& file();

  ProfilerOptions options_;
  std::optional<MemArena> arena_;
  std::optional<DirectFile> file_;
  std::vector<ProbeKind> last_order_;
};

double unix_now() noexcept;

}  // namespace ctp
