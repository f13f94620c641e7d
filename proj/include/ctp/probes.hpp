#pragma once

// Contention micro-benchmarks. Each probe stresses one resource for a fixed
// wall-clock window and reports how much progress its workers made; a lower
// count under the same window means a more contended resource.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string_view>
#include <vector>

namespace ctp {

enum class ProbeKind { Cpu, Mem, Disk };

std::string_view to_string(ProbeKind kind) noexcept;
ProbeKind parse_probe_kind(std::string_view text);

inline constexpr double kProbeGraceSeconds = 0.5;
inline constexpr double kDefaultProfilingWindow = 3.0;

inline constexpr std::size_t kKiB = 1024;
inline constexpr std::size_t kMiB = 1024 * kKiB;
inline constexpr std::size_t kGiB = 1024 * kMiB;

// Stop-flag polling granularity per probe.
inline constexpr std::uint64_t kCpuCheckInterval = std::uint64_t{1} << 16;
inline constexpr std::uint64_t kMemCheckInterval = std::uint64_t{1} << 12;

unsigned logical_cpu_count() noexcept;

/// Location for scratch files (probe and kernel data) under the system
/// temporary directory.
std::filesystem::path scratch_path(std::string_view name);

struct ProbeConfig {
  ProbeKind kind = ProbeKind::Cpu;
  double duration = kDefaultProfilingWindow;
  unsigned workers = 0;  // 0 = kind default
  std::size_t mem_array_bytes = 2 * kGiB;
  std::size_t mem_stride_bytes = 128;
  std::size_t disk_file_bytes = 256 * kMiB;
  std::size_t disk_page_bytes = 4 * kKiB;
  std::filesystem::path disk_path = scratch_path("ctp_probe.dat");

  static ProbeConfig defaults(ProbeKind kind);

  /// Worker count after applying the kind default.
  unsigned effective_workers() const noexcept;
  /// Throws InvalidDuration / InvalidConfig.
  void validate() const;
};

struct ProbeResult {
  ProbeKind kind = ProbeKind::Cpu;
  std::uint64_t count = 0;
  double elapsed = 0.0;
  std::vector<std::uint64_t> per_worker_counts;
};

/// One worker's share of the memory array, walked front to back at a fixed
/// stride and wrapped when the end is reached.
class StridedWalk {
 public:
  StridedWalk(std::size_t begin, std::size_t slots, std::size_t stride) noexcept
      : begin_(begin), end_(begin + slots * stride), stride_(stride), cursor_(begin) {}

  std::size_t next() noexcept {
    const std::size_t at = cursor_;
    cursor_ += stride_;
    if (cursor_ == end_) cursor_ = begin_;
    return at;
  }

 private:
  std::size_t begin_;
  std::size_t end_;
  std::size_t stride_;
  std::size_t cursor_;
};

/// Slot ranges [first, first+count) per worker. Shares differ by at most one
/// slot. Throws UnevenPartition when there are more workers than slots.
struct SlotShare {
  std::size_t first;
  std::size_t count;
};
std::vector<SlotShare> partition_slots(std::size_t slots, unsigned workers);

/// Byte offsets a memory-probe worker visits first; same walk the timed loop
/// uses, for instrumentation.
std::vector<std::size_t> mem_probe_offsets(const ProbeConfig& config, unsigned worker,
                                           std::size_t count);

/// Page-aligned, pre-faulted array shared by repeated memory probe runs.
class MemArena {
 public:
  explicit MemArena(std::size_t bytes);
  ~MemArena();
  MemArena(const MemArena&) = delete;
  MemArena& operator=(const MemArena&) = delete;
  MemArena(MemArena&& other) noexcept;
  MemArena& operator=(MemArena&& other) noexcept;

  std::size_t size() const noexcept { return bytes_; }
  const std::byte* data() const noexcept { return data_; }
  std::byte* data() noexcept { return data_; }

 private:
  std::byte* data_ = nullptr;
  std::size_t bytes_ = 0;
};

/// Probe file opened for cache-bypassing reads. Creates and fills the file
/// with pseudorandom bytes when it is missing or has the wrong size.
class DirectFile {
 public:
  DirectFile(const std::filesystem::path& path, std::size_t file_bytes, std::size_t page_bytes);
  ~DirectFile();
  DirectFile(const DirectFile&) = delete;
  DirectFile& operator=(const DirectFile&) = delete;
  DirectFile(DirectFile&& other) noexcept;
  DirectFile& operator=(DirectFile&& other) noexcept;

  int fd() const noexcept { return fd_; }
  std::size_t pages() const noexcept { return file_bytes_ / page_bytes_; }
  std::size_t page_bytes() const noexcept { return page_bytes_; }
  const std::filesystem::path& path() const noexcept { return path_; }
  /// True when O_DIRECT is set on the open descriptor.
  bool direct_io_enabled() const;
  /// Reads one page into an aligned buffer. Throws DirectIoUnsupported when the
  /// kernel rejects the direct read.
  void read_page(std::size_t page, std::byte* aligned_buffer) const;

 private:
  std::filesystem::path path_;
  std::size_t file_bytes_ = 0;
  std::size_t page_bytes_ = 0;
  int fd_ = -1;
};

/// Page-aligned scratch buffer for direct reads.
class AlignedBuffer {
 public:
  explicit AlignedBuffer(std::size_t bytes, std::size_t alignment = 4096);
  std::byte* data() noexcept { return data_.get(); }
  std::size_t size() const noexcept { return bytes_; }

 private:
  struct Free {
    void operator()(std::byte* p) const noexcept;
  };
  std::unique_ptr<std::byte, Free> data_;
  std::size_t bytes_;
};

ProbeResult run_cpu_probe(const ProbeConfig& config);
ProbeResult run_mem_probe(const ProbeConfig& config);
ProbeResult run_mem_probe(const ProbeConfig& config, MemArena& arena);
ProbeResult run_disk_probe(const ProbeConfig& config);
ProbeResult run_disk_probe(const ProbeConfig& config, const DirectFile& file);
ProbeResult run_probe(const ProbeConfig& config);

}  // namespace ctp
