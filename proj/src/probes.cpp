#include "ctp/probes.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <latch>
#include <numeric>
#include <random>
#include <string>
#include <system_error>
#include <thread>

#include "ctp/error.hpp"

namespace ctp {

namespace {

using Clock = std::chrono::steady_clock;

std::string errno_text() { return std::strerror(errno); }

// Runs `body(worker, stop)` on `workers` threads for `duration` seconds of
// wall-clock time. Each worker returns its own count; nothing is shared on
// the hot path except the stop flag.
template <typename Body>
ProbeResult run_timed(ProbeKind kind, unsigned workers, double duration, Body body) {
  std::atomic<bool> stop{false};
  std::latch gate(1);
  std::vector<std::uint64_t> counts(workers, 0);
  std::vector<std::exception_ptr> failures(workers);
  std::vector<std::jthread> threads;
  threads.reserve(workers);
  try {
    for (unsigned w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        gate.wait();
        try {
          counts[w] = body(w, stop);
        } catch (...) {
          failures[w] = std::current_exception();
          stop.store(true, std::memory_order_relaxed);
        }
      });
    }
  } catch (const std::system_error& e) {
    stop.store(true);
    gate.count_down();
    threads.clear();
    throw Error(Errc::WorkerSpawnFailure, e.what());
  }

  const auto start = Clock::now();
  gate.count_down();
  std::this_thread::sleep_until(start + std::chrono::duration<double>(duration));
  stop.store(true, std::memory_order_relaxed);
  threads.clear();  // joins
  const auto finish = Clock::now();

  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  ProbeResult result;
  result.kind = kind;
  result.elapsed = std::chrono::duration<double>(finish - start).count();
  result.count = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  result.per_worker_counts = std::move(counts);
  return result;
}

void check_kind(const ProbeConfig& config, ProbeKind expected) {
  if (config.kind != expected) {
    throw Error(Errc::InvalidConfig, "probe kind mismatch: got " +
                                         std::string(to_string(config.kind)) + ", expected " +
                                         std::string(to_string(expected)));
  }
}

}  // namespace

std::string_view to_string(ProbeKind kind) noexcept {
  switch (kind) {
    case ProbeKind::Cpu: return "cpu";
    case ProbeKind::Mem: return "mem";
    case ProbeKind::Disk: return "disk";
  }
  return "?";
}

ProbeKind parse_probe_kind(std::string_view text) {
  if (text == "cpu") return ProbeKind::Cpu;
  if (text == "mem") return ProbeKind::Mem;
  if (text == "disk") return ProbeKind::Disk;
  throw Error(Errc::InvalidConfig, "unknown probe kind '" + std::string(text) + "'");
}

unsigned logical_cpu_count() noexcept {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

std::filesystem::path scratch_path(std::string_view name) {
  std::error_code ec;
  auto dir = std::filesystem::temp_directory_path(ec);
  if (ec) dir = ".";
  return dir / name;
}

ProbeConfig ProbeConfig::defaults(ProbeKind kind) {
  ProbeConfig config;
  config.kind = kind;
  return config;
}

unsigned ProbeConfig::effective_workers() const noexcept {
  if (workers != 0) return workers;
  return kind == ProbeKind::Disk ? 4u : logical_cpu_count();
}

void ProbeConfig::validate() const {
  if (!(duration > 0.0)) {
    throw Error(Errc::InvalidDuration, "probe duration must be > 0, got " + std::to_string(duration));
  }
  switch (kind) {
    case ProbeKind::Cpu:
      break;
    case ProbeKind::Mem:
      if (mem_stride_bytes < 64) {
        throw Error(Errc::InvalidConfig, "memory stride must be at least one cache line (64 B)");
      }
      if (mem_array_bytes == 0 || mem_array_bytes % mem_stride_bytes != 0) {
        throw Error(Errc::InvalidConfig, "memory array size must be a positive multiple of the stride");
      }
      break;
    case ProbeKind::Disk:
      if (disk_page_bytes == 0 || disk_page_bytes % 512 != 0) {
        throw Error(Errc::InvalidConfig, "disk page size must be a positive multiple of 512 B");
      }
      if (disk_file_bytes == 0 || disk_file_bytes % disk_page_bytes != 0) {
        throw Error(Errc::InvalidConfig, "disk file size must be a positive multiple of the page size");
      }
      break;
  }
}

std::vector<SlotShare> partition_slots(std::size_t slots, unsigned workers) {
  if (workers == 0) throw Error(Errc::InvalidConfig, "at least one worker is required");
  if (workers > slots) {
    throw Error(Errc::UnevenPartition, std::to_string(workers) + " workers cannot share " +
                                           std::to_string(slots) + " slots");
  }
  std::vector<SlotShare> shares;
  shares.reserve(workers);
  const std::size_t base = slots / workers;
  const std::size_t extra = slots % workers;
  std::size_t first = 0;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t count = base + (w < extra ? 1 : 0);
    shares.push_back({first, count});
    first += count;
  }
  return shares;
}

std::vector<std::size_t> mem_probe_offsets(const ProbeConfig& config, unsigned worker,
                                           std::size_t count) {
  config.validate();
  const auto shares =
      partition_slots(config.mem_array_bytes / config.mem_stride_bytes, config.effective_workers());
  const auto& share = shares.at(worker);
  StridedWalk walk(share.first * config.mem_stride_bytes, share.count, config.mem_stride_bytes);
  std::vector<std::size_t> offsets(count);
  for (auto& o : offsets) o = walk.next();
  return offsets;
}

// ---------------------------------------------------------------- MemArena

MemArena::MemArena(std::size_t bytes) : bytes_(bytes) {
  void* p = nullptr;
  if (bytes == 0 || ::posix_memalign(&p, 4096, bytes) != 0) {
    throw Error(Errc::AllocationFailure, "cannot allocate " + std::to_string(bytes) + " bytes");
  }
  data_ = static_cast<std::byte*>(p);
  // Fault every page in before anything is timed.
  std::memset(data_, 0x5a, bytes_);
}

MemArena::~MemArena() { std::free(data_); }

MemArena::MemArena(MemArena&& other) noexcept
    : data_(std::exchange(other.data_, nullptr)), bytes_(std::exchange(other.bytes_, 0)) {}

MemArena& MemArena::operator=(MemArena&& other) noexcept {
  if (this != &other) {
    std::free(data_);
    data_ = std::exchange(other.data_, nullptr);
    bytes_ = std::exchange(other.bytes_, 0);
  }
  return *this;
}

// ----------------------------------------------------------- AlignedBuffer

void AlignedBuffer::Free::operator()(std::byte* p) const noexcept { std::free(p); }

AlignedBuffer::AlignedBuffer(std::size_t bytes, std::size_t alignment) : bytes_(bytes) {
  void* p = nullptr;
  if (::posix_memalign(&p, alignment, bytes) != 0) {
    throw Error(Errc::AllocationFailure, "cannot allocate aligned buffer of " + std::to_string(bytes));
  }
  std::memset(p, 0, bytes);
  data_.reset(static_cast<std::byte*>(p));
}

// -------------------------------------------------------------- DirectFile

namespace {

void create_probe_file(const std::filesystem::path& path, std::size_t file_bytes) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) {
    throw Error(Errc::FileCreationFailure, path.string() + ": " + errno_text());
  }
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  std::vector<std::uint64_t> chunk(kMiB / sizeof(std::uint64_t));
  std::size_t remaining = file_bytes;
  while (remaining > 0) {
    for (auto& word : chunk) word = rng();
    const std::size_t n = std::min(remaining, chunk.size() * sizeof(std::uint64_t));
    const auto* bytes = reinterpret_cast<const char*>(chunk.data());
    std::size_t written = 0;
    while (written < n) {
      const ssize_t w = ::write(fd, bytes + written, n - written);
      if (w < 0) {
        if (errno == EINTR) continue;
        const std::string msg = errno_text();
        ::close(fd);
        throw Error(Errc::FileCreationFailure, path.string() + ": " + msg);
      }
      written += static_cast<std::size_t>(w);
    }
    remaining -= n;
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0) {
    throw Error(Errc::FileCreationFailure, path.string() + ": " + errno_text());
  }
}

}  // namespace

DirectFile::DirectFile(const std::filesystem::path& path, std::size_t file_bytes,
                       std::size_t page_bytes)
    : path_(path), file_bytes_(file_bytes), page_bytes_(page_bytes) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec || size != file_bytes) create_probe_file(path, file_bytes);

  fd_ = ::open(path.c_str(), O_RDONLY | O_DIRECT | O_CLOEXEC);
  if (fd_ < 0) {
    if (errno == EINVAL) {
      throw Error(Errc::DirectIoUnsupported,
                  path.string() + ": filesystem does not support O_DIRECT");
    }
    throw Error(Errc::FileCreationFailure, path.string() + ": " + errno_text());
  }
  // Probe one read up front so an unsupported filesystem fails here, loudly.
  AlignedBuffer buffer(page_bytes_);
  read_page(0, buffer.data());
}

DirectFile::~DirectFile() {
  if (fd_ >= 0) ::close(fd_);
}

DirectFile::DirectFile(DirectFile&& other) noexcept
    : path_(std::move(other.path_)),
      file_bytes_(other.file_bytes_),
      page_bytes_(other.page_bytes_),
      fd_(std::exchange(other.fd_, -1)) {}

DirectFile& DirectFile::operator=(DirectFile&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    path_ = std::move(other.path_);
    file_bytes_ = other.file_bytes_;
    page_bytes_ = other.page_bytes_;
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

bool DirectFile::direct_io_enabled() const {
  const int flags = ::fcntl(fd_, F_GETFL);
  return flags >= 0 && (flags & O_DIRECT) != 0;
}

void DirectFile::read_page(std::size_t page, std::byte* aligned_buffer) const {
  const auto offset = static_cast<off_t>(page * page_bytes_);
  std::size_t done = 0;
  while (done < page_bytes_) {
    const ssize_t n = ::pread(fd_, aligned_buffer + done, page_bytes_ - done,
                              offset + static_cast<off_t>(done));
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EINVAL) {
        throw Error(Errc::DirectIoUnsupported, path_.string() + ": direct read rejected");
      }
      throw Error(Errc::IoFailure, path_.string() + ": " + errno_text());
    }
    if (n == 0) throw Error(Errc::IoFailure, path_.string() + ": unexpected end of file");
    done += static_cast<std::size_t>(n);
  }
}

// ------------------------------------------------------------------ probes

ProbeResult run_cpu_probe(const ProbeConfig& config) {
  check_kind(config, ProbeKind::Cpu);
  config.validate();
  return run_timed(ProbeKind::Cpu, config.effective_workers(), config.duration,
                   [](unsigned, const std::atomic<bool>& stop) {
                     std::uint64_t counter = 0;
                     while (!stop.load(std::memory_order_relaxed)) {
                       for (std::uint64_t i = 0; i < kCpuCheckInterval; ++i) {
                         ++counter;
                         // Keeps the counter in a register and each increment real.
                         asm volatile("" : "+r"(counter));
                       }
                     }
                     return counter;
                   });
}

ProbeResult run_mem_probe(const ProbeConfig& config, MemArena& arena) {
  check_kind(config, ProbeKind::Mem);
  config.validate();
  if (arena.size() < config.mem_array_bytes) {
    throw Error(Errc::InvalidConfig, "memory arena smaller than the configured array");
  }
  const std::size_t stride = config.mem_stride_bytes;
  const auto shares = partition_slots(config.mem_array_bytes / stride, config.effective_workers());
  const std::byte* base = arena.data();
  return run_timed(
      ProbeKind::Mem, config.effective_workers(), config.duration,
      [&](unsigned w, const std::atomic<bool>& stop) {
        StridedWalk walk(shares[w].first * stride, shares[w].count, stride);
        std::uint64_t accesses = 0;
        std::uint64_t sink = 0;
        while (!stop.load(std::memory_order_relaxed)) {
          for (std::uint64_t i = 0; i < kMemCheckInterval; ++i) {
            sink += *reinterpret_cast<const volatile std::uint64_t*>(base + walk.next());
            ++accesses;
          }
        }
        asm volatile("" : : "r"(sink));
        return accesses;
      });
}

ProbeResult run_mem_probe(const ProbeConfig& config) {
  check_kind(config, ProbeKind::Mem);
  config.validate();
  MemArena arena(config.mem_array_bytes);
  return run_mem_probe(config, arena);
}

ProbeResult run_disk_probe(const ProbeConfig& config, const DirectFile& file) {
  check_kind(config, ProbeKind::Disk);
  config.validate();
  const unsigned workers = config.effective_workers();
  const std::size_t pages = file.pages();
  std::vector<AlignedBuffer> buffers;
  buffers.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) buffers.emplace_back(file.page_bytes());
  return run_timed(ProbeKind::Disk, workers, config.duration,
                   [&](unsigned w, const std::atomic<bool>& stop) {
                     // Workers start at evenly spaced pages and wrap around the file.
                     std::size_t page = (w * pages) / workers;
                     std::uint64_t reads = 0;
                     while (!stop.load(std::memory_order_relaxed)) {
                       file.read_page(page, buffers[w].data());
                       ++reads;
                       if (++page == pages) page = 0;
                     }
                     return reads;
                   });
}

ProbeResult run_disk_probe(const ProbeConfig& config) {
  check_kind(config, ProbeKind::Disk);
  config.validate();
  DirectFile file(config.disk_path, config.disk_file_bytes, config.disk_page_bytes);
  return run_disk_probe(config, file);
}

ProbeResult run_probe(const ProbeConfig& config) {
  switch (config.kind) {
    case ProbeKind::Cpu: return run_cpu_probe(config);
    case ProbeKind::Mem: return run_mem_probe(config);
    case ProbeKind::Disk: return run_disk_probe(config);
  }
  throw Error(Errc::InvalidConfig, "unknown probe kind");
}

}  // namespace ctp
