#include "ctp/synthlab.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstring>
#include <random>
#include <string>
#include <system_error>

#include "ctp/error.hpp"

namespace ctp {

// ------------------------------------------------------- synthetic datasets

SynthSpec SynthSpec::polynomial_default() {
  SynthSpec s;
  s.form = OracleForm::Polynomial;
  // [1, cpu, mem, disk, cpu^2, cpu*mem, cpu*disk, mem^2, mem*disk, disk^2]
  s.coefficients = {200.0, -40.0, -30.0, -10.0, 6.0, 4.0, 1.0, 5.0, 2.0, 1.5};
  s.counter_ranges = {{{2e9, 8e9}, {1e8, 4e8}, {2e4, 8e4}}};
  s.noise_sigma = 0.01;
  s.n = 1000;
  return s;
}

SynthSpec SynthSpec::exponential_default() {
  SynthSpec s;
  s.form = OracleForm::Exponential;
  s.exp_scale = 120.0;
  s.exp_weights = {-0.5, -0.35, -0.2};
  s.counter_ranges = {{{2e9, 8e9}, {1e8, 4e8}, {2e4, 8e4}}};
  s.noise_sigma = 0.01;
  s.n = 1000;
  return s;
}

void SynthSpec::validate() const {
  if (n < 1) throw Error(Errc::InvalidConfig, "synthetic sample count must be >= 1");
  if (!(noise_sigma >= 0.0)) throw Error(Errc::InvalidConfig, "noise sigma must be >= 0");
  if (!(window > 0.0)) throw Error(Errc::InvalidConfig, "window must be > 0");
  for (const auto& [lo, hi] : counter_ranges) {
    if (!(lo >= 0.0) || !(hi > lo)) throw Error(Errc::InvalidConfig, "counter range must satisfy 0 <= lo < hi");
  }
}

Standardizer SynthSpec::truth_standardizer() const noexcept {
  Standardizer s;
  for (std::size_t d = 0; d < 3; ++d) {
    const auto [lo, hi] = counter_ranges[d];
    s.means[d] = (lo + hi) / 2.0;
    s.stds[d] = (hi - lo) / std::sqrt(12.0);
  }
  return s;
}

double SynthSpec::truth(const Vec3& counters) const noexcept {
  const Vec3 z = truth_standardizer().apply(counters);
  if (form == OracleForm::Exponential) {
    return exp_scale * std::exp(exp_weights[0] * z[0] + exp_weights[1] * z[1] + exp_weights[2] * z[2]);
  }
  const auto m = poly2_expand(z);
  double t = 0.0;
  for (std::size_t k = 0; k < kPolyFeatures; ++k) t += coefficients[k] * m[k];
  return t;
}

Dataset gen_synth_dataset(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::array<std::uniform_real_distribution<double>, 3> draw = {
      std::uniform_real_distribution<double>(spec.counter_ranges[0].first, spec.counter_ranges[0].second),
      std::uniform_real_distribution<double>(spec.counter_ranges[1].first, spec.counter_ranges[1].second),
      std::uniform_real_distribution<double>(spec.counter_ranges[2].first, spec.counter_ranges[2].second)};
  std::normal_distribution<double> noise(0.0, 1.0);

  Dataset out;
  std::size_t redraws = 0;
  const std::size_t redraw_cap = 100 * spec.n;
  while (out.size() < spec.n) {
    ContentionVector v;
    v.c_cpu = static_cast<std::uint64_t>(std::llround(draw[0](rng)));
    v.c_mem = static_cast<std::uint64_t>(std::llround(draw[1](rng)));
    v.c_disk = static_cast<std::uint64_t>(std::llround(draw[2](rng)));
    const double truth = spec.truth(v.counters());
    if (!(truth > 0.0) || !std::isfinite(truth)) {
      if (++redraws > redraw_cap) {
        throw Error(Errc::NonPositiveTarget, "ground truth is non-positive on too much of the counter box");
      }
      continue;
    }
    double t = truth;
    if (spec.noise_sigma > 0.0) {
      t = truth * (1.0 + spec.noise_sigma * noise(rng));
      t = std::max(t, truth * 1e-6);
    }
    v.window = spec.window;
    v.taken_at = spec.start_time + spec.spacing * static_cast<double>(out.size());
    out.append(Sample{v, t});
  }
  return out;
}

// ----------------------------------------------------------- load injectors

std::string_view to_string(LoadKind kind) noexcept {
  switch (kind) {
    case LoadKind::CpuHog: return "cpu";
    case LoadKind::MemStream: return "mem";
    case LoadKind::DiskRead: return "disk";
  }
  return "?";
}

LoadKind parse_load_kind(std::string_view text) {
  if (text == "cpu") return LoadKind::CpuHog;
  if (text == "mem") return LoadKind::MemStream;
  if (text == "disk") return LoadKind::DiskRead;
  throw Error(Errc::InvalidConfig, "unknown load kind '" + std::string(text) + "'");
}

struct LoadHandle::State {
  std::atomic<bool> stop{false};
  std::vector<std::jthread> workers;
  std::vector<MemArena> arenas;
  std::optional<DirectFile> file;
  std::filesystem::path file_path;
  bool stopped = false;

  void halt() noexcept {
    if (stopped) return;
    stop.store(true, std::memory_order_relaxed);
    workers.clear();
    arenas.clear();
    file.reset();
    if (!file_path.empty()) {
      std::error_code ec;
      std::filesystem::remove(file_path, ec);
    }
    stopped = true;
  }
};

LoadHandle::~LoadHandle() { stop(); }
LoadHandle::LoadHandle(LoadHandle&&) noexcept = default;
LoadHandle& LoadHandle::operator=(LoadHandle&& other) noexcept {
  if (this != &other) {
    stop();
    state_ = std::move(other.state_);
  }
  return *this;
}

bool LoadHandle::running() const noexcept { return state_ && !state_->stopped; }

void LoadHandle::stop() noexcept {
  if (state_) state_->halt();
}

void LoadHandle::wait() noexcept {
  if (!state_) return;
  for (auto& w : state_->workers) {
    if (w.joinable()) w.join();
  }
}

namespace {

bool expired(const std::atomic<bool>& stop, std::chrono::steady_clock::time_point deadline, bool timed) {
  return stop.load(std::memory_order_relaxed) || (timed && std::chrono::steady_clock::now() >= deadline);
}

}  // namespace

LoadHandle start_load(const LoadSpec& spec) {
  if (spec.intensity < 1) throw Error(Errc::InvalidConfig, "load intensity must be >= 1");
  if (spec.duration < 0.0) throw Error(Errc::InvalidDuration, "load duration must be >= 0");
  LoadHandle handle;
  handle.state_ = std::make_unique<LoadHandle::State>();
  auto& st = *handle.state_;
  const bool timed = spec.duration > 0.0;
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                               std::chrono::duration<double>(spec.duration));

  if (spec.kind == LoadKind::MemStream) {
    if (spec.mem_stride_bytes < 8 || spec.mem_bytes < spec.mem_stride_bytes) {
      throw Error(Errc::InvalidConfig, "invalid memory-stream sizes");
    }
    for (unsigned w = 0; w < spec.intensity; ++w) st.arenas.emplace_back(spec.mem_bytes);
  }
  if (spec.kind == LoadKind::DiskRead) {
    static std::atomic<unsigned> serial{0};
    st.file_path = spec.disk_dir / ("ctp_load_" + std::to_string(::getpid()) + "_" +
                                    std::to_string(serial.fetch_add(1)) + ".dat");
    st.file.emplace(st.file_path, spec.disk_file_bytes, spec.disk_page_bytes);
  }

  try {
    for (unsigned w = 0; w < spec.intensity; ++w) {
      switch (spec.kind) {
        case LoadKind::CpuHog:
          st.workers.emplace_back([&stop = st.stop, deadline, timed] {
            double x = 1.0;
            while (!expired(stop, deadline, timed)) {
              for (int i = 0; i < 1 << 20; ++i) {
                x = x * 1.0000001 + 1e-9;
                asm volatile("" : "+x"(x));
              }
            }
          });
          break;
        case LoadKind::MemStream: {
          MemArena* arena = &st.arenas[w];
          const std::size_t stride = spec.mem_stride_bytes;
          st.workers.emplace_back([&stop = st.stop, deadline, timed, arena, stride] {
            std::byte* base = arena->data();
            const std::size_t bytes = arena->size();
            while (!expired(stop, deadline, timed)) {
              for (std::size_t off = 0; off + sizeof(std::uint64_t) <= bytes; off += stride) {
                auto* p = reinterpret_cast<volatile std::uint64_t*>(base + off);
                *p = *p + 1;
                if ((off & ((std::size_t{1} << 22) - 1)) == 0 && stop.load(std::memory_order_relaxed)) return;
              }
            }
          });
          break;
        }
        case LoadKind::DiskRead: {
          const DirectFile* file = &*st.file;
          const std::size_t pages = file->pages();
          st.workers.emplace_back([&stop = st.stop, deadline, timed, file, pages, w, n = spec.intensity] {
            AlignedBuffer buffer(file->page_bytes());
            std::size_t page = (w * pages) / n;
            while (!expired(stop, deadline, timed)) {
              file->read_page(page, buffer.data());
              if (++page == pages) page = 0;
            }
          });
          break;
        }
      }
    }
  } catch (const std::system_error& e) {
    st.halt();
    throw Error(Errc::SpawnFailure, e.what());
  }
  return handle;
}

std::size_t live_thread_count() {
  std::size_t n = 0;
  std::error_code ec;
  for (auto it = std::filesystem::directory_iterator("/proc/self/task", ec);
       !ec && it != std::filesystem::directory_iterator(); it.increment(ec)) {
    ++n;
  }
  return n;
}

// ----------------------------------------------------------- target kernel

TargetKernel::TargetKernel(KernelConfig config)
    : config_(std::move(config)),
      arena_((config_.array_bytes == 0 ? throw Error(Errc::InvalidConfig, "kernel array must be non-empty")
                                       : config_.array_bytes)),
      file_(config_.io_path, config_.io_file_bytes, config_.io_page_bytes),
      buffer_(config_.io_page_bytes) {
  if (config_.stride_bytes < 8 || config_.sweep_bytes_per_unit > config_.array_bytes) {
    throw Error(Errc::InvalidConfig, "invalid kernel sweep configuration");
  }
}

double TargetKernel::run(std::size_t work_units) {
  if (work_units < 1) throw Error(Errc::InvalidConfig, "work_units must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  std::uint64_t sink = 0;
  double acc = 1.0;
  const std::size_t pages = file_.pages();
  for (std::size_t unit = 0; unit < work_units; ++unit) {
    for (std::size_t i = 0; i < config_.arith_iterations_per_unit; ++i) {
      acc = acc * 1.0000001 + 1e-9;
      asm volatile("" : "+x"(acc));
    }
    const std::byte* base = arena_.data();
    for (std::size_t done = 0; done < config_.sweep_bytes_per_unit; done += config_.stride_bytes) {
      sink += *reinterpret_cast<const volatile std::uint64_t*>(base + sweep_cursor_);
      sweep_cursor_ += config_.stride_bytes;
      if (sweep_cursor_ + sizeof(std::uint64_t) > config_.array_bytes) sweep_cursor_ = 0;
    }
    for (std::size_t p = 0; p < config_.io_pages_per_unit; ++p) {
      file_.read_page(page_cursor_, buffer_.data());
      sink += static_cast<std::uint64_t>(buffer_.data()[0]);
      if (++page_cursor_ == pages) page_cursor_ = 0;
    }
  }
  asm volatile("" : : "r"(sink), "x"(acc));
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double run_target_kernel(std::size_t work_units, const KernelConfig& config) {
  if (work_units < 1) throw Error(Errc::InvalidConfig, "work_units must be >= 1");
  TargetKernel kernel(config);
  return kernel.run(work_units);
}

}  // namespace ctp
