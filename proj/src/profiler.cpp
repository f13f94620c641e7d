#include "ctp/profiler.hpp"

#include <spawn.h>
#include <sys/wait.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

#include "ctp/error.hpp"

extern char** environ;

namespace ctp {

double unix_now() noexcept {
  return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
}

double time_command(const TargetCommand& target) {
  if (target.program.empty()) throw Error(Errc::TargetLaunchFailure, "empty target program");
  std::vector<std::string> storage;
  storage.reserve(target.args.size() + 1);
  storage.push_back(target.program);
  storage.insert(storage.end(), target.args.begin(), target.args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  argv.push_back(nullptr);

  pid_t pid = 0;
  const auto start = std::chrono::steady_clock::now();
  const int rc = ::posix_spawnp(&pid, target.program.c_str(), nullptr, nullptr, argv.data(), environ);
  if (rc != 0) {
    throw Error(Errc::TargetLaunchFailure, target.program + ": " + std::strerror(rc));
  }
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) throw Error(Errc::TargetLaunchFailure, "waitpid: " + std::string(std::strerror(errno)));
  }
  const auto finish = std::chrono::steady_clock::now();
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    const std::string how = WIFEXITED(status) ? "exit status " + std::to_string(WEXITSTATUS(status))
                                              : "signal " + std::to_string(WTERMSIG(status));
    throw Error(Errc::TargetNonZeroExit, target.program + " ended with " + how);
  }
  return std::chrono::duration<double>(finish - start).count();
}

Profiler::Profiler(ProfilerOptions options) : options_(std::move(options)) {}

ProbeConfig Profiler::config_for(ProbeKind kind, double window) const {
  ProbeConfig c = ProbeConfig::defaults(kind);
  c.duration = window;
  c.mem_array_bytes = options_.mem_array_bytes;
  c.mem_stride_bytes = options_.mem_stride_bytes;
  c.disk_file_bytes = options_.disk_file_bytes;
  c.disk_page_bytes = options_.disk_page_bytes;
  c.disk_path = options_.disk_path;
  switch (kind) {
    case ProbeKind::Cpu: c.workers = options_.cpu_workers; break;
    case ProbeKind::Mem: c.workers = options_.mem_workers; break;
    case ProbeKind::Disk: c.workers = options_.disk_workers; break;
  }
  return c;
}

MemArena& Profiler::arena() {
  if (!arena_) arena_.emplace(options_.mem_array_bytes);
  return *arena_;
}

const DirectFile& Profiler::file() {
  if (!file_) file_.emplace(options_.disk_path, options_.disk_file_bytes, options_.disk_page_bytes);
  return *file_;
}

ContentionVector Profiler::profile(double window) {
  if (!(window > 0.0)) throw Error(Errc::InvalidDuration, "profiling window must be > 0");
  const auto cpu = config_for(ProbeKind::Cpu, window);
  const auto mem = config_for(ProbeKind::Mem, window);
  const auto disk = config_for(ProbeKind::Disk, window);
  mem.validate();
  disk.validate();
  // Resources are prepared before the pass is timestamped.
  MemArena& a = arena();
  const DirectFile& f = file();

  last_order_.clear();
  ContentionVector v;
  v.window = window;
  v.taken_at = unix_now();
  v.c_cpu = run_cpu_probe(cpu).count;
  last_order_.push_back(ProbeKind::Cpu);
  v.c_mem = run_mem_probe(mem, a).count;
  last_order_.push_back(ProbeKind::Mem);
  v.c_disk = run_disk_probe(disk, f).count;
  last_order_.push_back(ProbeKind::Disk);
  return v;
}

Sample Profiler::collect_iteration(const TargetCommand& target, double window) {
  Sample s;
  s.contention = profile(window);
  s.t_app = time_command(target);
  return s;
}

std::size_t Profiler::collect_campaign(const TargetCommand& target, double window,
                                       std::size_t iterations,
                                       const std::function<void(const Sample&)>& sink,
                                       const std::function<void(const std::string&)>& on_failure) {
  if (iterations < 1) throw Error(Errc::InvalidConfig, "iterations must be >= 1");
  std::size_t stored = 0;
  for (std::size_t i = 0; i < iterations; ++i) {
    if (i > 0 && options_.inter_iteration_pause > 0.0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(options_.inter_iteration_pause));
    }
    Sample s;
    try {
      s = collect_iteration(target, window);
    } catch (const Error& e) {
      if (e.code() != Errc::TargetNonZeroExit) throw;
      if (on_failure) on_failure("iteration " + std::to_string(i) + ": " + e.what());
      continue;
    }
    sink(s);
    ++stored;
  }
  return stored;
}

std::size_t Profiler::collect_campaign(const TargetCommand& target, double window,
                                       std::size_t iterations, DatasetWriter& store,
                                       const std::function<void(const std::string&)>& on_failure) {
  return collect_campaign(
      target, window, iterations, [&](const Sample& s) { store.append(s); }, on_failure);
}

}  // namespace ctp
