#include <algorithm>
#include <chrono>
#include <numeric>

#include "ctp/probes.hpp"
#include "support.hpp"

using namespace ctp;

namespace {

ProbeConfig small_config(ProbeKind kind, double duration, const test::TempDir& dir) {
  ProbeConfig c = ProbeConfig::defaults(kind);
  c.duration = duration;
  c.mem_array_bytes = 64 * kMiB;
  c.disk_file_bytes = 16 * kMiB;
  c.disk_path = dir / "probe.dat";
  return c;
}

void expect_result_invariants(const ProbeResult& r, const ProbeConfig& c) {
  EXPECT_EQ(r.kind, c.kind);
  EXPECT_EQ(r.per_worker_counts.size(), c.effective_workers());
  EXPECT_EQ(r.count, std::accumulate(r.per_worker_counts.begin(), r.per_worker_counts.end(), std::uint64_t{0}));
  EXPECT_GE(r.elapsed, c.duration);
  EXPECT_LE(r.elapsed, c.duration + kProbeGraceSeconds);
}

}  // namespace

TEST(ProbeConfig, KindParsingRoundTrips) {
  for (auto k : {ProbeKind::Cpu, ProbeKind::Mem, ProbeKind::Disk}) EXPECT_EQ(parse_probe_kind(to_string(k)), k);
  EXPECT_CTP_ERROR(parse_probe_kind("net"), Errc::InvalidConfig);
}

TEST(ProbeConfig, Defaults) {
  const auto c = ProbeConfig::defaults(ProbeKind::Mem);
  EXPECT_EQ(c.mem_array_bytes, 2 * kGiB);
  EXPECT_EQ(c.mem_stride_bytes, 128u);
  EXPECT_EQ(c.disk_file_bytes, 256 * kMiB);
  EXPECT_EQ(c.disk_page_bytes, 4 * kKiB);
  EXPECT_EQ(c.duration, 3.0);
  EXPECT_EQ(c.effective_workers(), logical_cpu_count());
  EXPECT_EQ(ProbeConfig::defaults(ProbeKind::Cpu).effective_workers(), logical_cpu_count());
  EXPECT_EQ(ProbeConfig::defaults(ProbeKind::Disk).effective_workers(), 4u);
}

TEST(ProbeConfig, ZeroDurationIsRejected) {
  test::TempDir dir;
  for (auto k : {ProbeKind::Cpu, ProbeKind::Mem, ProbeKind::Disk}) {
    auto c = small_config(k, 0.0, dir);
    EXPECT_CTP_ERROR(run_probe(c), Errc::InvalidDuration);
  }
  auto c = small_config(ProbeKind::Cpu, -1.0, dir);
  EXPECT_CTP_ERROR(run_cpu_probe(c), Errc::InvalidDuration);
}

TEST(ProbeConfig, SizeInvariants) {
  auto c = ProbeConfig::defaults(ProbeKind::Mem);
  c.mem_stride_bytes = 32;
  EXPECT_CTP_ERROR(c.validate(), Errc::InvalidConfig);
  c.mem_stride_bytes = 128;
  c.mem_array_bytes = 1000;
  EXPECT_CTP_ERROR(c.validate(), Errc::InvalidConfig);
  auto d = ProbeConfig::defaults(ProbeKind::Disk);
  d.disk_file_bytes = 4096 + 512;
  EXPECT_CTP_ERROR(d.validate(), Errc::InvalidConfig);
}

TEST(Partition, SharesDifferByAtMostOne) {
  for (std::size_t slots : {1u, 7u, 8u, 100u, 1023u}) {
    for (unsigned w = 1; w <= std::min<std::size_t>(slots, 9); ++w) {
      const auto shares = partition_slots(slots, w);
      ASSERT_EQ(shares.size(), w);
      std::size_t next = 0, lo = slots, hi = 0;
      for (const auto& s : shares) {
        EXPECT_EQ(s.first, next);
        next += s.count;
        lo = std::min(lo, s.count);
        hi = std::max(hi, s.count);
      }
      EXPECT_EQ(next, slots);
      EXPECT_LE(hi - lo, 1u);
    }
  }
}

TEST(Partition, OneKibArrayHasEightSlots) {
  const auto shares = partition_slots(1024 / 128, 4);
  for (const auto& s : shares) EXPECT_EQ(s.count, 2u);
  EXPECT_CTP_ERROR(partition_slots(8, 9), Errc::UnevenPartition);
}

TEST(MemProbe, TinyArrayIsAccepted) {
  test::TempDir dir;
  auto c = small_config(ProbeKind::Mem, 0.2, dir);
  c.mem_array_bytes = 1 * kKiB;
  c.workers = 4;
  const auto r = run_mem_probe(c);
  expect_result_invariants(r, c);
  EXPECT_GT(r.count, 0u);
  c.workers = 9;
  EXPECT_CTP_ERROR(run_mem_probe(c), Errc::UnevenPartition);
}

TEST(MemProbe, ConsecutiveOffsetsDifferByStride) {
  test::TempDir dir;
  auto c = small_config(ProbeKind::Mem, 1.0, dir);
  c.workers = 3;
  for (unsigned w = 0; w < 3; ++w) {
    const auto offs = mem_probe_offsets(c, w, 100);
    for (std::size_t i = 1; i < offs.size(); ++i) EXPECT_EQ(offs[i] - offs[i - 1], c.mem_stride_bytes);
  }
}

TEST(MemProbe, WalkWrapsWithinShare) {
  StridedWalk walk(256, 3, 128);
  EXPECT_EQ(walk.next(), 256u);
  EXPECT_EQ(walk.next(), 384u);
  EXPECT_EQ(walk.next(), 512u);
  EXPECT_EQ(walk.next(), 256u);
}

TEST(Probes, TimingContractAtThreeSeconds) {
  test::TempDir dir;
  for (auto k : {ProbeKind::Cpu, ProbeKind::Mem, ProbeKind::Disk}) {
    auto c = small_config(k, 3.0, dir);
    c.workers = 4;
    const auto r = run_probe(c);
    expect_result_invariants(r, c);
    EXPECT_GT(r.count, 0u) << to_string(k);
  }
}

TEST(Probes, ShortRunsKeepInvariants) {
  test::TempDir dir;
  for (auto k : {ProbeKind::Cpu, ProbeKind::Mem, ProbeKind::Disk}) {
    for (unsigned workers : {1u, 2u, 5u}) {
      auto c = small_config(k, 0.1, dir);
      c.workers = workers;
      expect_result_invariants(run_probe(c), c);
    }
  }
}

TEST(Probes, CountGrowsWithDuration) {
  test::TempDir dir;
  for (auto k : {ProbeKind::Cpu, ProbeKind::Mem}) {
    auto median = [&](double d) {
      std::vector<std::uint64_t> counts;
      for (int i = 0; i < 5; ++i) counts.push_back(run_probe(small_config(k, d, dir)).count);
      std::sort(counts.begin(), counts.end());
      return counts[2];
    };
    EXPECT_GT(median(3.0), median(1.0)) << to_string(k);
  }
}

TEST(DiskProbe, SinglePageFileIsAccepted) {
  test::TempDir dir;
  auto c = small_config(ProbeKind::Disk, 0.3, dir);
  c.disk_file_bytes = 4 * kKiB;
  const auto r = run_disk_probe(c);
  expect_result_invariants(r, c);
  EXPECT_GT(r.count, 0u);
}

TEST(DiskProbe, FileIsOpenedForDirectIo) {
  test::TempDir dir;
  DirectFile f(dir / "direct.dat", 1 * kMiB, 4 * kKiB);
  EXPECT_TRUE(f.direct_io_enabled());
  EXPECT_EQ(f.pages(), 256u);
  AlignedBuffer buf(4 * kKiB);
  f.read_page(255, buf.data());
  f.read_page(0, buf.data());
}

TEST(DiskProbe, ExistingFileOfRightSizeIsReused) {
  test::TempDir dir;
  const auto p = dir / "reuse.dat";
  { DirectFile f(p, 64 * kKiB, 4 * kKiB); }
  const auto stamp = std::filesystem::last_write_time(p);
  { DirectFile f(p, 64 * kKiB, 4 * kKiB); }
  EXPECT_EQ(std::filesystem::last_write_time(p), stamp);
  EXPECT_EQ(std::filesystem::file_size(p), 64 * kKiB);
}

TEST(DiskProbe, UnwritablePathFails) {
  auto c = ProbeConfig::defaults(ProbeKind::Disk);
  c.duration = 0.1;
  c.disk_file_bytes = 16 * kKiB;
  c.disk_path = "/nonexistent-dir/probe.dat";
  EXPECT_CTP_ERROR(run_disk_probe(c), Errc::FileCreationFailure);
}

TEST(CpuProbe, KindMismatchIsRejected) {
  test::TempDir dir;
  auto c = small_config(ProbeKind::Mem, 0.1, dir);
  EXPECT_CTP_ERROR(run_cpu_probe(c), Errc::InvalidConfig);
}
