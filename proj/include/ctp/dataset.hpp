#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "ctp/contention.hpp"

namespace ctp {

inline constexpr std::string_view kDatasetHeader = "taken_at_unix_s,window_s,c_cpu,c_mem,c_disk,t_app_s";

/// Samples in insertion (time) order. Stored samples are never modified.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Sample> samples);

  /// Throws NonFiniteInput / InvalidConfig for samples violating invariants.
  void append(const Sample& sample);

  const std::vector<Sample>& samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return samples_.at(i); }

  Dataset subset(const std::vector<std::size_t>& indices) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<Sample> samples_;
};

void write_csv(const Dataset& dataset, std::ostream& out);
Dataset read_csv(std::istream& in);

/// Throws IoFailure.
void save(const Dataset& dataset, const std::filesystem::path& path);
/// Throws IoFailure or ParseFailure (the message names the row).
Dataset load(const std::filesystem::path& path);

/// Formats seconds with at least six fractional digits and enough digits to
/// read back the exact same double.
std::string format_seconds(double seconds);

/// Appends samples to a CSV file one row at a time, writing the header when
/// the file is new. Each append is flushed before returning.
class DatasetWriter {
 public:
  explicit DatasetWriter(std::filesystem::path path);
  void append(const Sample& sample);
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

struct SplitResult {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

/// Interleaved split: in each complete group of five consecutive samples the
/// first four train and the fifth tests. A trailing partial group trains.
SplitResult split_4of5(std::size_t n);
inline SplitResult split_4of5(const Dataset& dataset) { return split_4of5(dataset.size()); }

}  // namespace ctp
