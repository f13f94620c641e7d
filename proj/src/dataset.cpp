#include "ctp/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "ctp/error.hpp"

namespace ctp {

namespace {

void check_sample(const Sample& s) {
  if (!std::isfinite(s.t_app) || !std::isfinite(s.contention.window) ||
      !std::isfinite(s.contention.taken_at)) {
    throw Error(Errc::NonFiniteInput, "sample has a non-finite field");
  }
  if (!(s.t_app > 0.0)) throw Error(Errc::InvalidConfig, "sample t_app must be > 0");
  if (!(s.contention.window > 0.0)) throw Error(Errc::InvalidConfig, "sample window must be > 0");
}

std::string format_row(const Sample& s) {
  std::string row;
  row += format_seconds(s.contention.taken_at);
  row += ',';
  row += format_seconds(s.contention.window);
  row += ',';
  row += std::to_string(s.contention.c_cpu);
  row += ',';
  row += std::to_string(s.contention.c_mem);
  row += ',';
  row += std::to_string(s.contention.c_disk);
  row += ',';
  row += format_seconds(s.t_app);
  row += '\n';
  return row;
}

template <typename T>
T parse_field(std::string_view field, std::size_t row, const char* name) {
  T value{};
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || field.empty()) {
    throw Error(Errc::ParseFailure, "row " + std::to_string(row) + ": bad " + name + " '" +
                                        std::string(field) + "'");
  }
  return value;
}

Sample parse_row(std::string_view line, std::size_t row) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (fields.size() != 6) {
    throw Error(Errc::ParseFailure, "row " + std::to_string(row) + ": expected 6 fields, got " +
                                        std::to_string(fields.size()));
  }
  Sample s;
  s.contention.taken_at = parse_field<double>(fields[0], row, "taken_at_unix_s");
  s.contention.window = parse_field<double>(fields[1], row, "window_s");
  s.contention.c_cpu = parse_field<std::uint64_t>(fields[2], row, "c_cpu");
  s.contention.c_mem = parse_field<std::uint64_t>(fields[3], row, "c_mem");
  s.contention.c_disk = parse_field<std::uint64_t>(fields[4], row, "c_disk");
  s.t_app = parse_field<double>(fields[5], row, "t_app_s");
  if (!std::isfinite(s.t_app) || !(s.t_app > 0.0)) {
    throw Error(Errc::ParseFailure, "row " + std::to_string(row) + ": t_app_s must be > 0");
  }
  if (!std::isfinite(s.contention.window) || !(s.contention.window > 0.0)) {
    throw Error(Errc::ParseFailure, "row " + std::to_string(row) + ": window_s must be > 0");
  }
  if (!std::isfinite(s.contention.taken_at)) {
    throw Error(Errc::ParseFailure, "row " + std::to_string(row) + ": taken_at_unix_s not finite");
  }
  return s;
}

}  // namespace

std::string format_seconds(double seconds) {
  if (!std::isfinite(seconds)) throw Error(Errc::NonFiniteInput, "cannot format non-finite seconds");
  char buf[512];
  for (int precision = 6; precision < 400; ++precision) {
    const auto res = std::to_chars(buf, buf + sizeof buf, seconds, std::chars_format::fixed, precision);
    if (res.ec != std::errc{}) break;
    double back = 0.0;
    std::from_chars(buf, res.ptr, back);
    if (back == seconds) return std::string(buf, res.ptr);
  }
  throw Error(Errc::IoFailure, "cannot format seconds value losslessly");
}

Dataset::Dataset(std::vector<Sample> samples) {
  samples_.reserve(samples.size());
  for (const auto& s : samples) append(s);
}

void Dataset::append(const Sample& sample) {
  check_sample(sample);
  samples_.push_back(sample);
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset out;
  out.samples_.reserve(indices.size());
  for (auto i : indices) out.samples_.push_back(samples_.at(i));
  return out;
}

void write_csv(const Dataset& dataset, std::ostream& out) {
  out << kDatasetHeader << '\n';
  for (const auto& s : dataset.samples()) out << format_row(s);
}

Dataset read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::ParseFailure, "row 0: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kDatasetHeader) throw Error(Errc::ParseFailure, "row 0: unexpected header '" + line + "'");
  Dataset dataset;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    dataset.append(parse_row(line, row));
  }
  return dataset;
}

void save(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  write_csv(dataset, out);
  out.flush();
  if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

Dataset load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  return read_csv(in);
}

DatasetWriter::DatasetWriter(std::filesystem::path path) : path_(std::move(path)) {
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path_, ec) || std::filesystem::file_size(path_, ec) == 0;
  if (fresh) {
    std::ofstream out(path_, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::StorageFailure, "cannot create " + path_.string());
    out << kDatasetHeader << '\n';
    if (!out.flush()) throw Error(Errc::StorageFailure, "write failed for " + path_.string());
  }
}

void DatasetWriter::append(const Sample& sample) {
  check_sample(sample);
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw Error(Errc::StorageFailure, "cannot open " + path_.string() + " for append");
  out << format_row(sample);
  if (!out.flush()) throw Error(Errc::StorageFailure, "append failed for " + path_.string());
}

SplitResult split_4of5(std::size_t n) {
  SplitResult split;
  const std::size_t complete = (n / 5) * 5;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < complete && i % 5 == 4) {
      split.test_indices.push_back(i);
    } else {
      split.train_indices.push_back(i);
    }
  }
  return split;
}

}  // namespace ctp
