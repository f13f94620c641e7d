#include "ctp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "ctp/error.hpp"
#include "ctp/dataset.hpp"

namespace ctp {

double ape(double measured, double predicted) {
  if (!(measured > 0.0)) throw Error(Errc::ZeroMeasured, "measured time must be > 0");
  return std::abs(measured - predicted) / measured;
}

ErrorSummary summarize(std::span<const double> errors) {
  if (errors.empty()) throw Error(Errc::EmptyInput, "no errors to summarize");
  ErrorSummary s;
  s.count = errors.size();
  const double n = static_cast<double>(errors.size());
  s.mean = std::accumulate(errors.begin(), errors.end(), 0.0) / n;
  double var = 0.0;
  for (double e : errors) var += (e - s.mean) * (e - s.mean);
  s.std = std::sqrt(var / n);
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * n));
  s.p95 = sorted[std::max<std::size_t>(rank, 1) - 1];
  return s;
}

std::vector<double> ape_all(std::span<const double> measured, std::span<const double> predicted) {
  if (measured.size() != predicted.size()) throw Error(Errc::InvalidConfig, "length mismatch");
  std::vector<double> out(measured.size());
  for (std::size_t i = 0; i < measured.size(); ++i) out[i] = ape(measured[i], predicted[i]);
  return out;
}

namespace {

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::InvalidConfig, "length mismatch");
  if (a.size() < 2) throw Error(Errc::EmptyInput, "need at least two pairs");
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

std::string error_report_row(const std::string& model, const ErrorSummary& s) {
  return model + "," + format_seconds(s.mean) + "," + format_seconds(s.p95) + "," + format_seconds(s.std) + "," +
         std::to_string(s.count);
}

void write_error_report(std::ostream& out, const std::vector<std::pair<std::string, ErrorSummary>>& rows) {
  out << kErrorReportHeader << '\n';
  for (const auto& [name, s] : rows) out << error_report_row(name, s) << '\n';
}

}  // namespace ctp
