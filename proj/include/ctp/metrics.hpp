#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ctp {

/// |measured - predicted| / measured. Throws ZeroMeasured when measured <= 0.
double ape(double measured, double predicted);

struct ErrorSummary {
  double mean = 0.0;
  double p95 = 0.0;  // nearest-rank
  double std = 0.0;  // population
  std::size_t count = 0;
};

/// Throws EmptyInput.
ErrorSummary summarize(std::span<const double> errors);

/// APE of each prediction against its measurement.
std::vector<double> ape_all(std::span<const double> measured, std::span<const double> predicted);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

inline constexpr const char* kErrorReportHeader = "model,mean,p95,std,count";
std::string error_report_row(const std::string& model, const ErrorSummary& summary);
void write_error_report(std::ostream& out, const std::vector<std::pair<std::string, ErrorSummary>>& rows);

}  // namespace ctp
