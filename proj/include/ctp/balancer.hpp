#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ctp/contention.hpp"
#include "ctp/model.hpp"

namespace ctp {

enum class Policy {
  Dummy,       // strict alternation by request ordinal
  Queue,       // fewest queued + running requests
  Predictive,  // earliest predicted completion under profiled contention
};

std::string_view to_string(Policy policy) noexcept;
Policy parse_policy(std::string_view text);

struct ContentionBreakpoint {
  double time = 0.0;
  ContentionVector contention;
};

/// Piecewise-constant contention of one server over simulated time, the
/// ground-truth mapping from contention to execution seconds, and the
/// predictor the predictive policy consults (the truth when unset).
struct ServerTrace {
  std::vector<ContentionBreakpoint> schedule;
  double end = 0.0;  // contention is undefined from here on
  std::shared_ptr<const PredictiveModel> truth;
  std::shared_ptr<const PredictiveModel> predictor;

  /// Throws InvalidConfig (unordered, no breakpoint at 0, missing truth).
  void validate() const;
  const ContentionVector& at(double t) const;
  const PredictiveModel& prediction_model() const { return predictor ? *predictor : *truth; }
};

struct Request {
  std::size_t id = 0;
  double arrival = 0.0;
};

enum class LoadLevel { High, Low };

/// Request rates per hour for the eighteen 4-hour windows of a 72-hour run.
std::vector<double> rate_ladder(LoadLevel level);
inline constexpr double kWindowSeconds = 4.0 * 3600.0;

/// Piecewise Poisson arrivals following rate_ladder. Deterministic per seed.
std::vector<Request> gen_workload(std::uint64_t seed, LoadLevel level = LoadLevel::High);

/// What a routing decision can see.
struct RoutingState {
  std::size_t ordinal = 0;                  // 0-based position of the request
  std::vector<std::size_t> queue_lengths;   // queued + running per server
  std::vector<double> estimated_completion; // predictive policy only
};

std::size_t route(Policy policy, const RoutingState& state, const Request& request);

struct RequestLog {
  std::size_t id = 0;
  std::size_t server = 0;
  double arrival = 0.0;
  double start = 0.0;
  double end = 0.0;

  double execution() const noexcept { return end - start; }
  double turnaround() const noexcept { return end - arrival; }
};

struct BalanceReport {
  Policy policy = Policy::Dummy;
  double mean_turnaround = 0.0;
  double mean_execution = 0.0;
  std::vector<RequestLog> log;
};

inline constexpr double kDefaultProfilingCost = 9.0;

/// FIFO single-request servers. A request's execution time is fixed by the
/// contention in force when it starts. Under the predictive policy each
/// request is dispatched `profiling_cost` seconds after arrival.
/// Throws HorizonExceeded when a trace ends before a request completes.
BalanceReport simulate(const std::vector<Request>& workload, const std::vector<ServerTrace>& traces,
                       Policy policy, double profiling_cost = kDefaultProfilingCost);

struct Scenario {
  std::uint64_t seed = 1;
  LoadLevel load = LoadLevel::High;
  std::vector<Policy> policies{Policy::Dummy, Policy::Queue, Policy::Predictive};
  double profiling_cost = kDefaultProfilingCost;
  std::vector<ServerTrace> servers;
};

/// JSON scenario. Models are inline model objects or paths relative to the
/// scenario file. Throws ParseFailure / IoFailure.
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {});
std::string scenario_to_json(const Scenario& scenario);

/// Two servers whose background load swaps between light and heavy every six
/// hours in opposite phase; used by the balance acceptance check.
Scenario asymmetric_scenario(std::uint64_t seed = 1, LoadLevel load = LoadLevel::High);

inline constexpr const char* kBalanceCsvHeader = "policy,mean_turnaround_s,mean_execution_s,count";
inline constexpr const char* kRequestLogCsvHeader = "policy,id,server,arrival_s,start_s,end_s";
void write_balance_csv(std::ostream& out, const std::vector<BalanceReport>& reports);
void write_request_log_csv(std::ostream& out, const std::vector<BalanceReport>& reports);

}  // namespace ctp
