#include "ctp/balancer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <random>
#include <sstream>

#include "ctp/dataset.hpp"
#include "ctp/error.hpp"
#include "ctp/synthlab.hpp"

namespace ctp {

using nlohmann::json;

std::string_view to_string(Policy policy) noexcept {
  switch (policy) {
    case Policy::Dummy: return "dummy";
    case Policy::Queue: return "queue";
    case Policy::Predictive: return "predict";
  }
  return "?";
}

Policy parse_policy(std::string_view text) {
  if (text == "dummy") return Policy::Dummy;
  if (text == "queue") return Policy::Queue;
  if (text == "predict") return Policy::Predictive;
  throw Error(Errc::InvalidConfig, "unknown policy '" + std::string(text) + "' (dummy, queue, predict)");
}

// ------------------------------------------------------------- ServerTrace

void ServerTrace::validate() const {
  if (schedule.empty() || schedule.front().time != 0.0) {
    throw Error(Errc::InvalidConfig, "server trace needs a breakpoint at t=0");
  }
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    if (!(schedule[i].time > schedule[i - 1].time)) {
      throw Error(Errc::InvalidConfig, "server trace breakpoints must be strictly time-ordered");
    }
  }
  if (!(end > schedule.back().time)) throw Error(Errc::InvalidConfig, "server trace must end after its last breakpoint");
  if (!truth) throw Error(Errc::InvalidConfig, "server trace lacks a ground-truth model");
}

const ContentionVector& ServerTrace::at(double t) const {
  if (t >= end) throw Error(Errc::HorizonExceeded, "time " + std::to_string(t) + " is past the trace end");
  auto it = std::upper_bound(schedule.begin(), schedule.end(), t,
                             [](double value, const ContentionBreakpoint& b) { return value < b.time; });
  if (it == schedule.begin()) throw Error(Errc::InvalidConfig, "time before the first breakpoint");
  return std::prev(it)->contention;
}

// ---------------------------------------------------------------- workload

std::vector<double> rate_ladder(LoadLevel level) {
  std::vector<double> rates = {12, 16, 20};
  rates.insert(rates.end(), 12, 24.0);
  rates.insert(rates.end(), {20, 16, 12});
  if (level == LoadLevel::Low) {
    for (auto& r : rates) r /= 2.0;
  }
  return rates;
}

std::vector<Request> gen_workload(std::uint64_t seed, LoadLevel level) {
  std::mt19937_64 rng(seed);
  std::vector<Request> out;
  const auto rates = rate_ladder(level);
  for (std::size_t w = 0; w < rates.size(); ++w) {
    const double window_start = static_cast<double>(w) * kWindowSeconds;
    const double window_end = window_start + kWindowSeconds;
    std::exponential_distribution<double> gap(rates[w] / 3600.0);
    // Arrivals are memoryless, so restarting the clock at each rate change is exact.
    double t = window_start + gap(rng);
    while (t < window_end) {
      out.push_back({out.size(), t});
      t += gap(rng);
    }
  }
  return out;
}

// ----------------------------------------------------------------- routing

std::size_t route(Policy policy, const RoutingState& state, const Request&) {
  const std::size_t servers = std::max(state.queue_lengths.size(), state.estimated_completion.size());
  if (servers == 0) throw Error(Errc::InvalidConfig, "routing needs at least one server");
  switch (policy) {
    case Policy::Dummy:
      return state.ordinal % servers;
    case Policy::Queue: {
      const auto it = std::min_element(state.queue_lengths.begin(), state.queue_lengths.end());
      return static_cast<std::size_t>(it - state.queue_lengths.begin());
    }
    case Policy::Predictive: {
      const auto it = std::min_element(state.estimated_completion.begin(), state.estimated_completion.end());
      return static_cast<std::size_t>(it - state.estimated_completion.begin());
    }
  }
  return 0;
}

// -------------------------------------------------------------- simulation

BalanceReport simulate(const std::vector<Request>& workload, const std::vector<ServerTrace>& traces,
                       Policy policy, double profiling_cost) {
  if (traces.empty()) throw Error(Errc::InvalidConfig, "simulation needs at least one server");
  if (!(profiling_cost >= 0.0)) throw Error(Errc::InvalidConfig, "profiling cost must be >= 0");
  for (const auto& t : traces) t.validate();
  for (std::size_t i = 1; i < workload.size(); ++i) {
    if (workload[i].arrival < workload[i - 1].arrival) {
      throw Error(Errc::InvalidConfig, "workload arrivals must be non-decreasing");
    }
  }

  struct Server {
    std::vector<RequestLog> assigned;  // FIFO order
    std::size_t first_active = 0;      // assigned[i] for i < first_active have ended
    double free_at = 0.0;
  };
  std::vector<Server> servers(traces.size());
  const double dispatch_delay = policy == Policy::Predictive ? profiling_cost : 0.0;

  BalanceReport report;
  report.policy = policy;
  RoutingState state;
  state.queue_lengths.resize(traces.size());
  state.estimated_completion.resize(traces.size());

  for (std::size_t ordinal = 0; ordinal < workload.size(); ++ordinal) {
    const Request& request = workload[ordinal];
    const double now = request.arrival + dispatch_delay;
    state.ordinal = ordinal;
    for (std::size_t s = 0; s < servers.size(); ++s) {
      auto& srv = servers[s];
      while (srv.first_active < srv.assigned.size() && srv.assigned[srv.first_active].end <= now) {
        ++srv.first_active;
      }
      state.queue_lengths[s] = srv.assigned.size() - srv.first_active;
      if (policy == Policy::Predictive) {
        const double per_request = traces[s].prediction_model().predict(traces[s].at(now));
        double backlog = 0.0;
        for (std::size_t i = srv.first_active; i < srv.assigned.size(); ++i) {
          const auto& r = srv.assigned[i];
          backlog += r.start <= now ? std::max(0.0, per_request - (now - r.start)) : per_request;
        }
        state.estimated_completion[s] = backlog + per_request;
      }
    }
    const std::size_t target = route(policy, state, request);
    auto& srv = servers[target];
    RequestLog entry;
    entry.id = request.id;
    entry.server = target;
    entry.arrival = request.arrival;
    entry.start = std::max(now, srv.free_at);
    const double execution = traces[target].truth->predict(traces[target].at(entry.start));
    if (!(execution > 0.0)) throw Error(Errc::InvalidConfig, "ground-truth execution time must be > 0");
    entry.end = entry.start + execution;
    if (entry.end > traces[target].end) {
      throw Error(Errc::HorizonExceeded, "request " + std::to_string(request.id) + " on server " +
                                             std::to_string(target) + " ends after the trace");
    }
    srv.free_at = entry.end;
    srv.assigned.push_back(entry);
    report.log.push_back(entry);
  }

  if (!report.log.empty()) {
    double turnaround = 0.0, execution = 0.0;
    for (const auto& r : report.log) {
      turnaround += r.turnaround();
      execution += r.execution();
    }
    const double n = static_cast<double>(report.log.size());
    report.mean_turnaround = turnaround / n;
    report.mean_execution = execution / n;
  }
  return report;
}

// ---------------------------------------------------------------- scenario

namespace {

std::shared_ptr<const PredictiveModel> model_from(const json& j, const std::filesystem::path& base_dir) {
  if (j.is_string()) {
    std::filesystem::path p = j.get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    return std::make_shared<const PredictiveModel>(load_model(p));
  }
  return std::make_shared<const PredictiveModel>(model_from_json(j.dump()));
}

}  // namespace

Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::ParseFailure, std::string("scenario is not valid JSON: ") + e.what());
  }
  try {
    Scenario sc;
    sc.seed = j.value("seed", std::uint64_t{1});
    const std::string load = j.value("load", std::string("high"));
    if (load == "high") sc.load = LoadLevel::High;
    else if (load == "low") sc.load = LoadLevel::Low;
    else throw Error(Errc::ParseFailure, "load must be 'high' or 'low'");
    if (j.contains("policies")) {
      sc.policies.clear();
      for (const auto& p : j.at("policies")) sc.policies.push_back(parse_policy(p.get<std::string>()));
    }
    sc.profiling_cost = j.value("profiling_cost", kDefaultProfilingCost);
    for (const auto& s : j.at("servers")) {
      ServerTrace trace;
      for (const auto& b : s.at("schedule")) {
        if (!b.is_array() || b.size() != 4) throw Error(Errc::ParseFailure, "breakpoints are [time, c_cpu, c_mem, c_disk]");
        ContentionBreakpoint bp;
        bp.time = b[0].get<double>();
        bp.contention.c_cpu = b[1].get<std::uint64_t>();
        bp.contention.c_mem = b[2].get<std::uint64_t>();
        bp.contention.c_disk = b[3].get<std::uint64_t>();
        bp.contention.window = s.value("window", kDefaultProfilingWindow);
        bp.contention.taken_at = bp.time;
        trace.schedule.push_back(bp);
      }
      trace.end = s.at("end").get<double>();
      trace.truth = model_from(s.at("truth"), base_dir);
      if (s.contains("predictor")) trace.predictor = model_from(s.at("predictor"), base_dir);
      trace.validate();
      sc.servers.push_back(std::move(trace));
    }
    if (sc.servers.empty()) throw Error(Errc::ParseFailure, "scenario has no servers");
    return sc;
  } catch (const json::exception& e) {
    throw Error(Errc::ParseFailure, std::string("malformed scenario: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::InvalidConfig) throw Error(Errc::ParseFailure, e.what());
    throw;
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.parent_path());
}

std::string scenario_to_json(const Scenario& sc) {
  json j;
  j["seed"] = sc.seed;
  j["load"] = sc.load == LoadLevel::High ? "high" : "low";
  j["policies"] = json::array();
  for (auto p : sc.policies) j["policies"].push_back(to_string(p));
  j["profiling_cost"] = sc.profiling_cost;
  j["servers"] = json::array();
  for (const auto& s : sc.servers) {
    json server;
    server["schedule"] = json::array();
    for (const auto& b : s.schedule) {
      server["schedule"].push_back({b.time, b.contention.c_cpu, b.contention.c_mem, b.contention.c_disk});
    }
    server["end"] = s.end;
    server["truth"] = json::parse(model_to_json(*s.truth));
    if (s.predictor) server["predictor"] = json::parse(model_to_json(*s.predictor));
    j["servers"].push_back(std::move(server));
  }
  return j.dump(2) + "\n";
}

Scenario asymmetric_scenario(std::uint64_t seed, LoadLevel load) {
  const SynthSpec truth_spec = SynthSpec::polynomial_default();
  LinearModel truth_body;
  truth_body.trainer = LinearTrainer::Ridge;
  truth_body.standardizer = truth_spec.truth_standardizer();
  truth_body.intercept = truth_spec.coefficients[0];
  std::copy(truth_spec.coefficients.begin() + 1, truth_spec.coefficients.end(), truth_body.weights.begin());
  auto truth = std::make_shared<const PredictiveModel>(truth_body, TrainingMetadata{});

  // The predictor is a Ridge model fitted to noisy profiled samples of the
  // same application, so routing works from imperfect estimates.
  SynthSpec sample_spec = truth_spec;
  sample_spec.n = 400;
  sample_spec.noise_sigma = 0.05;
  sample_spec.seed = seed + 1000;
  auto predictor = std::make_shared<const PredictiveModel>(
      train_model(ModelKind::Ridge, gen_synth_dataset(sample_spec)));

  auto level = [&](double z) {
    // Same standardized position on all three counters; +1.7 is light load.
    ContentionVector v;
    const Standardizer& s = truth_body.standardizer;
    v.c_cpu = static_cast<std::uint64_t>(std::llround(s.means[0] + z * s.stds[0]));
    v.c_mem = static_cast<std::uint64_t>(std::llround(s.means[1] + z * s.stds[1]));
    v.c_disk = static_cast<std::uint64_t>(std::llround(s.means[2] + z * s.stds[2]));
    v.window = kDefaultProfilingWindow;
    return v;
  };
  const ContentionVector light = level(1.7), heavy = level(-1.7);

  // The servers swap between light and heavy every six hours in opposite
  // phase, so at any time one of them is the contended one.
  constexpr double kHour = 3600.0;
  constexpr double kEnd = 400.0 * kHour;
  constexpr double kPhase = 6.0 * kHour;
  auto make_trace = [&](bool heavy_first) {
    ServerTrace trace;
    trace.end = kEnd;
    trace.truth = truth;
    trace.predictor = predictor;
    std::size_t k = 0;
    for (double t = 0.0; t < kEnd; t += kPhase, ++k) {
      ContentionBreakpoint b{t, (k % 2 == 0) == heavy_first ? heavy : light};
      b.contention.taken_at = t;
      trace.schedule.push_back(b);
    }
    return trace;
  };

  Scenario sc;
  sc.seed = seed;
  sc.load = load;
  sc.servers.push_back(make_trace(false));
  sc.servers.push_back(make_trace(true));
  return sc;
}

void write_balance_csv(std::ostream& out, const std::vector<BalanceReport>& reports) {
  out << kBalanceCsvHeader << '\n';
  for (const auto& r : reports) {
    out << to_string(r.policy) << ',' << format_seconds(r.mean_turnaround) << ','
        << format_seconds(r.mean_execution) << ',' << r.log.size() << '\n';
  }
}

void write_request_log_csv(std::ostream& out, const std::vector<BalanceReport>& reports) {
  out << kRequestLogCsvHeader << '\n';
  for (const auto& r : reports) {
    for (const auto& e : r.log) {
      out << to_string(r.policy) << ',' << e.id << ',' << e.server << ',' << format_seconds(e.arrival) << ','
          << format_seconds(e.start) << ',' << format_seconds(e.end) << '\n';
    }
  }
}

}  // namespace ctp
