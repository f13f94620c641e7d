#include "cli.hpp"

#include <csignal>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "ctp/balancer.hpp"
#include "ctp/dataset.hpp"
#include "ctp/error.hpp"
#include "ctp/hyperopt.hpp"
#include "ctp/metrics.hpp"
#include "ctp/model.hpp"
#include "ctp/probes.hpp"
#include "ctp/profiler.hpp"
#include "ctp/synthlab.hpp"

namespace ctp::cli {

namespace {

constexpr std::uint64_t kDefaultSeed = 42;

std::vector<int> parse_layers(const std::string& text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(Errc::UsageError, "bad --layers entry '" + item + "'");
    }
  }
  return out;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::IoFailure, "cannot write " + path);
  return f;
}

void close_output(std::ofstream& f, const std::string& path) {
  f.flush();
  if (!f) throw Error(Errc::IoFailure, "write failed for " + path);
}

std::optional<LinearTrainer> linear_trainer_of(ModelKind kind) {
  switch (kind) {
    case ModelKind::ElasticNet: return LinearTrainer::ElasticNet;
    case ModelKind::Lasso: return LinearTrainer::Lasso;
    case ModelKind::Ridge: return LinearTrainer::Ridge;
    case ModelKind::Sgd: return LinearTrainer::Sgd;
    default: return std::nullopt;
  }
}

ErrorSummary evaluate(const PredictiveModel& model, const Dataset& data) {
  std::vector<double> errors;
  errors.reserve(data.size());
  for (const auto& s : data.samples()) errors.push_back(ape(s.t_app, model.predict(s.contention)));
  return summarize(errors);
}

std::string probe_row(const ProbeResult& r) {
  std::string row = std::string(to_string(r.kind)) + "," + std::to_string(r.count) + "," +
                    format_seconds(r.elapsed) + "," + std::to_string(r.per_worker_counts.size());
  return row;
}

std::string contention_row(const ContentionVector& v) {
  return format_seconds(v.taken_at) + "," + format_seconds(v.window) + "," + std::to_string(v.c_cpu) + "," +
         std::to_string(v.c_mem) + "," + std::to_string(v.c_disk);
}

ProfilerOptions profiler_options(const std::string& probe_file, std::size_t mem_mib) {
  ProfilerOptions o;
  if (!probe_file.empty()) o.disk_path = probe_file;
  o.mem_array_bytes = mem_mib * kMiB;
  return o;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contention-aware execution time prediction toolkit", "ctp"};
  app.set_config("--config", "", "TOML/INI file whose keys mirror the command-line flags");
  app.require_subcommand(1, 1);
  app.fallthrough(false);

  std::function<void()> action;

  // probe
  std::string probe_kind = "cpu";
  double duration = kDefaultProfilingWindow;
  unsigned workers = 0;
  std::string probe_file;
  std::size_t mem_mib = 2048;
  bool header = false;
  auto* probe = app.add_subcommand("probe", "Run one contention probe and print its result");
  probe->add_option("--kind", probe_kind, "cpu, mem or disk")
      ->check(CLI::IsMember({"cpu", "mem", "disk"}))
      ->capture_default_str();
  probe->add_option("--duration", duration, "Window in seconds")->check(CLI::PositiveNumber)->capture_default_str();
  probe->add_option("--workers", workers, "Worker threads (0 = default)");
  probe->add_option("--probe-file", probe_file, "Scratch file for the disk probe");
  probe->add_option("--mem-mib", mem_mib, "Memory probe array size in MiB")->check(CLI::PositiveNumber)->capture_default_str();
  probe->add_flag("--header", header, "Print the column names first");
  probe->callback([&] {
    action = [&] {
      ProbeConfig c = ProbeConfig::defaults(parse_probe_kind(probe_kind));
      c.duration = duration;
      c.workers = workers;
      c.mem_array_bytes = mem_mib * kMiB;
      if (!probe_file.empty()) c.disk_path = probe_file;
      c.validate();
      const ProbeResult r = run_probe(c);
      if (header) out << "kind,count,elapsed_s,workers\n";
      out << probe_row(r) << '\n';
    };
  });

  // profile
  double window = kDefaultProfilingWindow;
  auto* profile = app.add_subcommand("profile", "Run the three probes back to back");
  profile->add_option("--window", window, "Per-probe window in seconds")->check(CLI::PositiveNumber)->capture_default_str();
  profile->add_option("--probe-file", probe_file, "Scratch file for the disk probe");
  profile->add_option("--mem-mib", mem_mib, "Memory probe array size in MiB")->check(CLI::PositiveNumber)->capture_default_str();
  profile->callback([&] {
    action = [&] {
      Profiler p(profiler_options(probe_file, mem_mib));
      const ContentionVector v = p.profile(window);
      out << "taken_at_unix_s,window_s,c_cpu,c_mem,c_disk\n" << contention_row(v) << '\n';
    };
  });

  // collect
  std::size_t iterations = 0;
  std::string out_path;
  double pause = 0.0;
  std::vector<std::string> target;
  auto* collect = app.add_subcommand("collect", "Profile then time a target command, repeatedly");
  collect->add_option("--window", window, "Per-probe window in seconds")->check(CLI::PositiveNumber)->capture_default_str();
  collect->add_option("--iterations", iterations, "Number of iterations")->required()->check(CLI::PositiveNumber);
  collect->add_option("--out", out_path, "Dataset CSV (appended)")->required();
  collect->add_option("--pause", pause, "Seconds between iterations")->check(CLI::NonNegativeNumber);
  collect->add_option("--probe-file", probe_file, "Scratch file for the disk probe");
  collect->add_option("--mem-mib", mem_mib, "Memory probe array size in MiB")->check(CLI::PositiveNumber)->capture_default_str();
  collect->add_option("target", target, "Target command, after --")->required();
  collect->callback([&] {
    action = [&] {
      ProfilerOptions o = profiler_options(probe_file, mem_mib);
      o.inter_iteration_pause = pause;
      Profiler p(o);
      DatasetWriter w(out_path);
      TargetCommand cmd{target.front(), {target.begin() + 1, target.end()}};
      std::size_t failed = 0;
      const std::size_t stored = p.collect_campaign(cmd, window, iterations, w, [&](const std::string& msg) {
        ++failed;
        err << "ctp: skipped " << msg << '\n';
      });
      out << "stored,failed\n" << stored << ',' << failed << '\n';
    };
  });

  // train
  std::string model_kind;
  std::string data_path;
  std::uint64_t seed = kDefaultSeed;
  std::string layers = "16,16";
  std::optional<std::size_t> epochs;
  std::optional<double> alpha, l1_ratio, svr_c, svr_epsilon, svr_gamma;
  auto* train = app.add_subcommand("train", "Fit a model on the training split and report errors");
  train->add_option("--model", model_kind, "elasticnet, lasso, ridge, sgd, svr or mlp")
      ->required()
      ->check(CLI::IsMember({"elasticnet", "lasso", "ridge", "sgd", "svr", "mlp"}));
  train->add_option("--data", data_path, "Dataset CSV")->required();
  train->add_option("--out", out_path, "Model file to write")->required();
  train->add_option("--seed", seed, "Seed for shuffling and initialization")->capture_default_str();
  train->add_option("--layers", layers, "Hidden layer widths for mlp, comma separated")->capture_default_str();
  train->add_option("--epochs", epochs, "Training epochs for mlp");
  train->add_option("--alpha", alpha, "Linear penalty strength");
  train->add_option("--l1-ratio", l1_ratio, "Linear L1 share");
  train->add_option("--C", svr_c, "SVR box constraint")->check(CLI::PositiveNumber);
  train->add_option("--epsilon", svr_epsilon, "SVR tube half-width")->check(CLI::NonNegativeNumber);
  train->add_option("--gamma", svr_gamma, "SVR kernel width")->check(CLI::PositiveNumber);
  train->callback([&] {
    action = [&] {
      const ModelKind kind = parse_model_kind(model_kind);
      TrainOptions opts;
      opts.mlp_config = NNConfig(parse_layers(layers));
      opts.mlp.seed = seed;
      if (epochs) opts.mlp.epochs = *epochs;
      if (auto lt = linear_trainer_of(kind)) {
        LinearHyperparameters hp = LinearHyperparameters::defaults(*lt);
        if (alpha) hp.alpha = *alpha;
        if (l1_ratio) hp.l1_ratio = *l1_ratio;
        hp.seed = seed;
        opts.linear = hp;
      }
      if (svr_c) opts.svr.C = *svr_c;
      if (svr_epsilon) opts.svr.epsilon = *svr_epsilon;
      if (svr_gamma) opts.svr.gamma = *svr_gamma;

      const Dataset data = load(data_path);
      const SplitResult split = split_4of5(data);
      const Dataset train_set = data.subset(split.train_indices);
      const PredictiveModel model = train_model(kind, train_set, opts);
      save_model(model, out_path);

      std::vector<std::pair<std::string, ErrorSummary>> rows;
      rows.emplace_back(model_kind + "/train", evaluate(model, train_set));
      if (!split.test_indices.empty()) {
        rows.emplace_back(model_kind + "/test", evaluate(model, data.subset(split.test_indices)));
      }
      write_error_report(out, rows);
    };
  });

  // search
  std::string method;
  std::size_t budget = 200;
  std::string model_out;
  auto* search = app.add_subcommand("search", "Search MLP structures on the training split");
  search->add_option("--method", method, "random, bayes or tpe")
      ->required()
      ->check(CLI::IsMember({"random", "bayes", "tpe"}));
  search->add_option("--data", data_path, "Dataset CSV")->required();
  search->add_option("--budget", budget, "Number of structures to evaluate")->check(CLI::PositiveNumber)->capture_default_str();
  search->add_option("--seed", seed, "Search and training seed")->capture_default_str();
  search->add_option("--epochs", epochs, "Training epochs per evaluation");
  search->add_option("--out", out_path, "Search history CSV")->required();
  search->add_option("--model-out", model_out, "Also write the best structure's model here");
  search->callback([&] {
    action = [&] {
      const Dataset data = load(data_path);
      const SplitResult split = split_4of5(data);
      const Dataset train_set = data.subset(split.train_indices);
      const auto inputs = inputs_of(train_set);
      const auto targets = targets_of(train_set);
      MlpTrainOptions mo;
      mo.seed = seed;
      if (epochs) mo.epochs = *epochs;
      const Objective objective = [&](const NNConfig& c) { return training_mape(c, inputs, targets, mo); };
      const SearchSpace space;
      SearchRecord record;
      if (method == "random") record = random_search(space, budget, objective, seed);
      else if (method == "bayes") record = bayes_opt(space, budget, objective, seed);
      else record = tpe_search(space, budget, objective, seed);

      auto f = open_output(out_path);
      write_search_csv(f, record);
      close_output(f, out_path);

      if (!model_out.empty()) {
        TrainOptions opts;
        opts.mlp_config = record.best_entry().config;
        opts.mlp = mo;
        save_model(train_model(ModelKind::Mlp, train_set, opts), model_out);
      }
      const SearchEntry& best = record.best_entry();
      out << "method,best_iteration,best_neurons,best_score\n"
          << method << ',' << record.best << ',' << best.config.to_string() << ',' << format_seconds(best.score)
          << '\n';
    };
  });

  // predict
  std::string model_path;
  std::optional<std::uint64_t> c_cpu, c_mem, c_disk;
  auto* predict_cmd = app.add_subcommand("predict", "Predict execution seconds for a contention vector");
  predict_cmd->add_option("--model", model_path, "Model file")->required();
  auto* o_cpu = predict_cmd->add_option("--c-cpu", c_cpu, "CPU probe counter");
  auto* o_mem = predict_cmd->add_option("--c-mem", c_mem, "Memory probe counter");
  auto* o_disk = predict_cmd->add_option("--c-disk", c_disk, "Disk probe counter");
  o_cpu->needs(o_mem, o_disk);
  o_mem->needs(o_cpu, o_disk);
  o_disk->needs(o_cpu, o_mem);
  predict_cmd->add_option("--window", window, "Profile live with this window when no counters are given")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  predict_cmd->add_option("--probe-file", probe_file, "Scratch file for the disk probe");
  predict_cmd->add_option("--mem-mib", mem_mib, "Memory probe array size in MiB")->check(CLI::PositiveNumber)->capture_default_str();
  predict_cmd->callback([&] {
    action = [&] {
      const PredictiveModel model = load_model(model_path);
      ContentionVector v;
      if (c_cpu) {
        v.c_cpu = *c_cpu;
        v.c_mem = *c_mem;
        v.c_disk = *c_disk;
      } else {
        Profiler p(profiler_options(probe_file, mem_mib));
        v = p.profile(window);
      }
      out << "c_cpu,c_mem,c_disk,predicted_t_app_s\n"
          << v.c_cpu << ',' << v.c_mem << ',' << v.c_disk << ',' << format_seconds(model.predict(v)) << '\n';
    };
  });

  // eval
  std::string split_name = "test";
  auto* eval = app.add_subcommand("eval", "Score a model against a dataset");
  eval->add_option("--model", model_path, "Model file")->required();
  eval->add_option("--data", data_path, "Dataset CSV")->required();
  eval->add_option("--split", split_name, "test, train or all")
      ->check(CLI::IsMember({"test", "train", "all"}))
      ->capture_default_str();
  eval->add_option("--out", out_path, "Per-sample predictions CSV");
  eval->callback([&] {
    action = [&] {
      const PredictiveModel model = load_model(model_path);
      Dataset data = load(data_path);
      if (split_name != "all") {
        const SplitResult s = split_4of5(data);
        data = data.subset(split_name == "test" ? s.test_indices : s.train_indices);
      }
      if (!out_path.empty()) {
        auto f = open_output(out_path);
        f << "taken_at_unix_s,measured_s,predicted_s,ape\n";
        for (const auto& s : data.samples()) {
          const double p = model.predict(s.contention);
          f << format_seconds(s.taken_at()) << ',' << format_seconds(s.t_app) << ',' << format_seconds(p) << ','
            << format_seconds(ape(s.t_app, p)) << '\n';
        }
        close_output(f, out_path);
      }
      write_error_report(out, {{std::string(to_string(model.kind())) + "/" + split_name, evaluate(model, data)}});
    };
  });

  // synth
  std::string form = "polynomial";
  std::size_t n = 1000;
  double noise = 0.01;
  auto* synth = app.add_subcommand("synth", "Generate a dataset from a known ground truth");
  synth->add_option("--form", form, "polynomial or exponential")
      ->check(CLI::IsMember({"polynomial", "exponential"}))
      ->capture_default_str();
  synth->add_option("--n", n, "Sample count")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--noise", noise, "Relative noise sigma")->check(CLI::NonNegativeNumber)->capture_default_str();
  synth->add_option("--seed", seed, "Seed")->capture_default_str();
  synth->add_option("--out", out_path, "Dataset CSV to write")->required();
  synth->callback([&] {
    action = [&] {
      SynthSpec spec = form == "polynomial" ? SynthSpec::polynomial_default() : SynthSpec::exponential_default();
      spec.n = n;
      spec.noise_sigma = noise;
      spec.seed = seed;
      const Dataset d = gen_synth_dataset(spec);
      std::filesystem::remove(out_path);
      save(d, out_path);
      out << "samples\n" << d.size() << '\n';
    };
  });

  // load
  std::string load_kind = "cpu";
  unsigned intensity = 1;
  double load_duration = 0.0;
  std::string scratch_dir;
  auto* load_cmd = app.add_subcommand("load", "Inject background contention until the duration ends or a signal");
  load_cmd->add_option("--kind", load_kind, "cpu, mem or disk")
      ->check(CLI::IsMember({"cpu", "mem", "disk"}))
      ->capture_default_str();
  load_cmd->add_option("--intensity", intensity, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  load_cmd->add_option("--duration", load_duration, "Seconds (0 = until SIGINT/SIGTERM)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  load_cmd->add_option("--scratch-dir", scratch_dir, "Directory for the disk injector's private files");
  load_cmd->callback([&] {
    action = [&] {
      LoadSpec spec;
      spec.kind = parse_load_kind(load_kind);
      spec.intensity = intensity;
      spec.duration = load_duration;
      if (!scratch_dir.empty()) spec.disk_dir = scratch_dir;
      if (load_duration > 0.0) {
        LoadHandle h = start_load(spec);
        h.wait();
        h.stop();
        return;
      }
      // Block the stop signals before the workers exist so only sigwait sees them.
      sigset_t set;
      sigemptyset(&set);
      sigaddset(&set, SIGINT);
      sigaddset(&set, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &set, nullptr);
      LoadHandle h = start_load(spec);
      int sig = 0;
      sigwait(&set, &sig);
      h.stop();
    };
  });

  // kernel
  std::size_t work_units = 0;
  std::string io_file;
  auto* kernel = app.add_subcommand("kernel", "Run the contention-sensitive target kernel");
  kernel->add_option("--work-units", work_units, "Units of work")->required()->check(CLI::PositiveNumber);
  kernel->add_option("--io-file", io_file, "Scratch file for the kernel's direct reads");
  kernel->callback([&] {
    action = [&] {
      KernelConfig kc;
      if (!io_file.empty()) kc.io_path = io_file;
      out << "work_units,elapsed_s\n" << work_units << ',' << format_seconds(run_target_kernel(work_units, kc)) << '\n';
    };
  });

  // balance
  std::string scenario_path;
  std::string load_level = "high";
  std::vector<std::string> policies;
  std::string log_path;
  std::optional<std::uint64_t> balance_seed;
  std::optional<double> profiling_cost;
  auto* balance = app.add_subcommand("balance", "Simulate routing policies over server contention traces");
  balance->add_option("--scenario", scenario_path, "Scenario JSON (default: built-in asymmetric scenario)");
  balance->add_option("--seed", balance_seed, "Workload seed (overrides the scenario)");
  balance->add_option("--load", load_level, "high or low (built-in scenario)")
      ->check(CLI::IsMember({"high", "low"}))
      ->capture_default_str();
  balance->add_option("--policy", policies, "dummy, queue or predict; repeatable")
      ->check(CLI::IsMember({"dummy", "queue", "predict"}));
  balance->add_option("--profiling-cost", profiling_cost, "Seconds of profiling before a predictive dispatch")
      ->check(CLI::NonNegativeNumber);
  balance->add_option("--out", out_path, "Also write the summary CSV here");
  balance->add_option("--log", log_path, "Per-request log CSV");
  balance->callback([&] {
    action = [&] {
      const LoadLevel level = load_level == "high" ? LoadLevel::High : LoadLevel::Low;
      Scenario sc = scenario_path.empty() ? asymmetric_scenario(balance_seed.value_or(1), level)
                                          : load_scenario(scenario_path);
      if (balance_seed) sc.seed = *balance_seed;
      if (profiling_cost) sc.profiling_cost = *profiling_cost;
      if (!policies.empty()) {
        sc.policies.clear();
        for (const auto& p : policies) sc.policies.push_back(parse_policy(p));
      }
      const auto workload = gen_workload(sc.seed, sc.load);
      std::vector<BalanceReport> reports;
      for (Policy p : sc.policies) reports.push_back(simulate(workload, sc.servers, p, sc.profiling_cost));
      write_balance_csv(out, reports);
      if (!out_path.empty()) {
        auto f = open_output(out_path);
        write_balance_csv(f, reports);
        close_output(f, out_path);
      }
      if (!log_path.empty()) {
        auto f = open_output(log_path);
        write_request_log_csv(f, reports);
        close_output(f, log_path);
      }
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "ctp: " << e.what() << '\n' << app.help();
    return 2;
  } catch (const Error& e) {
    err << "ctp: " << e.what() << '\n' << app.help();
    return 2;
  }

  try {
    if (action) action();
    out.flush();
    return 0;
  } catch (const Error& e) {
    err << "ctp: " << to_string(e.code()) << ": " << e.what() << '\n';
    return e.code() == Errc::UsageError ? 2 : 1;
  } catch (const std::exception& e) {
    err << "ctp: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace ctp::cli
