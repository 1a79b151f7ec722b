// Copyright 2026 The Unifwatch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "unifwatch/distances.h"
#include "unifwatch/full_tester.h"
#include "unifwatch/harness.h"
#include "unifwatch/interval_tester.h"
#include "unifwatch/oracle.h"
#include "unifwatch/poisson.h"
#include "unifwatch/tracker.h"
#include "unifwatch/uniformity_tester.h"

namespace unifwatch {
namespace {

using nlohmann::json;

// Opens `path` for reading; "-" selects the caller's stream.
class Input {
 public:
  Input(const std::string& path, std::istream& fallback) {
    if (path == "-") {
      stream_ = &fallback;
      return;
    }
    file_ = std::make_unique<std::ifstream>(path);
    if (!*file_) throw IoError("cannot open '" + path + "' for reading");
    stream_ = file_.get();
  }
  std::istream& get() { return *stream_; }

 private:
  std::unique_ptr<std::ifstream> file_;
  std::istream* stream_ = nullptr;
};

std::vector<std::int64_t> read_all_integers(const std::string& path, std::istream& fallback) {
  Input input(path, fallback);
  try {
    return read_integers(input.get());
  } catch (const std::invalid_argument& e) {
    throw IoError(path + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw IoError(path + ": " + e.what());
  }
}

std::vector<Symbol> read_symbol_file(const std::string& path, std::istream& fallback,
                                     std::int64_t n) {
  std::vector<Symbol> symbols = read_all_integers(path, fallback);
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (symbols[i] < 1 || symbols[i] > n) {
      throw IoError(path + ": sample " + std::to_string(i + 1) + " = " +
                    std::to_string(symbols[i]) + " outside [1, " + std::to_string(n) + "]");
    }
  }
  return symbols;
}

void add_overrides(CLI::App* app, FullOverrides& o) {
  app->add_option("--r", o.r, "Repeats per subset size")->check(CLI::PositiveNumber);
  app->add_option("--s", o.s, "Poisson split factor")->check(CLI::PositiveNumber);
  app->add_option("--x-max", o.x_max, "Interval search ceiling")->check(CLI::NonNegativeNumber);
  app->add_option("--tau", o.tau, "Rejection threshold")->check(CLI::PositiveNumber);
}

json verdict_fields(const Verdict& v) {
  return {{"verdict", std::string(to_string(v.outcome))},
          {"witness", v.witness ? to_json(*v.witness) : json(nullptr)}};
}

json full_params_json(const FullTesterParams& p) {
  return {{"n", p.n}, {"mu", p.mu}, {"tau", p.tau}, {"s", p.s}, {"r", p.r}, {"x_max", p.x_max}};
}

PoissonMixture parse_mixture(const std::vector<double>& rates) {
  if (rates.empty()) throw std::invalid_argument("--mix needs at least one rate");
  return PoissonMixture(rates);
}

struct TestArgs {
  std::int64_t n = 0;
  std::int64_t m = 0;
  double delta = 0.1;
  std::string samples = "-";
  std::string baseline;
  std::uint64_t seed = 0;
  FullOverrides overrides;
};

json run_test(const TestArgs& a, std::istream& in) {
  VectorSampleStream stream(read_symbol_file(a.samples, in, a.n));
  try {
    if (a.baseline == "collision-count") {
      const Verdict v = collision_count_baseline(a.n, a.m, stream);
      json j = {{"command", "test"}, {"branch", "collision-count"}};
      j.update(verdict_fields(v));
      j["samples_consumed"] = stream.consumed();
      return j;
    }
    UniformityTestConfig cfg;
    cfg.n = a.n;
    cfg.m = a.m;
    cfg.delta = a.delta;
    cfg.overrides = a.overrides;
    const UniformityResult r = test_uniformity(cfg, stream, Rng(a.seed));
    json j = {{"command", "test"}, {"branch", std::string(to_string(r.report.branch))}};
    j.update(verdict_fields(r.verdict));
    j["samples_requested"] = r.report.samples_requested;
    j["samples_consumed"] = r.report.samples_consumed;
    return j;
  } catch (const StreamExhausted& e) {
    throw IoError(a.samples + ": " + e.what());
  }
}

struct TrackArgs {
  std::int64_t n = 0;
  double delta = 0.1;
  std::string stream = "-";
  std::optional<std::int64_t> max_stage;
  std::uint64_t seed = 0;
  FullOverrides overrides;
};

void run_track(const TrackArgs& a, std::istream& in, std::ostream& out) {
  TrackerConfig cfg;
  cfg.n = a.n;
  cfg.delta = a.delta;
  cfg.max_stage = a.max_stage;
  cfg.overrides = a.overrides;
  Tracker tracker(cfg, Rng(a.seed));
  const std::vector<Symbol> symbols = read_symbol_file(a.stream, in, a.n);
  std::size_t reported = 0;
  const auto report_stages = [&] {
    for (; reported < tracker.stages().size(); ++reported) {
      const StageRecord& s = tracker.stages()[reported];
      json j = {{"stage", s.stage},
                {"m", s.m},
                {"delta", s.delta},
                {"branch", std::string(to_string(s.branch))},
                {"samples", s.samples},
                {"outcome", std::string(to_string(s.outcome))}};
      if (s.witness) j["witness"] = to_json(*s.witness);
      out << j.dump() << '\n';
    }
  };
  report_stages();
  for (Symbol x : symbols) {
    if (tracker.status() != TrackerStatus::kPlausible) break;
    tracker.feed(x);
    report_stages();
  }
  const json summary = {{"command", "track"},
                        {"status", std::string(to_string(tracker.status()))},
                        {"stages_run", tracker.stages().size()},
                        {"current_stage", tracker.stage()},
                        {"samples_consumed", tracker.samples_consumed()},
                        {"samples_available", symbols.size()}};
  out << summary.dump() << '\n';
}

struct IntervalArgs {
  double mu = 0.0;
  double eps = 0.0;
  double delta = 0.1;
  std::string samples = "-";
};

json run_interval(const IntervalArgs& a, std::istream& in) {
  const IntervalTesterParams params = derive_interval_params(a.mu, a.eps, a.delta);
  std::vector<std::int64_t> samples = read_all_integers(a.samples, in);
  if (static_cast<std::int64_t>(samples.size()) < params.m) {
    throw IoError(a.samples + ": need " + std::to_string(params.m) + " samples, found " +
                  std::to_string(samples.size()));
  }
  samples.resize(static_cast<std::size_t>(params.m));
  const Verdict v = run_interval_tester(params, samples);
  json j = {{"command", "interval-test"},
            {"mu", params.mu},
            {"tau", params.tau},
            {"x_max", params.x_max},
            {"m", params.m}};
  j.update(verdict_fields(v));
  return j;
}

struct FullArgs {
  std::int64_t n = 0;
  double mu = 0.0;
  double delta = 0.1;
  std::string freq = "-";
  bool literal = false;
  std::uint64_t seed = 0;
  FullOverrides overrides;
};

json run_full(const FullArgs& a, std::istream& in) {
  const FullTesterParams params = derive_full_params(a.n, a.mu, a.delta, {}, a.overrides);
  std::vector<std::int64_t> counts = read_all_integers(a.freq, in);
  FrequencyVector freq(std::move(counts));
  FullRunOptions options;
  options.literal_resampling = a.literal;
  const Verdict v = run_full_tester(params, freq, Rng(a.seed), options);
  json j = {{"command", "full-test"}, {"params", full_params_json(params)},
            {"literal_resampling", a.literal}};
  j.update(verdict_fields(v));
  return j;
}

struct OracleArgs {
  double mu = 0.0;
  std::vector<double> mix;
  double tol = 1e-12;
  std::int64_t x_max = 0;
  double r = 1.0;
  std::int64_t X = 0;
  std::uint64_t seed = 1;
  std::int64_t count = 200;
  std::string out;
};

struct SimulateArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> trials;
  std::optional<int> threads;
  std::string out;
  std::string format;
};

void run_simulate(const SimulateArgs& a, std::istream& in, std::ostream& out,
                  std::ostream& err) {
  json j;
  {
    Input input(a.config, in);
    try {
      j = json::parse(input.get());
    } catch (const json::parse_error& e) {
      throw ConfigError(a.config + ": " + e.what());
    }
  }
  ExperimentConfig cfg = config_from_json(j);
  if (a.seed) cfg.seed = *a.seed;
  if (a.trials) cfg.trials = *a.trials;
  if (a.threads) cfg.threads = *a.threads;
  if (!a.out.empty()) cfg.out = a.out;
  if (!a.format.empty()) cfg.format = a.format;
  validate(cfg);
  const Experiment ex = run_experiment(cfg);
  std::ofstream file;
  std::ostream* records = &out;
  std::ostream* summary = &err;
  if (!cfg.out.empty() && cfg.out != "-") {
    file.open(cfg.out);
    if (!file) throw IoError("cannot open '" + cfg.out + "' for writing");
    records = &file;
    summary = &out;
  }
  if (cfg.format == "csv") {
    write_csv(*records, ex.records);
  } else {
    write_jsonl(*records, ex.records);
  }
  records->flush();
  if (!*records) throw IoError("failed writing records");
  *summary << json{{"command", "simulate"}, {"config", to_json(cfg)}, {"summary", to_json(ex.summary)}}
                  .dump()
           << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Anytime uniformity testing and tracking over a finite domain", "unifwatch"};
  app.require_subcommand(1);
  std::function<void()> action;

  TestArgs test_args;
  auto* test = app.add_subcommand("test", "Test a sample file for uniformity over [n]");
  test->add_option("--n", test_args.n, "Domain size")->required()->check(CLI::Range(std::int64_t{2}, std::int64_t{1} << 40));
  test->add_option("--m", test_args.m, "Sample budget to test against")->required()->check(CLI::PositiveNumber);
  test->add_option("--delta", test_args.delta, "Failure probability")->check(CLI::Range(0.0, 1.0));
  test->add_option("--samples", test_args.samples, "Symbols in [1, n], one per line; - for stdin");
  test->add_option("--baseline", test_args.baseline, "Run a baseline instead")
      ->check(CLI::IsMember({"collision-count"}));
  test->add_option("--seed", test_args.seed, "Random seed");
  add_overrides(test, test_args.overrides);
  test->callback([&] { action = [&] { out << run_test(test_args, in).dump() << '\n'; }; });

  TrackArgs track_args;
  auto* track = app.add_subcommand("track", "Track a symbol stream, one stage report per line");
  track->add_option("--n", track_args.n, "Domain size")->required()->check(CLI::Range(std::int64_t{2}, std::int64_t{1} << 40));
  track->add_option("--delta", track_args.delta, "Overall false-reject probability")
      ->check(CLI::Range(0.0, 1.0));
  track->add_option("--stream", track_args.stream, "Symbols in [1, n]; - for stdin");
  track->add_option("--max-stage", track_args.max_stage, "Stop after this many stages")
      ->check(CLI::Range(1, 62));
  track->add_option("--seed", track_args.seed, "Random seed");
  add_overrides(track, track_args.overrides);
  track->callback([&] { action = [&] { run_track(track_args, in, out); }; });

  IntervalArgs interval_args;
  auto* interval = app.add_subcommand("interval-test", "Test Poisson draws against Poi(mu)");
  interval->add_option("--mu", interval_args.mu, "Null rate")->required()->check(CLI::NonNegativeNumber);
  interval->add_option("--eps", interval_args.eps, "Hellinger separation")->required()->check(CLI::Range(0.0, 2.0));
  interval->add_option("--delta", interval_args.delta, "Failure probability")->check(CLI::Range(0.0, 1.0));
  interval->add_option("--samples", interval_args.samples, "Counts, one per line; - for stdin");
  interval->callback([&] { action = [&] { out << run_interval(interval_args, in).dump() << '\n'; }; });

  FullArgs full_args;
  auto* full = app.add_subcommand("full-test", "Test a frequency vector against Poi(s mu)^n");
  full->add_option("--n", full_args.n, "Domain size")->required()->check(CLI::Range(std::int64_t{2}, std::int64_t{1} << 40));
  full->add_option("--mu", full_args.mu, "Per-split null rate")->required()->check(CLI::NonNegativeNumber);
  full->add_option("--delta", full_args.delta, "Failure probability")->check(CLI::Range(0.0, 1.0));
  full->add_option("--freq", full_args.freq, "Counts, one per line; - for stdin")->required();
  full->add_flag("--literal-resampling", full_args.literal, "Fresh subset per test");
  full->add_option("--seed", full_args.seed, "Random seed");
  add_overrides(full, full_args.overrides);
  full->callback([&] { action = [&] { out << run_full(full_args, in).dump() << '\n'; }; });

  OracleArgs oa;
  auto* oracle = app.add_subcommand("oracle", "Extended-precision reference values");
  oracle->require_subcommand(1);
  const auto add_pair = [&](CLI::App* sub) {
    sub->add_option("--mu", oa.mu, "Poisson rate")->required()->check(CLI::NonNegativeNumber);
    sub->add_option("--mix", oa.mix, "Mixture rates, comma separated")->required()->delimiter(',');
  };
  auto* hellinger = oracle->add_subcommand("hellinger", "Squared Hellinger distance");
  add_pair(hellinger);
  hellinger->add_option("--tol", oa.tol, "Absolute error bound")->check(CLI::Range(1e-300, 0.5));
  hellinger->callback([&] {
    action = [&] {
      const ExactDistance d = exact_hellinger_poisson_vs_mixture(oa.mu, parse_mixture(oa.mix), oa.tol);
      out << json{{"command", "oracle hellinger"}, {"value", d.value}, {"error_bound", d.error_bound},
                  {"cutoff", d.window.cutoff}, {"tail_bound", d.window.tail_bound}}
                 .dump()
          << '\n';
    };
  });
  auto* tv = oracle->add_subcommand("tv", "Total variation distance");
  add_pair(tv);
  tv->add_option("--tol", oa.tol, "Absolute error bound")->check(CLI::Range(1e-300, 0.5));
  tv->callback([&] {
    action = [&] {
      const ExactDistance d = exact_tv_poisson_vs_mixture(oa.mu, parse_mixture(oa.mix), oa.tol);
      out << json{{"command", "oracle tv"}, {"value", d.value}, {"error_bound", d.error_bound},
                  {"cutoff", d.window.cutoff}, {"tail_bound", d.window.tail_bound}}
                 .dump()
          << '\n';
    };
  });
  auto* best = oracle->add_subcommand("best-interval", "Most separating interval");
  add_pair(best);
  best->add_option("--x-max", oa.x_max, "Search ceiling")->required()->check(CLI::NonNegativeNumber);
  best->callback([&] {
    action = [&] {
      const BestInterval b = best_interval(oa.mu, parse_mixture(oa.mix), oa.x_max);
      out << json{{"command", "oracle best-interval"}, {"a", b.a}, {"b", b.b}, {"value", b.value}}.dump()
          << '\n';
    };
  });
  auto* threshold = oracle->add_subcommand("threshold-set", "Shape of {x : ratio >= r}");
  add_pair(threshold);
  threshold->add_option("--r", oa.r, "Ratio threshold")->check(CLI::NonNegativeNumber);
  threshold->add_option("--X", oa.X, "Scan ceiling")->required()->check(CLI::NonNegativeNumber);
  threshold->callback([&] {
    action = [&] {
      const ThresholdSet t = threshold_set_structure(oa.mu, parse_mixture(oa.mix), oa.r, oa.X);
      out << json{{"command", "oracle threshold-set"}, {"shape", std::string(to_string(t.shape))},
                  {"a", t.a}, {"b", t.b}}
                 .dump()
          << '\n';
    };
  });
  auto* opt = oracle->add_subcommand("opt-proxy", "ceil(1 / squared Hellinger distance)");
  add_pair(opt);
  opt->callback([&] {
    action = [&] {
      out << json{{"command", "oracle opt-proxy"},
                  {"samples", estimate_opt_samples(oa.mu, parse_mixture(oa.mix))}}
                 .dump()
          << '\n';
    };
  });
  auto* calibrate = oracle->add_subcommand("calibrate", "Measure the interval constant on a corpus");
  calibrate->add_option("--seed", oa.seed, "Corpus seed");
  calibrate->add_option("--count", oa.count, "Corpus size")->check(CLI::PositiveNumber);
  calibrate->add_option("--out", oa.out, "Write the corpus fixture here");
  calibrate->callback([&] {
    action = [&] {
      const Calibration c = calibrate_interval_constant(oa.seed, oa.count);
      json instances = json::array();
      for (const auto& inst : c.instances) {
        instances.push_back({{"mu", inst.mu}, {"rates", inst.rates}, {"eps", inst.eps},
                             {"x_max", inst.x_max}, {"a", inst.best.a}, {"b", inst.best.b},
                             {"best", inst.best.value}, {"constant", inst.constant}});
      }
      const json fixture = {{"seed", c.seed}, {"count", oa.count}, {"constant", c.constant},
                            {"instances", instances}};
      if (!oa.out.empty()) {
        std::ofstream f(oa.out);
        if (!f) throw IoError("cannot open '" + oa.out + "' for writing");
        f << fixture.dump(2) << '\n';
        if (!f) throw IoError("failed writing '" + oa.out + "'");
      }
      out << json{{"command", "oracle calibrate"}, {"seed", c.seed}, {"count", oa.count},
                  {"constant", c.constant}}
                 .dump()
          << '\n';
    };
  });

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo experiment from a JSON config");
  simulate->add_option("--config", sim_args.config, "Config file; - for stdin")->required();
  simulate->add_option("--seed", sim_args.seed, "Master seed");
  simulate->add_option("--trials", sim_args.trials, "Trial count")->check(CLI::PositiveNumber);
  simulate->add_option("--threads", sim_args.threads, "Worker threads")->check(CLI::PositiveNumber);
  simulate->add_option("--out", sim_args.out, "Record file; stdout when absent");
  simulate->add_option("--format", sim_args.format, "Record format")
      ->check(CLI::IsMember({"jsonl", "csv"}));
  simulate->callback([&] { action = [&] { run_simulate(sim_args, in, out, err); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    action();
    out.flush();
    return kExitOk;
  } catch (const IoError& e) {
    err << "unifwatch: " << e.what() << '\n';
    return kExitIoError;
  } catch (const std::invalid_argument& e) {
    err << "unifwatch: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::domain_error& e) {
    err << "unifwatch: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "unifwatch: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace unifwatch
