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

#include "unifwatch/harness.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <thread>

#include "unifwatch/poisson.h"
#include "unifwatch/rng.h"
#include "unifwatch/tracker.h"
#include "unifwatch/uniformity_tester.h"

namespace unifwatch {
namespace {

using nlohmann::json;

struct NamedFamily {
  const char* name;
  FamilyKind kind;
};
constexpr NamedFamily kFamilies[] = {{"uniform", FamilyKind::kUniform},
                                     {"heavy_element", FamilyKind::kHeavyElement},
                                     {"uniform_subset", FamilyKind::kUniformSubset},
                                     {"two_level", FamilyKind::kTwoLevel},
                                     {"explicit", FamilyKind::kExplicit}};

struct NamedTester {
  const char* name;
  TesterKind kind;
};
constexpr NamedTester kTesters[] = {{"test", TesterKind::kTest},
                                    {"collision_count", TesterKind::kCollisionCount},
                                    {"track", TesterKind::kTrack},
                                    {"collision_count_doubling", TesterKind::kCollisionCountDoubling}};

std::string family_name(FamilyKind kind) {
  for (const auto& f : kFamilies) {
    if (f.kind == kind) return f.name;
  }
  return "unknown";
}

std::string tester_name(TesterKind kind) {
  for (const auto& t : kTesters) {
    if (t.kind == kind) return t.name;
  }
  return "unknown";
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& item : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* k) { return item.key() == k; })) {
      throw ConfigError(std::string(where) + ": unknown key '" + item.key() + "'");
    }
  }
}

template <typename T>
void read_optional(const json& j, const char* key, T& target) {
  if (j.contains(key)) target = j.at(key).get<T>();
}

template <typename T>
void read_optional(const json& j, const char* key, std::optional<T>& target) {
  if (j.contains(key)) target = j.at(key).get<T>();
}

std::int64_t stage_power(std::int64_t h) { return std::int64_t{1} << h; }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  if (quoted) throw std::runtime_error("csv: unterminated quote");
  return fields;
}

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

DiscreteDistribution realize_family(const FamilySpec& spec) {
  if (spec.kind == FamilyKind::kExplicit) {
    if (!spec.probs.empty() && static_cast<std::int64_t>(spec.probs.size()) != spec.n) {
      throw ConfigError("explicit family: n does not match the number of probabilities");
    }
    try {
      return DiscreteDistribution(Eigen::Map<const Vector<double>>(
          spec.probs.data(), static_cast<Eigen::Index>(spec.probs.size())));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("explicit family: ") + e.what());
    }
  }
  if (spec.n < 1) throw ConfigError("family: n must be >= 1");
  const auto n = static_cast<Eigen::Index>(spec.n);
  const double nd = static_cast<double>(spec.n);
  Vector<double> p = Vector<double>::Zero(n);
  switch (spec.kind) {
    case FamilyKind::kUniform:
      p.setConstant(1.0 / nd);
      break;
    case FamilyKind::kHeavyElement:
      if (!(spec.beta >= 0.0 && spec.beta <= 1.0)) {
        throw ConfigError("heavy_element: beta must be in [0, 1]");
      }
      p.setConstant((1.0 - spec.beta) / nd);
      p[n - 1] += spec.beta;
      break;
    case FamilyKind::kUniformSubset: {
      if (!(spec.fraction > 0.0 && spec.fraction <= 1.0)) {
        throw ConfigError("uniform_subset: fraction must be in (0, 1]");
      }
      const std::int64_t k = std::max<std::int64_t>(1, std::llround(spec.fraction * nd));
      Rng rng(spec.seed);
      const std::vector<std::size_t> perm = uniform_permutation(static_cast<std::size_t>(n), rng);
      for (std::int64_t i = 0; i < k; ++i) {
        p[static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)])] = 1.0 / static_cast<double>(k);
      }
      break;
    }
    case FamilyKind::kTwoLevel: {
      if (!(spec.mass_split >= 0.0 && spec.mass_split <= 1.0)) {
        throw ConfigError("two_level: mass_split must be in [0, 1]");
      }
      const std::int64_t k = std::llround(spec.support_split * nd);
      if (k < 1 || k >= spec.n) {
        throw ConfigError("two_level: support_split must leave both levels nonempty");
      }
      const auto kk = static_cast<Eigen::Index>(k);
      p.head(kk).setConstant(spec.mass_split / static_cast<double>(k));
      p.tail(n - kk).setConstant((1.0 - spec.mass_split) / static_cast<double>(spec.n - k));
      break;
    }
    case FamilyKind::kExplicit:
      break;
  }
  return DiscreteDistribution(p);
}

void validate(const ExperimentConfig& config) {
  if (config.trials < 1) throw ConfigError("trials must be >= 1");
  if (config.threads < 1) throw ConfigError("threads must be >= 1");
  if (config.format != "jsonl" && config.format != "csv") {
    throw ConfigError("format must be jsonl or csv");
  }
  const TesterSpec& t = config.tester;
  if (!(t.delta > 0.0 && t.delta < 1.0)) throw ConfigError("tester: delta must be in (0, 1)");
  if (t.m < 1) throw ConfigError("tester: m must be >= 1");
  if (t.kind == TesterKind::kCollisionCount && t.m < 2) {
    throw ConfigError("collision_count: m must be >= 2");
  }
  if (t.max_stage < 1 || t.max_stage > 40) throw ConfigError("tester: max_stage must be in [1, 40]");
  const DiscreteDistribution p = realize_family(config.family);
  if (p.size() < 2) throw ConfigError("family: n must be >= 2");
}

Proportion wilson_interval(std::int64_t successes, std::int64_t trials, double z) {
  if (trials < 1 || successes < 0 || successes > trials) {
    throw std::invalid_argument("wilson_interval: need 0 <= successes <= trials, trials >= 1");
  }
  Proportion out;
  out.successes = successes;
  out.trials = trials;
  const double nn = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (phat + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn)) / denom;
  out.rate = phat;
  out.lower = std::max(0.0, center - half);
  out.upper = std::min(1.0, center + half);
  return out;
}

TrialRecord run_trial(const ExperimentConfig& config, const DiscreteDistribution& p,
                      std::int64_t trial) {
  const auto start = std::chrono::steady_clock::now();
  const Rng trial_rng = Rng(config.seed).child(static_cast<std::uint64_t>(trial));
  DistributionSampleStream stream(p, trial_rng.child(0));
  const TesterSpec& t = config.tester;
  const std::int64_t n = p.size();
  TrialRecord rec;
  rec.trial = trial;
  rec.seed = trial_rng.seed();
  switch (t.kind) {
    case TesterKind::kTest: {
      UniformityTestConfig cfg;
      cfg.n = n;
      cfg.m = t.m;
      cfg.delta = t.delta;
      cfg.group_factor = t.group_factor;
      cfg.overrides = t.overrides;
      const UniformityResult result = test_uniformity(cfg, stream, trial_rng.child(1));
      rec.verdict = std::string(to_string(result.verdict.outcome));
      rec.branch = std::string(to_string(result.report.branch));
      rec.samples = result.report.samples_consumed;
      rec.stages = 1;
      rec.witness = result.verdict.witness;
      break;
    }
    case TesterKind::kCollisionCount: {
      const Verdict v = collision_count_baseline(n, t.m, stream);
      rec.verdict = std::string(to_string(v.outcome));
      rec.branch = "collision-count";
      rec.samples = stream.consumed();
      rec.stages = 1;
      break;
    }
    case TesterKind::kTrack: {
      TrackerConfig cfg;
      cfg.n = n;
      cfg.delta = t.delta;
      cfg.max_stage = t.max_stage;
      cfg.group_factor = t.group_factor;
      cfg.overrides = t.overrides;
      Tracker tracker(cfg, trial_rng.child(1));
      while (tracker.status() == TrackerStatus::kPlausible) tracker.feed(*stream.next());
      rec.verdict = tracker.status() == TrackerStatus::kRejected ? "reject" : "budget-exhausted";
      rec.samples = tracker.samples_consumed();
      rec.stages = static_cast<std::int64_t>(tracker.stages().size());
      if (!tracker.stages().empty()) {
        rec.branch = std::string(to_string(tracker.stages().back().branch));
        if (tracker.status() == TrackerStatus::kRejected) {
          rec.witness = tracker.stages().back().witness;
        }
      }
      break;
    }
    case TesterKind::kCollisionCountDoubling: {
      rec.verdict = "budget-exhausted";
      rec.branch = "collision-count";
      // Stage h uses m = 2^h fresh samples, h = 1 .. max_stage.
      for (std::int64_t h = 1; h <= t.max_stage; ++h) {
        ++rec.stages;
        if (collision_count_baseline(n, stage_power(h), stream).rejected()) {
          rec.verdict = "reject";
          break;
        }
      }
      rec.samples = stream.consumed();
      break;
    }
  }
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
  return rec;
}

ExperimentSummary summarize(const std::vector<TrialRecord>& records) {
  ExperimentSummary s;
  s.trials = static_cast<std::int64_t>(records.size());
  if (records.empty()) return s;
  std::int64_t accepts = 0;
  std::int64_t rejects = 0;
  double samples = 0.0;
  std::vector<double> to_reject;
  for (const auto& r : records) {
    samples += static_cast<double>(r.samples);
    if (r.verdict == "accept") {
      ++accepts;
    } else if (r.verdict == "reject") {
      ++rejects;
      to_reject.push_back(static_cast<double>(r.samples));
    }
  }
  s.accept = wilson_interval(accepts, s.trials);
  s.reject = wilson_interval(rejects, s.trials);
  s.other = s.trials - accepts - rejects;
  s.mean_samples = samples / static_cast<double>(s.trials);
  if (!to_reject.empty()) {
    const double k = static_cast<double>(to_reject.size());
    const double mean = std::accumulate(to_reject.begin(), to_reject.end(), 0.0) / k;
    double ss = 0.0;
    for (double v : to_reject) ss += (v - mean) * (v - mean);
    s.mean_samples_to_reject = mean;
    s.stderr_samples_to_reject = to_reject.size() > 1 ? std::sqrt(ss / (k - 1.0) / k) : 0.0;
  }
  return s;
}

Experiment run_experiment(const ExperimentConfig& config) {
  validate(config);
  const DiscreteDistribution p = realize_family(config.family);
  Experiment ex;
  ex.records.resize(static_cast<std::size_t>(config.trials));
  std::atomic<std::int64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    while (true) {
      const std::int64_t i = next.fetch_add(1);
      if (i >= config.trials) return;
      try {
        ex.records[static_cast<std::size_t>(i)] = run_trial(config, p, i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = config.trials;
      }
    }
  };
  const int threads =
      static_cast<int>(std::min<std::int64_t>(config.threads, config.trials));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  ex.summary = summarize(ex.records);
  return ex;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    check_keys(j, {"family", "tester", "trials", "seed", "threads", "out", "format"}, "config");
    const json& f = j.at("family");
    check_keys(f,
               {"kind", "n", "beta", "fraction", "mass_split", "support_split", "probs", "seed"},
               "family");
    const auto kind = f.at("kind").get<std::string>();
    const auto* fam = std::find_if(std::begin(kFamilies), std::end(kFamilies),
                                   [&](const NamedFamily& x) { return kind == x.name; });
    if (fam == std::end(kFamilies)) throw ConfigError("family: unknown kind '" + kind + "'");
    c.family.kind = fam->kind;
    read_optional(f, "beta", c.family.beta);
    read_optional(f, "fraction", c.family.fraction);
    read_optional(f, "mass_split", c.family.mass_split);
    read_optional(f, "support_split", c.family.support_split);
    read_optional(f, "probs", c.family.probs);
    read_optional(f, "seed", c.family.seed);
    if (c.family.kind == FamilyKind::kExplicit && !f.contains("n")) {
      c.family.n = static_cast<std::int64_t>(c.family.probs.size());
    } else {
      c.family.n = f.at("n").get<std::int64_t>();
    }

    const json& t = j.at("tester");
    check_keys(t, {"kind", "m", "delta", "max_stage", "group_factor", "r", "s", "x_max", "tau"},
               "tester");
    const auto tkind = t.at("kind").get<std::string>();
    const auto* tes = std::find_if(std::begin(kTesters), std::end(kTesters),
                                   [&](const NamedTester& x) { return tkind == x.name; });
    if (tes == std::end(kTesters)) throw ConfigError("tester: unknown kind '" + tkind + "'");
    c.tester.kind = tes->kind;
    read_optional(t, "m", c.tester.m);
    read_optional(t, "delta", c.tester.delta);
    read_optional(t, "max_stage", c.tester.max_stage);
    read_optional(t, "group_factor", c.tester.group_factor);
    read_optional(t, "r", c.tester.overrides.r);
    read_optional(t, "s", c.tester.overrides.s);
    read_optional(t, "x_max", c.tester.overrides.x_max);
    read_optional(t, "tau", c.tester.overrides.tau);

    read_optional(j, "trials", c.trials);
    read_optional(j, "seed", c.seed);
    read_optional(j, "threads", c.threads);
    read_optional(j, "out", c.out);
    read_optional(j, "format", c.format);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  validate(c);
  return c;
}

json to_json(const ExperimentConfig& c) {
  json f = {{"kind", family_name(c.family.kind)}, {"n", c.family.n}, {"seed", c.family.seed}};
  switch (c.family.kind) {
    case FamilyKind::kHeavyElement:
      f["beta"] = c.family.beta;
      break;
    case FamilyKind::kUniformSubset:
      f["fraction"] = c.family.fraction;
      break;
    case FamilyKind::kTwoLevel:
      f["mass_split"] = c.family.mass_split;
      f["support_split"] = c.family.support_split;
      break;
    case FamilyKind::kExplicit:
      f["probs"] = c.family.probs;
      break;
    case FamilyKind::kUniform:
      break;
  }
  json t = {{"kind", tester_name(c.tester.kind)},
            {"m", c.tester.m},
            {"delta", c.tester.delta},
            {"max_stage", c.tester.max_stage},
            {"group_factor", c.tester.group_factor}};
  if (c.tester.overrides.r) t["r"] = *c.tester.overrides.r;
  if (c.tester.overrides.s) t["s"] = *c.tester.overrides.s;
  if (c.tester.overrides.x_max) t["x_max"] = *c.tester.overrides.x_max;
  if (c.tester.overrides.tau) t["tau"] = *c.tester.overrides.tau;
  json j = {{"family", f},           {"tester", t},  {"trials", c.trials},
            {"seed", c.seed},        {"threads", c.threads}, {"format", c.format}};
  if (!c.out.empty()) j["out"] = c.out;
  return j;
}

json to_json(const Witness& witness) {
  if (const auto* w = std::get_if<IntervalWitness>(&witness)) {
    json j = {{"type", "interval"},          {"a", w->a},
              {"b", w->b},                   {"mu_interval", w->mu_interval},
              {"est_interval", w->est_interval}, {"hellinger", w->hellinger},
              {"threshold", w->threshold}};
    if (w->repeat) j["repeat"] = *w->repeat;
    if (w->subset_size) j["subset_size"] = *w->subset_size;
    return j;
  }
  const auto& c = std::get<CollisionWitness>(witness);
  return {{"type", "collision"},
          {"colliding_groups", c.colliding_groups},
          {"groups", c.groups},
          {"group_size", c.group_size}};
}

Witness witness_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "interval") {
    IntervalWitness w;
    w.a = j.at("a").get<std::int64_t>();
    w.b = j.at("b").get<std::int64_t>();
    w.mu_interval = j.at("mu_interval").get<double>();
    w.est_interval = j.at("est_interval").get<double>();
    w.hellinger = j.at("hellinger").get<double>();
    w.threshold = j.at("threshold").get<double>();
    if (j.contains("repeat")) w.repeat = j.at("repeat").get<std::int64_t>();
    if (j.contains("subset_size")) w.subset_size = j.at("subset_size").get<std::int64_t>();
    return w;
  }
  if (type == "collision") {
    return CollisionWitness{j.at("colliding_groups").get<std::int64_t>(),
                            j.at("groups").get<std::int64_t>(),
                            j.at("group_size").get<std::int64_t>()};
  }
  throw std::invalid_argument("unknown witness type '" + type + "'");
}

json to_json(const TrialRecord& r) {
  json j = {{"trial", r.trial},     {"seed", r.seed},     {"verdict", r.verdict},
            {"branch", r.branch},   {"samples", r.samples}, {"stages", r.stages},
            {"wall_ms", r.wall_ms}};
  j["witness"] = r.witness ? to_json(*r.witness) : json(nullptr);
  return j;
}

TrialRecord record_from_json(const json& j) {
  TrialRecord r;
  r.trial = j.at("trial").get<std::int64_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.verdict = j.at("verdict").get<std::string>();
  r.branch = j.at("branch").get<std::string>();
  r.samples = j.at("samples").get<std::int64_t>();
  r.stages = j.at("stages").get<std::int64_t>();
  r.wall_ms = j.value("wall_ms", 0.0);
  if (j.contains("witness") && !j.at("witness").is_null()) {
    r.witness = witness_from_json(j.at("witness"));
  }
  return r;
}

json to_json(const ExperimentSummary& s) {
  const auto prop = [](const Proportion& p) {
    return json{{"count", p.successes}, {"rate", p.rate}, {"wilson_lower", p.lower},
                {"wilson_upper", p.upper}};
  };
  return {{"trials", s.trials},
          {"accept", prop(s.accept)},
          {"reject", prop(s.reject)},
          {"other", s.other},
          {"mean_samples", s.mean_samples},
          {"mean_samples_to_reject", s.mean_samples_to_reject},
          {"stderr_samples_to_reject", s.stderr_samples_to_reject}};
}

void write_jsonl(std::ostream& out, const std::vector<TrialRecord>& records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

std::vector<TrialRecord> read_jsonl(std::istream& in) {
  std::vector<TrialRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("jsonl line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

void write_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
  out << "trial,seed,verdict,branch,samples,stages,wall_ms,witness\n";
  for (const auto& r : records) {
    out << r.trial << ',' << r.seed << ',' << csv_quote(r.verdict) << ',' << csv_quote(r.branch)
        << ',' << r.samples << ',' << r.stages << ',' << format_double(r.wall_ms) << ','
        << (r.witness ? csv_quote(to_json(*r.witness).dump()) : std::string()) << '\n';
  }
}

std::vector<TrialRecord> read_csv(std::istream& in) {
  std::vector<TrialRecord> records;
  std::string line;
  if (!std::getline(in, line)) return records;
  if (split_csv_line(line).size() != 8) throw std::runtime_error("csv: unexpected header");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const std::vector<std::string> f = split_csv_line(line);
      if (f.size() != 8) throw std::runtime_error("expected 8 fields");
      TrialRecord r;
      r.trial = std::stoll(f[0]);
      r.seed = std::stoull(f[1]);
      r.verdict = f[2];
      r.branch = f[3];
      r.samples = std::stoll(f[4]);
      r.stages = std::stoll(f[5]);
      r.wall_ms = std::stod(f[6]);
      if (!f[7].empty()) r.witness = witness_from_json(json::parse(f[7]));
      records.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw std::runtime_error("csv line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace unifwatch
