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

#ifndef UNIFWATCH_HARNESS_H_
#define UNIFWATCH_HARNESS_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "unifwatch/distances.h"
#include "unifwatch/full_tester.h"
#include "unifwatch/verdict.h"

namespace unifwatch {

// Malformed or out-of-range experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class FamilyKind { kUniform, kHeavyElement, kUniformSubset, kTwoLevel, kExplicit };

struct FamilySpec {
  FamilyKind kind = FamilyKind::kUniform;
  std::int64_t n = 2;
  // heavy_element: the last symbol gets beta + (1 - beta)/n, the others (1 - beta)/n.
  double beta = 0.0;
  // uniform_subset: uniform over llround(fraction * n) symbols chosen by `seed`.
  double fraction = 1.0;
  // two_level: the first llround(support_split * n) symbols share mass_split.
  double mass_split = 0.5;
  double support_split = 0.5;
  std::vector<double> probs;
  std::uint64_t seed = 0;
};

DiscreteDistribution realize_family(const FamilySpec& spec);

enum class TesterKind { kTest, kCollisionCount, kTrack, kCollisionCountDoubling };

struct TesterSpec {
  TesterKind kind = TesterKind::kTest;
  std::int64_t m = 1;
  double delta = 0.1;
  // Stage cap for the tracker and for the doubling baseline.
  std::int64_t max_stage = 8;
  double group_factor = 48.0;
  FullOverrides overrides;
};

struct ExperimentConfig {
  FamilySpec family;
  TesterSpec tester;
  std::int64_t trials = 1;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
  std::string format = "jsonl";
};

void validate(const ExperimentConfig& config);

struct TrialRecord {
  std::int64_t trial = 0;
  std::uint64_t seed = 0;
  // accept, reject, budget-exceeded or budget-exhausted.
  std::string verdict;
  std::string branch;
  std::int64_t samples = 0;
  std::int64_t stages = 0;
  std::optional<Witness> witness;
  // Informational; ignored by operator==.
  double wall_ms = 0.0;

  friend bool operator==(const TrialRecord& x, const TrialRecord& y) {
    return x.trial == y.trial && x.seed == y.seed && x.verdict == y.verdict &&
           x.branch == y.branch && x.samples == y.samples && x.stages == y.stages &&
           x.witness == y.witness;
  }
};

struct Proportion {
  std::int64_t successes = 0;
  std::int64_t trials = 0;
  double rate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

// Wilson score interval at the given normal quantile (95% by default).
Proportion wilson_interval(std::int64_t successes, std::int64_t trials, double z = 1.959964);

struct ExperimentSummary {
  std::int64_t trials = 0;
  Proportion accept;
  Proportion reject;
  std::int64_t other = 0;
  double mean_samples = 0.0;
  // Over rejecting trials only; zero when none rejected.
  double mean_samples_to_reject = 0.0;
  double stderr_samples_to_reject = 0.0;
};

struct Experiment {
  std::vector<TrialRecord> records;
  ExperimentSummary summary;
};

// Trial i draws from Rng(seed).child(i); records are ordered by trial index
// however many threads run.
TrialRecord run_trial(const ExperimentConfig& config, const DiscreteDistribution& p,
                      std::int64_t trial);
Experiment run_experiment(const ExperimentConfig& config);
ExperimentSummary summarize(const std::vector<TrialRecord>& records);

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& config);
nlohmann::json to_json(const Witness& witness);
Witness witness_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrialRecord& record);
TrialRecord record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentSummary& summary);

void write_jsonl(std::ostream& out, const std::vector<TrialRecord>& records);
std::vector<TrialRecord> read_jsonl(std::istream& in);

// Columns: trial,seed,verdict,branch,samples,stages,wall_ms,witness; the
// witness column holds compact JSON.
void write_csv(std::ostream& out, const std::vector<TrialRecord>& records);
std::vector<TrialRecord> read_csv(std::istream& in);

}  // namespace unifwatch

#endif  // UNIFWATCH_HARNESS_H_
