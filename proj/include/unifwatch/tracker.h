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

#ifndef UNIFWATCH_TRACKER_H_
#define UNIFWATCH_TRACKER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "unifwatch/poisson.h"
#include "unifwatch/rng.h"
#include "unifwatch/uniformity_tester.h"
#include "unifwatch/verdict.h"

namespace unifwatch {

enum class TrackerSignal { kPlausible, kReject };

enum class TrackerStatus { kPlausible, kRejected, kBudgetExhausted };

constexpr std::string_view to_string(TrackerSignal signal) {
  return signal == TrackerSignal::kPlausible ? "plausible" : "reject";
}

constexpr std::string_view to_string(TrackerStatus status) {
  switch (status) {
    case TrackerStatus::kPlausible:
      return "plausible";
    case TrackerStatus::kRejected:
      return "rejected";
    case TrackerStatus::kBudgetExhausted:
      return "budget-exhausted";
  }
  return "unknown";
}

struct TrackerConfig {
  std::int64_t n = 2;
  double delta = 0.1;
  // Stages 0 .. max_stage-1 run; finishing the last one without a
  // rejection ends in kBudgetExhausted. Unset means no limit.
  std::optional<std::int64_t> max_stage;
  double group_factor = 48.0;
  FullConstants constants;
  FullOverrides overrides;
};

struct StageRecord {
  std::int64_t stage = 0;
  std::int64_t m = 1;
  double delta = 0.0;
  Branch branch = Branch::kCollision;
  std::int64_t samples = 0;
  Outcome outcome = Outcome::kAccept;
  std::optional<Witness> witness;
};

// Anytime uniformity tracker: stage h tests budget m = 2^h at failure
// probability min(delta / 2^(h+1), 1/10), each stage with its own RNG child.
class Tracker {
 public:
  Tracker(const TrackerConfig& config, const Rng& rng);

  // Buffers one symbol; returns kReject exactly once, on the symbol that
  // completes a rejecting stage. Throws std::logic_error once the status
  // is terminal.
  TrackerSignal feed(Symbol symbol);

  TrackerStatus status() const { return status_; }
  std::int64_t stage() const { return stage_; }
  std::int64_t stage_m() const { return std::int64_t{1} << stage_; }
  double current_stage_delta() const { return stage_delta(config_.delta, stage_); }
  std::int64_t stage_target() const;
  std::int64_t stage_consumed() const { return static_cast<std::int64_t>(buffer_.size()); }
  std::int64_t samples_consumed() const { return consumed_; }
  const std::vector<StageRecord>& stages() const { return records_; }
  const TrackerConfig& config() const { return config_; }

  static double stage_delta(double delta, std::int64_t stage);

 private:
  void start_stage();
  void finish_stage(const UniformityResult& result);

  TrackerConfig config_;
  Rng rng_;
  TrackerStatus status_ = TrackerStatus::kPlausible;
  std::int64_t stage_ = 0;
  std::int64_t consumed_ = 0;
  std::optional<UniformityTest> test_;
  std::vector<Symbol> buffer_;
  std::vector<StageRecord> records_;
};

// sum_{l<h} s(2^l) + sum_{h'>=h} 10^{-(h'-h)} s(2^{h'}), the second sum
// taken until a term falls below tol times the running total.
double tracker_expected_samples_bound(const std::function<double(double)>& stage_samples,
                                      std::int64_t h, double tol = 1e-15);

}  // namespace unifwatch

#endif  // UNIFWATCH_TRACKER_H_
