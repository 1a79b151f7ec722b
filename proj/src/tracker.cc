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

#include "unifwatch/tracker.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace unifwatch {

Tracker::Tracker(const TrackerConfig& config, const Rng& rng) : config_(config), rng_(rng) {
  if (config_.n < 2) throw std::invalid_argument("Tracker: n must be >= 2");
  if (!(config_.delta > 0.0 && config_.delta <= 1.0)) {
    throw std::invalid_argument("Tracker: delta must be in (0, 1]");
  }
  if (config_.max_stage && (*config_.max_stage < 1 || *config_.max_stage > 62)) {
    throw std::invalid_argument("Tracker: max_stage must be in [1, 62]");
  }
  start_stage();
}

double Tracker::stage_delta(double delta, std::int64_t stage) {
  return std::min(delta / std::ldexp(2.0, static_cast<int>(stage)), 0.1);
}

std::int64_t Tracker::stage_target() const { return test_ ? test_->sample_target() : 0; }

void Tracker::start_stage() {
  // A stage may need no samples (its Poisson draw overshot the cap); such
  // stages resolve on the spot.
  while (status_ == TrackerStatus::kPlausible) {
    if (stage_ > 62) {
      status_ = TrackerStatus::kBudgetExhausted;
      return;
    }
    UniformityTestConfig cfg;
    cfg.n = config_.n;
    cfg.m = stage_m();
    cfg.delta = current_stage_delta();
    cfg.group_factor = config_.group_factor;
    cfg.constants = config_.constants;
    cfg.overrides = config_.overrides;
    test_.emplace(cfg, rng_.child(static_cast<std::uint64_t>(stage_)));
    buffer_.clear();
    buffer_.reserve(static_cast<std::size_t>(test_->sample_target()));
    if (test_->sample_target() > 0) return;
    finish_stage(test_->resolve({}));
  }
}

void Tracker::finish_stage(const UniformityResult& result) {
  StageRecord record;
  record.stage = stage_;
  record.m = stage_m();
  record.delta = current_stage_delta();
  record.branch = result.report.branch;
  record.samples = result.report.samples_consumed;
  record.outcome = result.verdict.outcome;
  record.witness = result.verdict.witness;
  records_.push_back(std::move(record));
  if (result.verdict.rejected()) {
    status_ = TrackerStatus::kRejected;
    return;
  }
  ++stage_;
  if (config_.max_stage && stage_ >= *config_.max_stage) {
    status_ = TrackerStatus::kBudgetExhausted;
  }
}

TrackerSignal Tracker::feed(Symbol symbol) {
  if (status_ != TrackerStatus::kPlausible) {
    throw std::logic_error("Tracker::feed: tracker already " + std::string(to_string(status_)));
  }
  if (symbol < 1 || symbol > config_.n) {
    throw std::invalid_argument("Tracker::feed: symbol " + std::to_string(symbol) +
                                " outside [1, " + std::to_string(config_.n) + "]");
  }
  buffer_.push_back(symbol);
  ++consumed_;
  if (static_cast<std::int64_t>(buffer_.size()) < test_->sample_target()) {
    return TrackerSignal::kPlausible;
  }
  finish_stage(test_->resolve(buffer_));
  if (status_ == TrackerStatus::kRejected) return TrackerSignal::kReject;
  start_stage();
  return status_ == TrackerStatus::kRejected ? TrackerSignal::kReject : TrackerSignal::kPlausible;
}

double tracker_expected_samples_bound(const std::function<double(double)>& stage_samples,
                                      std::int64_t h, double tol) {
  if (h < 0) throw std::invalid_argument("tracker_expected_samples_bound: h must be >= 0");
  double total = 0.0;
  for (std::int64_t l = 0; l < h; ++l) total += stage_samples(std::ldexp(1.0, static_cast<int>(l)));
  double weight = 1.0;
  for (std::int64_t j = 0; h + j < 1000; ++j, weight *= 0.1) {
    const double term = weight * stage_samples(std::ldexp(1.0, static_cast<int>(h + j)));
    total += term;
    if (!std::isfinite(total)) break;
    if (j > 0 && term <= tol * total) return total;
  }
  throw std::domain_error("tracker_expected_samples_bound: series did not converge");
}

}  // namespace unifwatch
