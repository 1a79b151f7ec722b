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

#ifndef UNIFWATCH_VERDICT_H_
#define UNIFWATCH_VERDICT_H_

#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>

namespace unifwatch {

enum class Outcome { kAccept, kReject, kBudgetExceeded };

constexpr std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::kAccept:
      return "accept";
    case Outcome::kReject:
      return "reject";
    case Outcome::kBudgetExceeded:
      return "budget-exceeded";
  }
  return "unknown";
}

// The interval [a, b] whose empirical mass strayed from the null mass.
// `repeat` and `subset_size` are set by the full tester only.
struct IntervalWitness {
  std::int64_t a = 0;
  std::int64_t b = 0;
  double mu_interval = 0.0;
  double est_interval = 0.0;
  double hellinger = 0.0;
  double threshold = 0.0;
  std::optional<std::int64_t> repeat;
  std::optional<std::int64_t> subset_size;

  friend bool operator==(const IntervalWitness&, const IntervalWitness&) = default;
};

struct CollisionWitness {
  std::int64_t colliding_groups = 0;
  std::int64_t groups = 0;
  std::int64_t group_size = 0;

  friend bool operator==(const CollisionWitness&, const CollisionWitness&) = default;
};

using Witness = std::variant<IntervalWitness, CollisionWitness>;

struct Verdict {
  Outcome outcome = Outcome::kAccept;
  std::optional<Witness> witness;

  bool accepted() const { return outcome == Outcome::kAccept; }
  bool rejected() const { return outcome == Outcome::kReject; }

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

}  // namespace unifwatch

#endif  // UNIFWATCH_VERDICT_H_
