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

// Sampling, Poissonization and Poisson splitting.
//
// Samplers are exact (no normal approximations):
//   * Poisson: sequential inversion below rate 30, Hormann's PTRS
//     transformed rejection above.
//   * Binomial: BINV inversion when n * min(p, 1-p) < 10, Hormann's BTRS
//     transformed rejection otherwise.
// Every draw comes from a caller-owned Rng, so results are reproducible
// bit for bit from the seed.

#ifndef UNIFWATCH_POISSON_H_
#define UNIFWATCH_POISSON_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "unifwatch/distances.h"
#include "unifwatch/rng.h"

namespace unifwatch {

// Domain symbols are 1-based: a sample over [n] takes values 1..n.
using Symbol = std::int64_t;

// Per-symbol counts; entry i counts symbol i + 1.
class FrequencyVector {
 public:
  FrequencyVector() = default;
  explicit FrequencyVector(std::vector<std::int64_t> counts);

  static FrequencyVector zeros(std::size_t n) {
    return FrequencyVector(std::vector<std::int64_t>(n, 0));
  }

  std::size_t size() const { return counts_.size(); }
  std::int64_t operator[](std::size_t i) const { return counts_[i]; }
  const std::vector<std::int64_t>& counts() const { return counts_; }
  std::int64_t total() const;

  friend bool operator==(const FrequencyVector&, const FrequencyVector&) = default;

 private:
  std::vector<std::int64_t> counts_;
};

std::int64_t sample_poisson(double rate, Rng& rng);
std::int64_t sample_binomial(std::int64_t trials, double p, Rng& rng);

// Occupancy counts of y uniform throws into s bins. If y ~ Poi(s * l) the s
// outputs are i.i.d. Poi(l). Uses y direct throws when y < s and sequential
// binomial splitting (bin j gets Bin(remaining, 1/(s-j))) otherwise.
std::vector<std::int64_t> poisson_split(std::int64_t y, std::int64_t s, Rng& rng);

// Histogram of the values poisson_split(y, s, rng) would return, without
// materialising the s counts: entry v in [0, x_max] counts bins holding v,
// entry x_max + 1 counts bins holding more. Consumes the generator exactly
// like poisson_split.
std::vector<std::int64_t> poisson_split_histogram(std::int64_t y, std::int64_t s,
                                                  std::int64_t x_max, Rng& rng);

// Fisher-Yates with Rng::uniform_below.
template <typename T>
void shuffle(std::span<T> values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_below(i));
    std::swap(values[i - 1], values[j]);
  }
}

// Uniform permutation of {0, ..., n-1}.
std::vector<std::size_t> uniform_permutation(std::size_t n, Rng& rng);

// counts[i] = multiplicity of symbol i + 1. Throws on symbols outside [1, n].
FrequencyVector poissonize(std::span<const Symbol> samples, std::int64_t n);

// Uniformly shuffled sequence holding symbol i + 1 exactly counts[i] times.
std::vector<Symbol> depoissonize(const FrequencyVector& freq, Rng& rng);

// Permutes the rate vector uniformly, then draws each coordinate from its
// Poisson independently: a sample of Perm(Poi(rates_1), ..., Poi(rates_n)).
FrequencyVector sample_perm_poisson(std::span<const double> rates, Rng& rng);

// Walker/Vose alias table over a DiscreteDistribution; O(1) per draw.
class AliasSampler {
 public:
  explicit AliasSampler(const DiscreteDistribution& p);
  Symbol operator()(Rng& rng) const;
  std::int64_t domain_size() const { return static_cast<std::int64_t>(prob_.size()); }

 private:
  std::vector<double> prob_;
  std::vector<std::int64_t> alias_;
};

// Source of i.i.d. symbols for the testers.
class SampleStream {
 public:
  virtual ~SampleStream() = default;
  // Next symbol, or nullopt once exhausted.
  virtual std::optional<Symbol> next() = 0;
  std::int64_t consumed() const { return consumed_; }

 protected:
  void count_one() { ++consumed_; }

 private:
  std::int64_t consumed_ = 0;
};

class VectorSampleStream : public SampleStream {
 public:
  explicit VectorSampleStream(std::vector<Symbol> symbols) : symbols_(std::move(symbols)) {}
  std::optional<Symbol> next() override;

 private:
  std::vector<Symbol> symbols_;
  std::size_t pos_ = 0;
};

// Endless stream of draws from a fixed distribution.
class DistributionSampleStream : public SampleStream {
 public:
  DistributionSampleStream(const DiscreteDistribution& p, Rng rng)
      : sampler_(p), rng_(rng) {}
  std::optional<Symbol> next() override;

 private:
  AliasSampler sampler_;
  Rng rng_;
};

// Newline-delimited decimal integers. Blank lines are skipped; anything else
// that is not an integer throws std::invalid_argument naming the line.
std::vector<std::int64_t> read_integers(std::istream& in);
FrequencyVector read_frequency_vector(std::istream& in);
void write_frequency_vector(std::ostream& out, const FrequencyVector& freq);
std::vector<Symbol> read_symbols(std::istream& in, std::int64_t n);
void write_symbols(std::ostream& out, std::span<const Symbol> symbols);

}  // namespace unifwatch

#endif  // UNIFWATCH_POISSON_H_
