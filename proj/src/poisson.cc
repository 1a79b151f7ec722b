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

#include "unifwatch/poisson.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace unifwatch {
namespace {

constexpr double kInversionRateLimit = 30.0;

std::int64_t poisson_inversion(double rate, Rng& rng) {
  const double p0 = std::exp(-rate);
  // Far beyond any mass a double can resolve; restart on the rare overrun.
  const double limit = rate + 40.0 * std::sqrt(rate) + 60.0;
  while (true) {
    const double u = rng.uniform01();
    double p = p0;
    double cdf = p;
    std::int64_t x = 0;
    while (u >= cdf) {
      ++x;
      p *= rate / static_cast<double>(x);
      cdf += p;
      if (static_cast<double>(x) > limit) break;
    }
    if (static_cast<double>(x) <= limit) return x;
  }
}

// PTRS, Hormann (1993) "The transformed rejection method for generating
// Poisson random variables". Valid for rate >= 10.
std::int64_t poisson_ptrs(double rate, Rng& rng) {
  const double log_rate = std::log(rate);
  const double b = 0.931 + 2.53 * std::sqrt(rate);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  while (true) {
    const double u = rng.uniform01() - 0.5;
    const double v = rng.uniform01();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + rate + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
    const double rhs = -rate + k * log_rate - std::lgamma(k + 1.0);
    if (lhs <= rhs) return static_cast<std::int64_t>(k);
  }
}

// BINV inversion for small n * p (p <= 1/2).
std::int64_t binomial_inversion(std::int64_t n, double p, Rng& rng) {
  const double q = 1.0 - p;
  const double s = p / q;
  const double a = static_cast<double>(n + 1) * s;
  const double r0 = std::exp(static_cast<double>(n) * std::log1p(-p));
  while (true) {
    double r = r0;
    double u = rng.uniform01();
    std::int64_t x = 0;
    bool overrun = false;
    while (u > r) {
      u -= r;
      ++x;
      if (x > n) {
        overrun = true;
        break;
      }
      r *= (a / static_cast<double>(x) - s);
    }
    if (!overrun) return x;
  }
}

// BTRS, Hormann (1993) "The generation of binomial random variates".
// Requires p <= 1/2 and n * p >= 10.
std::int64_t binomial_btrs(std::int64_t n, double p, Rng& rng) {
  const auto nd = static_cast<double>(n);
  const double q = 1.0 - p;
  const double spq = std::sqrt(nd * p * q);
  const double b = 1.15 + 2.53 * spq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = nd * p + 0.5;
  const double v_r = 0.92 - 4.2 / b;
  const double alpha = (2.83 + 5.1 / b) * spq;
  const double lpq = std::log(p / q);
  const double m = std::floor((nd + 1.0) * p);
  const double h = std::lgamma(m + 1.0) + std::lgamma(nd - m + 1.0);
  while (true) {
    const double u = rng.uniform01() - 0.5;
    double v = rng.uniform01();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + c);
    if (k < 0.0 || k > nd) continue;
    if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(k);
    v = std::log(v * alpha / (a / (us * us) + b));
    if (v <= h - std::lgamma(k + 1.0) - std::lgamma(nd - k + 1.0) + (k - m) * lpq) {
      return static_cast<std::int64_t>(k);
    }
  }
}

void check_split_args(std::int64_t y, std::int64_t s) {
  if (y < 0) throw std::invalid_argument("poisson_split: y must be >= 0");
  if (s < 1) throw std::invalid_argument("poisson_split: s must be >= 1");
}

// Runs the split draw sequence and reports each bin's final count through
// `emit(bin, count)`. Bins that receive nothing are only reported by the
// binomial path; callers account for untouched bins themselves.
template <typename Emit>
void split_draws(std::int64_t y, std::int64_t s, Rng& rng, std::vector<std::int64_t>& scratch,
                 Emit&& emit) {
  if (y < s) {
    scratch.resize(static_cast<std::size_t>(y));
    for (auto& bin : scratch) bin = static_cast<std::int64_t>(rng.uniform_below(static_cast<std::uint64_t>(s)));
    std::sort(scratch.begin(), scratch.end());
    for (std::size_t i = 0; i < scratch.size();) {
      std::size_t j = i;
      while (j < scratch.size() && scratch[j] == scratch[i]) ++j;
      emit(scratch[i], static_cast<std::int64_t>(j - i));
      i = j;
    }
    return;
  }
  std::int64_t remaining = y;
  for (std::int64_t j = 0; j + 1 < s; ++j) {
    const std::int64_t c =
        remaining == 0 ? 0 : sample_binomial(remaining, 1.0 / static_cast<double>(s - j), rng);
    emit(j, c);
    remaining -= c;
  }
  emit(s - 1, remaining);
}

std::string trim(const std::string& line) {
  const auto first = line.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = line.find_last_not_of(" \t\r");
  return line.substr(first, last - first + 1);
}

}  // namespace

FrequencyVector::FrequencyVector(std::vector<std::int64_t> counts) : counts_(std::move(counts)) {
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (counts_[i] < 0) {
      throw std::invalid_argument("FrequencyVector: negative count at index " + std::to_string(i));
    }
  }
}

std::int64_t FrequencyVector::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

std::int64_t sample_poisson(double rate, Rng& rng) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw std::invalid_argument("sample_poisson: rate must be finite and >= 0");
  }
  if (rate == 0.0) return 0;
  return rate < kInversionRateLimit ? poisson_inversion(rate, rng) : poisson_ptrs(rate, rng);
}

std::int64_t sample_binomial(std::int64_t trials, double p, Rng& rng) {
  if (trials < 0) throw std::invalid_argument("sample_binomial: trials must be >= 0");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("sample_binomial: p must be in [0,1]");
  if (trials == 0 || p == 0.0) return 0;
  if (p == 1.0) return trials;
  if (p > 0.5) return trials - sample_binomial(trials, 1.0 - p, rng);
  if (static_cast<double>(trials) * p < 10.0) return binomial_inversion(trials, p, rng);
  return binomial_btrs(trials, p, rng);
}

std::vector<std::int64_t> poisson_split(std::int64_t y, std::int64_t s, Rng& rng) {
  check_split_args(y, s);
  std::vector<std::int64_t> counts(static_cast<std::size_t>(s), 0);
  std::vector<std::int64_t> scratch;
  split_draws(y, s, rng, scratch, [&](std::int64_t bin, std::int64_t c) {
    counts[static_cast<std::size_t>(bin)] = c;
  });
  return counts;
}

std::vector<std::int64_t> poisson_split_histogram(std::int64_t y, std::int64_t s,
                                                  std::int64_t x_max, Rng& rng) {
  check_split_args(y, s);
  if (x_max < 0) throw std::invalid_argument("poisson_split_histogram: x_max must be >= 0");
  std::vector<std::int64_t> hist(static_cast<std::size_t>(x_max + 2), 0);
  std::vector<std::int64_t> scratch;
  std::int64_t reported = 0;
  split_draws(y, s, rng, scratch, [&](std::int64_t, std::int64_t c) {
    ++hist[static_cast<std::size_t>(std::min(c, x_max + 1))];
    ++reported;
  });
  hist[0] += s - reported;
  return hist;
}

std::vector<std::size_t> uniform_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  shuffle(std::span<std::size_t>(perm), rng);
  return perm;
}

FrequencyVector poissonize(std::span<const Symbol> samples, std::int64_t n) {
  if (n < 1) throw std::invalid_argument("poissonize: n must be >= 1");
  std::vector<std::int64_t> counts(static_cast<std::size_t>(n), 0);
  for (Symbol x : samples) {
    if (x < 1 || x > n) {
      throw std::out_of_range("poissonize: symbol " + std::to_string(x) + " outside [1, " +
                              std::to_string(n) + "]");
    }
    ++counts[static_cast<std::size_t>(x - 1)];
  }
  return FrequencyVector(std::move(counts));
}

std::vector<Symbol> depoissonize(const FrequencyVector& freq, Rng& rng) {
  std::vector<Symbol> out;
  out.reserve(static_cast<std::size_t>(freq.total()));
  for (std::size_t i = 0; i < freq.size(); ++i) {
    out.insert(out.end(), static_cast<std::size_t>(freq[i]), static_cast<Symbol>(i + 1));
  }
  shuffle(std::span<Symbol>(out), rng);
  return out;
}

FrequencyVector sample_perm_poisson(std::span<const double> rates, Rng& rng) {
  if (rates.empty()) throw std::invalid_argument("sample_perm_poisson: needs at least one rate");
  std::vector<double> permuted(rates.begin(), rates.end());
  shuffle(std::span<double>(permuted), rng);
  std::vector<std::int64_t> counts(permuted.size());
  for (std::size_t i = 0; i < permuted.size(); ++i) counts[i] = sample_poisson(permuted[i], rng);
  return FrequencyVector(std::move(counts));
}

AliasSampler::AliasSampler(const DiscreteDistribution& p) {
  const auto n = static_cast<std::size_t>(p.size());
  prob_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  std::vector<std::size_t> small;
  std::vector<std::size_t> large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = p[static_cast<Eigen::Index>(i)] * static_cast<double>(n);
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    small.pop_back();
    const std::size_t l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = static_cast<std::int64_t>(l);
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // Leftovers are 1 up to rounding.
  for (std::size_t i : large) prob_[i] = 1.0;
  for (std::size_t i : small) prob_[i] = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (prob_[i] >= 1.0) alias_[i] = static_cast<std::int64_t>(i);
  }
}

Symbol AliasSampler::operator()(Rng& rng) const {
  const auto column = static_cast<std::size_t>(rng.uniform_below(prob_.size()));
  const double u = rng.uniform01();
  const std::int64_t index = u < prob_[column] ? static_cast<std::int64_t>(column) : alias_[column];
  return index + 1;
}

std::optional<Symbol> VectorSampleStream::next() {
  if (pos_ >= symbols_.size()) return std::nullopt;
  count_one();
  return symbols_[pos_++];
}

std::optional<Symbol> DistributionSampleStream::next() {
  count_one();
  return sampler_(rng_);
}

std::vector<std::int64_t> read_integers(std::istream& in) {
  std::vector<std::int64_t> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string token = trim(line);
    if (token.empty()) continue;
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": not an integer: '" +
                                  token + "'");
    }
    values.push_back(value);
  }
  if (in.bad()) throw std::runtime_error("read error");
  return values;
}

FrequencyVector read_frequency_vector(std::istream& in) {
  return FrequencyVector(read_integers(in));
}

void write_frequency_vector(std::ostream& out, const FrequencyVector& freq) {
  for (std::int64_t c : freq.counts()) out << c << '\n';
}

std::vector<Symbol> read_symbols(std::istream& in, std::int64_t n) {
  std::vector<Symbol> symbols = read_integers(in);
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (symbols[i] < 1 || symbols[i] > n) {
      throw std::invalid_argument("sample " + std::to_string(i + 1) + ": symbol " +
                                  std::to_string(symbols[i]) + " outside [1, " +
                                  std::to_string(n) + "]");
    }
  }
  return symbols;
}

void write_symbols(std::ostream& out, std::span<const Symbol> symbols) {
  for (Symbol s : symbols) out << s << '\n';
}

}  // namespace unifwatch
