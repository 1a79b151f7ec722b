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

#include "unifwatch/full_tester.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "unifwatch/distances.h"

namespace unifwatch {
namespace {

// sqrt(mu_I) and sqrt(1 - mu_I) for every interval, in scan order.
struct NullRoots {
  std::vector<double> mass;
  std::vector<double> root;
  std::vector<double> root_complement;
  std::vector<std::int64_t> left;
  std::vector<std::int64_t> right;

  NullRoots(double mu, std::int64_t x_max) {
    const IntervalMassTable table(mu, x_max);
    for (std::int64_t a = 0; a <= x_max; ++a) {
      for (std::int64_t b = a; b <= x_max; ++b) {
        const double m = table.mass(a, b);
        mass.push_back(m);
        root.push_back(std::sqrt(m));
        root_complement.push_back(std::sqrt(1.0 - m));
        left.push_back(a);
        right.push_back(b);
      }
    }
  }

  std::size_t size() const { return mass.size(); }

  double statistic(std::size_t idx, double est) const {
    const double d1 = root[idx] - std::sqrt(est);
    const double d0 = root_complement[idx] - std::sqrt(1.0 - est);
    return d1 * d1 + d0 * d0;
  }
};

// Largest table of per-(k, interval) count bands built before falling back to
// evaluating the statistic directly.
constexpr std::int64_t kMaxBandEntries = std::int64_t{1} << 24;

Verdict reject(const NullRoots& roots, std::size_t idx, double est_i, double threshold,
               std::int64_t repeat, std::int64_t k) {
  Verdict v;
  v.outcome = Outcome::kReject;
  const double mu_i = roots.mass[idx];
  v.witness = IntervalWitness{roots.left[idx], roots.right[idx], mu_i,   est_i,
                              hellinger_sq_bernoulli(mu_i, est_i), threshold, repeat, k};
  return v;
}

double total_count(const FullTesterParams& params, std::int64_t k) {
  return static_cast<double>(params.s) * static_cast<double>(k);
}

// The statistic is convex in the empirical mass, so for each subset size k
// the counts that pass interval I form one integer range [lo, hi] (empty when
// lo > hi). Precomputing the ranges turns the scan into integer compares.
template <typename Int>
struct CountBands {
  std::vector<Int> lo;
  std::vector<Int> hi;

  CountBands(const FullTesterParams& params, const NullRoots& roots) {
    const std::size_t intervals = roots.size();
    lo.resize(static_cast<std::size_t>(params.n) * intervals);
    hi.resize(lo.size());
    for (std::int64_t k = 1; k <= params.n; ++k) {
      const std::int64_t total = params.s * k;
      const double denom = total_count(params, k);
      const double threshold = params.tau / static_cast<double>(k);
      const std::size_t offset = static_cast<std::size_t>(k - 1) * intervals;
      for (std::size_t idx = 0; idx < intervals; ++idx) {
        const auto passes = [&](std::int64_t c) {
          return roots.statistic(idx, static_cast<double>(c) / denom) < threshold;
        };
        const auto floor_centre = std::clamp(
            static_cast<std::int64_t>(std::floor(roots.mass[idx] * denom)), std::int64_t{0}, total);
        std::int64_t inside;
        if (passes(floor_centre)) {
          inside = floor_centre;
        } else if (floor_centre < total && passes(floor_centre + 1)) {
          inside = floor_centre + 1;
        } else {
          lo[offset + idx] = 1;
          hi[offset + idx] = 0;
          continue;
        }
        std::int64_t l = 0;
        std::int64_t h = inside;
        while (l < h) {
          const std::int64_t mid = l + (h - l) / 2;
          if (passes(mid)) {
            h = mid;
          } else {
            l = mid + 1;
          }
        }
        lo[offset + idx] = static_cast<Int>(l);
        l = inside;
        h = total;
        while (l < h) {
          const std::int64_t mid = l + (h - l + 1) / 2;
          if (passes(mid)) {
            l = mid;
          } else {
            h = mid - 1;
          }
        }
        hi[offset + idx] = static_cast<Int>(l);
      }
    }
  }
};

// Walks repeats and subset sizes, maintaining the combined prefix sums, and
// asks `first_failure(k, prefix)` for the first rejecting interval index or
// the interval count when none rejects.
// True if any count in the row falls outside its band.
template <typename Int>
[[gnu::always_inline]] inline bool row_out_of_band(const Int* upper, Int base, const Int* lo,
                                                   const Int* hi, std::size_t len) {
  Int bad = 0;
  for (std::size_t j = 0; j < len; ++j) {
    const Int c = upper[j] - base;
    bad |= static_cast<Int>(c < lo[j]) | static_cast<Int>(c > hi[j]);
  }
  return bad != 0;
}

#if defined(__GNUC__) && defined(__x86_64__) && !defined(__clang__)
#define UNIFWATCH_ROW_CLONES __attribute__((target_clones("avx2", "default")))
#else
#define UNIFWATCH_ROW_CLONES
#endif

UNIFWATCH_ROW_CLONES bool row_out_of_band32(const std::int32_t* upper, std::int32_t base,
                                            const std::int32_t* lo, const std::int32_t* hi,
                                            std::size_t len) {
  return row_out_of_band(upper, base, lo, hi, len);
}

UNIFWATCH_ROW_CLONES bool row_out_of_band64(const std::int64_t* upper, std::int64_t base,
                                            const std::int64_t* lo, const std::int64_t* hi,
                                            std::size_t len) {
  return row_out_of_band(upper, base, lo, hi, len);
}

inline bool row_out_of_band_dispatch(const std::int32_t* upper, std::int32_t base,
                                     const std::int32_t* lo, const std::int32_t* hi,
                                     std::size_t len) {
  return row_out_of_band32(upper, base, lo, hi, len);
}

inline bool row_out_of_band_dispatch(const std::int64_t* upper, std::int64_t base,
                                     const std::int64_t* lo, const std::int64_t* hi,
                                     std::size_t len) {
  return row_out_of_band64(upper, base, lo, hi, len);
}

template <typename Int, typename FirstFailure>
Verdict shared_scan(const FullTesterParams& params, const std::vector<Int>& hist,
                    const NullRoots& roots, const Rng& rng, FullScanStats& stats,
                    FirstFailure first_failure) {
  const std::int64_t n = params.n;
  const auto width = static_cast<std::size_t>(params.x_max + 2);
  const std::size_t intervals = roots.size();
  std::vector<Int> combined(width);
  std::vector<Int> prefix(width);
  for (std::int64_t rho = 0; rho < params.r; ++rho) {
    Rng repeat_rng = rng.child(static_cast<std::uint64_t>(rho) + 1);
    const std::vector<std::size_t> perm = uniform_permutation(static_cast<std::size_t>(n), repeat_rng);
    ++stats.subsets_drawn;
    std::fill(combined.begin(), combined.end(), Int{0});
    for (std::int64_t k = 1; k <= n; ++k) {
      const Int* h = hist.data() + perm[static_cast<std::size_t>(k - 1)] * width;
      for (std::size_t x = 0; x < width; ++x) combined[x] += h[x];
      // prefix[x] = combined count below x.
      prefix[0] = 0;
      for (std::size_t x = 1; x < width; ++x) prefix[x] = prefix[x - 1] + combined[x - 1];
      const std::size_t idx = first_failure(k, prefix);
      if (idx < intervals) {
        stats.intervals_checked += static_cast<std::int64_t>(idx) + 1;
        const auto count = prefix[static_cast<std::size_t>(roots.right[idx] + 1)] -
                           prefix[static_cast<std::size_t>(roots.left[idx])];
        return reject(roots, idx, static_cast<double>(count) / total_count(params, k),
                      params.tau / static_cast<double>(k), rho, k);
      }
      stats.intervals_checked += static_cast<std::int64_t>(intervals);
    }
  }
  return {};
}

template <typename Int>
Verdict run_banded(const FullTesterParams& params, const std::vector<std::int64_t>& hist64,
                   const Rng& rng, FullScanStats& stats) {
  const std::vector<Int> hist(hist64.begin(), hist64.end());
  const NullRoots roots(params.mu, params.x_max);
  const CountBands<Int> bands(params, roots);
  const std::int64_t x_max = params.x_max;
  const std::size_t intervals = roots.size();
  return shared_scan(params, hist, roots, rng, stats,
                     [&](std::int64_t k, const std::vector<Int>& prefix) {
    const Int* lo = bands.lo.data() + static_cast<std::size_t>(k - 1) * intervals;
    const Int* hi = bands.hi.data() + static_cast<std::size_t>(k - 1) * intervals;
    std::size_t row = 0;
    for (std::int64_t a = 0; a <= x_max; ++a) {
      const Int base = prefix[static_cast<std::size_t>(a)];
      const Int* upper = prefix.data() + a + 1;
      const auto len = static_cast<std::size_t>(x_max - a + 1);
      // Branch-free pass so the row vectorizes; locate the culprit only on failure.
      if (row_out_of_band_dispatch(upper, base, lo + row, hi + row, len)) {
        for (std::size_t j = 0;; ++j) {
          const Int c = upper[j] - base;
          if (c < lo[row + j] || c > hi[row + j]) return row + j;
        }
      }
      row += len;
    }
    return intervals;
  });
}

Verdict run_direct(const FullTesterParams& params, const std::vector<std::int64_t>& hist,
                   const Rng& rng, FullScanStats& stats) {
  const NullRoots roots(params.mu, params.x_max);
  const std::int64_t x_max = params.x_max;
  return shared_scan(params, hist, roots, rng, stats,
                     [&](std::int64_t k, const std::vector<std::int64_t>& prefix) {
    const double total = total_count(params, k);
    const double threshold = params.tau / static_cast<double>(k);
    std::size_t idx = 0;
    for (std::int64_t a = 0; a <= x_max; ++a) {
      for (std::int64_t b = a; b <= x_max; ++b, ++idx) {
        const double est = static_cast<double>(prefix[static_cast<std::size_t>(b + 1)] -
                                                prefix[static_cast<std::size_t>(a)]) /
                           total;
        if (roots.statistic(idx, est) >= threshold) return idx;
      }
    }
    return idx;
  });
}

Verdict run_literal(const FullTesterParams& params, const std::vector<std::int64_t>& hist,
                    const Rng& rng, FullScanStats& stats) {
  const std::int64_t n = params.n;
  const std::int64_t x_max = params.x_max;
  const auto width = static_cast<std::size_t>(x_max + 2);
  // Per-index prefix sums over [0, x_max].
  std::vector<std::int64_t> prefix(static_cast<std::size_t>(n) * width, 0);
  for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
    for (std::size_t x = 1; x < width; ++x) {
      prefix[i * width + x] = prefix[i * width + x - 1] + hist[i * width + x - 1];
    }
  }
  const NullRoots roots(params.mu, x_max);
  Rng subset_rng = rng.child(1);
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::int64_t k = 1; k <= n; ++k) {
    const double total = static_cast<double>(params.s) * static_cast<double>(k);
    const double threshold = params.tau / static_cast<double>(k);
    std::size_t idx = 0;
    for (std::int64_t a = 0; a <= x_max; ++a) {
      for (std::int64_t b = a; b <= x_max; ++b, ++idx) {
        for (std::int64_t rho = 0; rho < params.r; ++rho) {
          // Partial Fisher-Yates: the first k slots become a uniform k-subset.
          for (std::size_t j = 0; j < static_cast<std::size_t>(k); ++j) {
            const auto pick = j + static_cast<std::size_t>(subset_rng.uniform_below(
                                      static_cast<std::uint64_t>(n) - j));
            std::swap(order[j], order[pick]);
          }
          ++stats.subsets_drawn;
          ++stats.intervals_checked;
          std::int64_t count = 0;
          for (std::size_t j = 0; j < static_cast<std::size_t>(k); ++j) {
            const std::int64_t* p = prefix.data() + order[j] * width;
            count += p[b + 1] - p[a];
          }
          const double est = static_cast<double>(count) / total;
          if (roots.statistic(idx, est) >= threshold) {
            return reject(roots, idx, est, threshold, rho, k);
          }
        }
      }
    }
  }
  return {};
}

}  // namespace

FullTesterParams derive_full_params(std::int64_t n, double mu, double delta,
                                    const FullConstants& constants,
                                    const FullOverrides& overrides) {
  if (n < 2) throw std::invalid_argument("derive_full_params: n must be >= 2");
  if (!(mu >= 0.0) || !std::isfinite(mu)) {
    throw std::invalid_argument("derive_full_params: mu must be finite and >= 0");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("derive_full_params: delta must be in (0, 1)");
  }
  const double nd = static_cast<double>(n);
  const double log_n = std::log(std::max(nd, 3.0));
  FullTesterParams params;
  params.n = n;
  params.mu = mu;
  params.x_max = static_cast<std::int64_t>(std::ceil(
      2.0 * mu + constants.tail_factor * (log_n + std::log(constants.tail_budget / delta))));
  params.tau = 1.0 / (constants.tau_divisor * log_n * log_n);
  params.r = static_cast<std::int64_t>(
      std::ceil(constants.repeat_factor * std::log(2.0 / delta) * nd * log_n));
  if (overrides.x_max) params.x_max = *overrides.x_max;
  if (overrides.tau) params.tau = *overrides.tau;
  const double width = static_cast<double>(params.x_max + 1);
  params.s = static_cast<std::int64_t>(std::ceil(
      std::log(constants.union_factor * width * width * nd * static_cast<double>(params.r) /
               delta) /
      params.tau));
  if (overrides.r) params.r = *overrides.r;
  if (overrides.s) params.s = *overrides.s;
  validate(params);
  return params;
}

void validate(const FullTesterParams& params) {
  if (params.n < 1) throw std::invalid_argument("full tester: n must be >= 1");
  if (!(params.mu >= 0.0) || !std::isfinite(params.mu)) {
    throw std::invalid_argument("full tester: mu must be finite and >= 0");
  }
  if (!(params.tau > 0.0) || !std::isfinite(params.tau)) {
    throw std::invalid_argument("full tester: tau must be positive");
  }
  if (params.s < 1) throw std::invalid_argument("full tester: s must be >= 1");
  if (params.r < 1) throw std::invalid_argument("full tester: r must be >= 1");
  if (params.x_max < 0) throw std::invalid_argument("full tester: x_max must be >= 0");
}

Verdict run_full_tester(const FullTesterParams& params, const FrequencyVector& freq,
                        const Rng& rng, const FullRunOptions& options) {
  validate(params);
  if (static_cast<std::int64_t>(freq.size()) != params.n) {
    throw std::invalid_argument("run_full_tester: frequency vector has length " +
                                std::to_string(freq.size()) + ", expected " +
                                std::to_string(params.n));
  }
  const auto width = static_cast<std::size_t>(params.x_max + 2);
  std::vector<std::int64_t> hist(static_cast<std::size_t>(params.n) * width);
  Rng split_rng = rng.child(0);
  for (std::size_t i = 0; i < freq.size(); ++i) {
    const std::vector<std::int64_t> h =
        poisson_split_histogram(freq[i], params.s, params.x_max, split_rng);
    std::copy(h.begin(), h.end(), hist.begin() + static_cast<std::ptrdiff_t>(i * width));
  }
  FullScanStats local;
  FullScanStats& stats = options.stats != nullptr ? *options.stats : local;
  if (options.literal_resampling) return run_literal(params, hist, rng, stats);
  const auto intervals = static_cast<std::int64_t>((params.x_max + 1) * (params.x_max + 2) / 2);
  if (options.direct_scan || params.n * intervals > kMaxBandEntries) {
    return run_direct(params, hist, rng, stats);
  }
  const std::int64_t largest =
      std::max(params.s * params.n, freq.total());
  if (largest <= std::numeric_limits<std::int32_t>::max()) {
    return run_banded<std::int32_t>(params, hist, rng, stats);
  }
  return run_banded<std::int64_t>(params, hist, rng, stats);
}

}  // namespace unifwatch
