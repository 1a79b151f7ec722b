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

// Probability-mass, distance and inequality computations over discrete
// distributions, Poisson laws and uniform Poisson mixtures.
//
// All PMFs are evaluated in log space and exponentiated last; ln(x!) comes
// from lgamma. A rate of zero is the point mass at 0 throughout.
//
// The distance functions take arbitrary Eigen vector expressions, so
// `tv_distance(p.probs(), q.probs())` and `tv_distance(a - b + c, d)` both
// work, and the scalar type follows the expression (double or long double).

#ifndef UNIFWATCH_DISTANCES_H_
#define UNIFWATCH_DISTANCES_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace unifwatch {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Explicit probability vector over a domain of size n. Index i (0-based)
// holds the mass of symbol i + 1.
template <typename Scalar>
class BasicDiscreteDistribution {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit BasicDiscreteDistribution(Vector<Scalar> probs)
      : probs_(std::move(probs)) {
    if (probs_.size() == 0) {
      throw std::invalid_argument("DiscreteDistribution: empty domain");
    }
    for (Eigen::Index i = 0; i < probs_.size(); ++i) {
      if (!(probs_[i] >= Scalar(0)) || !std::isfinite(static_cast<double>(probs_[i]))) {
        throw std::invalid_argument("DiscreteDistribution: negative or non-finite mass at index " +
                                    std::to_string(i));
      }
    }
    const Scalar total = probs_.sum();
    if (std::abs(static_cast<double>(total) - 1.0) > kSumTolerance) {
      throw std::invalid_argument("DiscreteDistribution: masses sum to " +
                                  std::to_string(static_cast<double>(total)));
    }
  }

  static BasicDiscreteDistribution uniform(Eigen::Index n) {
    if (n <= 0) throw std::invalid_argument("uniform: n must be positive");
    return BasicDiscreteDistribution(Vector<Scalar>::Constant(n, Scalar(1) / Scalar(n)));
  }

  Eigen::Index size() const { return probs_.size(); }
  const Vector<Scalar>& probs() const { return probs_; }
  Scalar operator[](Eigen::Index i) const { return probs_[i]; }

 private:
  Vector<Scalar> probs_;
};

using DiscreteDistribution = BasicDiscreteDistribution<double>;

// Uniform mixture (Poi(l_1) + ... + Poi(l_k)) / k.
class PoissonMixture {
 public:
  explicit PoissonMixture(std::vector<double> rates);

  const std::vector<double>& rates() const { return rates_; }
  std::size_t size() const { return rates_.size(); }
  double max_rate() const;

 private:
  std::vector<double> rates_;
};

struct IntervalMass {
  std::int64_t a = 0;
  std::int64_t b = 0;
  double mass = 0.0;
};

// ln Poi(rate)(x) = -rate + x ln(rate) - ln(x!).
template <typename Scalar>
Scalar poisson_log_pmf(Scalar rate, std::int64_t x) {
  if (!(rate >= Scalar(0)) || !std::isfinite(static_cast<double>(rate))) {
    throw std::invalid_argument("poisson_log_pmf: rate must be finite and >= 0");
  }
  if (x < 0) throw std::invalid_argument("poisson_log_pmf: x must be >= 0");
  if (rate == Scalar(0)) {
    return x == 0 ? Scalar(0) : -std::numeric_limits<Scalar>::infinity();
  }
  const Scalar xs = static_cast<Scalar>(x);
  return -rate + xs * std::log(rate) - std::lgamma(xs + Scalar(1));
}

template <typename Scalar>
Scalar poisson_pmf(Scalar rate, std::int64_t x) {
  return std::exp(poisson_log_pmf(rate, x));
}

double mixture_pmf(const PoissonMixture& mix, std::int64_t x);

// mixture_pmf(mix, x) / Poi(mu)(x), evaluated component-wise as
// exp(mu - l_j + x (ln l_j - ln mu)) so large x does not overflow the
// factorials. mu = 0 is only defined at x = 0.
double pmf_ratio(const PoissonMixture& mix, double mu, std::int64_t x);

// Natural log of pmf_ratio; -inf where the ratio is zero. Finite for inputs
// whose ratio would overflow a double.
double log_pmf_ratio(const PoissonMixture& mix, double mu, std::int64_t x);

// Pr_{x ~ Poi(mu)}[a <= x <= b] by summation in increasing x, clamped to [0,1].
IntervalMass poisson_interval_mass(double mu, std::int64_t a, std::int64_t b);

// All interval masses [a, b] with 0 <= a <= b <= x_max, each computed with
// the same summation order as poisson_interval_mass.
class IntervalMassTable {
 public:
  IntervalMassTable(double mu, std::int64_t x_max);

  std::int64_t x_max() const { return x_max_; }
  double mass(std::int64_t a, std::int64_t b) const {
    return masses_[static_cast<std::size_t>(offset(a) + (b - a))];
  }

 private:
  std::int64_t offset(std::int64_t a) const {
    // Row a starts after rows 0..a-1, which hold (x_max+1) + x_max + ... entries.
    return a * (x_max_ + 1) - a * (a - 1) / 2;
  }

  std::int64_t x_max_;
  std::vector<double> masses_;
};

namespace internal {
inline double check_probability(double p, const char* what) {
  constexpr double kSlack = 1e-12;
  if (!(p >= -kSlack && p <= 1.0 + kSlack)) {
    throw std::invalid_argument(std::string(what) + ": probability outside [0,1]");
  }
  return std::clamp(p, 0.0, 1.0);
}
}  // namespace internal

// Squared Hellinger distance between Ber(p) and Ber(q):
// (sqrt p - sqrt q)^2 + (sqrt(1-p) - sqrt(1-q))^2, in [0, 2].
template <typename Scalar>
Scalar hellinger_sq_bernoulli(Scalar p, Scalar q) {
  const auto pc = static_cast<Scalar>(
      internal::check_probability(static_cast<double>(p), "hellinger_sq_bernoulli"));
  const auto qc = static_cast<Scalar>(
      internal::check_probability(static_cast<double>(q), "hellinger_sq_bernoulli"));
  // Reuse the caller's value when it was already in range so long double
  // inputs keep their precision.
  const Scalar pp = (p >= Scalar(0) && p <= Scalar(1)) ? p : pc;
  const Scalar qq = (q >= Scalar(0) && q <= Scalar(1)) ? q : qc;
  const Scalar d1 = std::sqrt(pp) - std::sqrt(qq);
  const Scalar d0 = std::sqrt(Scalar(1) - pp) - std::sqrt(Scalar(1) - qq);
  return d1 * d1 + d0 * d0;
}

namespace internal {
template <typename A, typename B>
void check_same_domain(const Eigen::MatrixBase<A>& p, const Eigen::MatrixBase<B>& q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("domain size mismatch: " + std::to_string(p.size()) +
                                " vs " + std::to_string(q.size()));
  }
}
}  // namespace internal

// Half the l1 distance.
template <typename A, typename B>
typename A::Scalar tv_distance(const Eigen::MatrixBase<A>& p, const Eigen::MatrixBase<B>& q) {
  internal::check_same_domain(p, q);
  using Scalar = typename A::Scalar;
  return Scalar(0.5) * (p - q).cwiseAbs().sum();
}

template <typename A, typename B>
typename A::Scalar hellinger_sq(const Eigen::MatrixBase<A>& p, const Eigen::MatrixBase<B>& q) {
  internal::check_same_domain(p, q);
  return (p.cwiseSqrt() - q.cwiseSqrt()).squaredNorm();
}

// KL(p || q) with 0 ln 0 = 0; +inf if p puts mass where q has none.
template <typename A, typename B>
typename A::Scalar kl_divergence(const Eigen::MatrixBase<A>& p, const Eigen::MatrixBase<B>& q) {
  internal::check_same_domain(p, q);
  using Scalar = typename A::Scalar;
  Scalar total(0);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const Scalar pi = p[i];
    const Scalar qi = q[i];
    if (pi <= Scalar(0)) continue;
    if (qi <= Scalar(0)) return std::numeric_limits<Scalar>::infinity();
    total += pi * std::log(pi / qi);
  }
  // Rounding can push the sum of a near-zero divergence slightly negative.
  return total < Scalar(0) ? Scalar(0) : total;
}

template <typename Scalar>
Scalar tv_distance(const BasicDiscreteDistribution<Scalar>& p,
                   const BasicDiscreteDistribution<Scalar>& q) {
  return tv_distance(p.probs(), q.probs());
}

template <typename Scalar>
Scalar hellinger_sq(const BasicDiscreteDistribution<Scalar>& p,
                    const BasicDiscreteDistribution<Scalar>& q) {
  return hellinger_sq(p.probs(), q.probs());
}

template <typename Scalar>
Scalar kl_divergence(const BasicDiscreteDistribution<Scalar>& p,
                     const BasicDiscreteDistribution<Scalar>& q) {
  return kl_divergence(p.probs(), q.probs());
}

// Threshold t with Pr_{z ~ Poi(rate)}[z >= t] <= tail_probability, using the
// conservative form t = 2 rate + 6 ln(1 / tail_probability).
double poisson_tail_threshold(double rate, double tail_probability);

// Masses of a set S, a tail set T (with q(T) small), and S \ T under two
// distributions p and q. The caller supplies the S \ T masses directly.
struct EliminateLargeMasses {
  double p_s = 0.0;
  double q_s = 0.0;
  double p_s_minus_t = 0.0;
  double q_s_minus_t = 0.0;
  double p_t = 0.0;
  double q_t = 0.0;
};

enum class EliminateChoice { kSetMinusTail, kTailComplement };

struct EliminateLargeResult {
  EliminateChoice choice = EliminateChoice::kSetMinusTail;
  double p_mass = 0.0;
  double q_mass = 0.0;
  double value = 0.0;  // hellinger_sq_bernoulli(p_mass, q_mass)
};

// Test utility: given hellinger_sq_bernoulli(p_S, q_S) >= delta and
// q_T <= delta / 20, returns S \ T or the complement of T, whichever keeps a
// Bernoulli-Hellinger value of at least delta / 120. Throws std::logic_error
// if neither does.
EliminateLargeResult eliminate_large_witness(const EliminateLargeMasses& masses, double delta);

}  // namespace unifwatch

#endif  // UNIFWATCH_DISTANCES_H_
