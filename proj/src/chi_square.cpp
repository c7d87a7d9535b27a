#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "riskweave/cart.hpp"
#include "riskweave/error.hpp"

namespace riskweave::cart {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxTerms = 100000;
constexpr double kTiny = 1e-300;

// P(a, x) by the power series  e^-x x^a / Gamma(a+1) * sum x^n / ((a+1)...(a+n)).
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int n = 0; n < kMaxTerms; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Q(a, x) by the continued fraction for Gamma(a, x), modified Lentz.
double gamma_q_continued_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxTerms; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0) || std::isnan(x) || x < 0.0)
    throw Error("InvalidArgument", "regularized_gamma_q needs a > 0 and x >= 0", {{"a", a}, {"x", x}});
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_continued_fraction(a, x);
}

double chi_square_sf(double stat, int df) {
  if (df < 1) throw Error("InvalidDf", "degrees of freedom must be >= 1", {{"df", df}});
  if (std::isnan(stat) || stat < 0.0)
    throw Error("InvalidArgument", "chi-square statistic must be >= 0", {{"stat", stat}});
  const double q = regularized_gamma_q(0.5 * df, 0.5 * stat);
  return std::clamp(q, 0.0, 1.0);
}

double gini(std::span<const std::size_t> counts) {
  const std::size_t n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (n == 0) throw Error("EmptyCounts", "gini of an empty node");
  double sum_sq = 0.0;
  for (auto c : counts) {
    const double f = static_cast<double>(c) / static_cast<double>(n);
    sum_sq += f * f;
  }
  return 1.0 - sum_sq;
}

double leaf_confidence(std::span<const std::size_t> counts, const ConfidenceOptions& options) {
  const std::size_t n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (n == 0) throw Error("EmptyCounts", "confidence of an empty node");
  const std::size_t k = counts.size();
  if (k < 2) return 1.0;

  double stat = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double expected = static_cast<double>(n) / static_cast<double>(k);
    if (options.null == ConfidenceNull::training_prior) {
      if (k != options.prior.size())
        throw Error("InvalidArgument", "training-prior null needs one prior per class");
      expected = static_cast<double>(n) * options.prior[i];
    }
    const double observed = static_cast<double>(counts[i]);
    double diff = std::fabs(observed - expected);
    if (options.yates) diff = std::max(0.0, diff - 0.5);
    if (expected <= 0.0) {
      if (observed > 0.0) return 0.0;
      continue;
    }
    stat += diff * diff / expected;
  }
  return chi_square_sf(stat, static_cast<int>(k) - 1);
}

}  // namespace riskweave::cart
