#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "palace/error.hpp"

namespace palace::eval {

inline constexpr int kBootstrapResamples = 10000;
inline constexpr std::uint64_t kBootstrapSeed = 20240607;
inline constexpr double kFamilyAlpha = 0.05;

inline double mean(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1 denominator).
inline double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (const double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

struct TTest {
  double t = 0.0;
  double p = 1.0;
};

/// One-sample t test of the differences against zero, two-sided.
inline TTest paired_t(std::span<const double> diffs) {
  if (diffs.size() < 2) throw Error(ErrorKind::malformed_input, "paired test needs n >= 2");
  const double m = mean(diffs);
  const double sd = sample_sd(diffs);
  const double n = static_cast<double>(diffs.size());
  if (sd == 0.0) {
    if (m == 0.0) return {0.0, 1.0};
    return {m > 0 ? INFINITY : -INFINITY, 0.0};
  }
  TTest out;
  out.t = m / (sd / std::sqrt(n));
  const boost::math::students_t dist(n - 1.0);
  out.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(out.t))));
  return out;
}

struct EffectSize {
  double dz = 0.0;
  bool degenerate = false;
};

inline EffectSize cohens_dz(std::span<const double> diffs) {
  const double sd = sample_sd(diffs);
  if (sd == 0.0) return {0.0, true};
  return {mean(diffs) / sd, false};
}

/// Midranks of |d| for the nonzero differences, 1-based.
inline std::vector<double> abs_midranks(std::span<const double> nz) {
  const std::size_t n = nz.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::fabs(nz[a]) < std::fabs(nz[b]); });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::fabs(nz[order[j + 1]]) == std::fabs(nz[order[i]])) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline constexpr std::size_t kWilcoxonExactMax = 25;

/// Wilcoxon signed-rank test, two-sided. Zero differences are dropped. For
/// up to 25 nonzero differences the null distribution of the positive rank
/// sum is enumerated exactly (over doubled midranks, so ties are handled);
/// above that the normal approximation with tie correction is used, without
/// continuity correction. No nonzero differences gives p = 1.
inline double wilcoxon_p(std::span<const double> diffs) {
  std::vector<double> nz;
  for (const double d : diffs) {
    if (d != 0.0) nz.push_back(d);
  }
  const std::size_t n = nz.size();
  if (n == 0) return 1.0;
  const auto ranks = abs_midranks(nz);
  double r_plus = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (nz[i] > 0) r_plus += ranks[i];
  }
  if (n <= kWilcoxonExactMax) {
    std::vector<int> doubled(n);
    int total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      doubled[i] = static_cast<int>(std::lround(2.0 * ranks[i]));
      total += doubled[i];
    }
    // count[s] = number of sign assignments whose doubled positive sum is s.
    std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
    count[0] = 1.0;
    int reach = 0;
    for (const int r : doubled) {
      for (int s = reach; s >= 0; --s) {
        if (count[s] != 0.0) count[s + r] += count[s];
      }
      reach += r;
    }
    const int obs = static_cast<int>(std::lround(2.0 * r_plus));
    double le = 0.0, ge = 0.0, all = 0.0;
    for (int s = 0; s <= total; ++s) {
      all += count[s];
      if (s <= obs) le += count[s];
      if (s >= obs) ge += count[s];
    }
    return std::min(1.0, 2.0 * std::min(le, ge) / all);
  }
  const double nn = static_cast<double>(n);
  const double mu = nn * (nn + 1.0) / 4.0;
  double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
  std::vector<double> sorted = ranks;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    var -= (t * t * t - t) / 48.0;
    i = j + 1;
  }
  if (var <= 0.0) return 1.0;
  const double r_minus = nn * (nn + 1.0) / 2.0 - r_plus;
  const double z = (std::min(r_plus, r_minus) - mu) / std::sqrt(var);
  const boost::math::normal_distribution<double> unit;
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(unit, std::fabs(z))));
}

/// Linear-interpolated quantile of sorted data (q in [0, 1]).
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct BootstrapCi {
  double mean_low = 0.0;
  double mean_high = 0.0;
  double dz_low = 0.0;
  double dz_high = 0.0;
};

/// Percentile bootstrap 95% intervals for the mean difference and d_z.
inline BootstrapCi bootstrap_ci(std::span<const double> diffs, int resamples = kBootstrapResamples,
                                std::uint64_t seed = kBootstrapSeed) {
  BootstrapCi out;
  if (diffs.empty() || resamples <= 0) return out;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, diffs.size() - 1);
  std::vector<double> means, dzs, sample(diffs.size());
  means.reserve(static_cast<std::size_t>(resamples));
  dzs.reserve(static_cast<std::size_t>(resamples));
  for (int r = 0; r < resamples; ++r) {
    for (auto& s : sample) s = diffs[pick(rng)];
    means.push_back(mean(sample));
    dzs.push_back(cohens_dz(sample).dz);
  }
  std::sort(means.begin(), means.end());
  std::sort(dzs.begin(), dzs.end());
  out.mean_low = quantile_sorted(means, 0.025);
  out.mean_high = quantile_sorted(means, 0.975);
  out.dz_low = quantile_sorted(dzs, 0.025);
  out.dz_high = quantile_sorted(dzs, 0.975);
  return out;
}

inline double bonferroni_alpha(std::size_t comparisons) {
  return comparisons == 0 ? kFamilyAlpha : kFamilyAlpha / static_cast<double>(comparisons);
}

struct PairedResult {
  double delta = 0.0;
  TTest t;
  double p_wilcoxon = 1.0;
  EffectSize dz;
  BootstrapCi ci;
};

/// Paired comparison of x against y (differences x - y).
inline PairedResult paired_tests(std::span<const double> x, std::span<const double> y,
                                 int resamples = kBootstrapResamples, std::uint64_t seed = kBootstrapSeed) {
  if (x.size() != y.size()) throw Error(ErrorKind::malformed_input, "paired test: length mismatch");
  if (x.size() < 2) throw Error(ErrorKind::malformed_input, "paired test needs n >= 2");
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
  PairedResult out;
  out.delta = mean(d);
  out.t = paired_t(d);
  out.p_wilcoxon = wilcoxon_p(d);
  out.dz = cohens_dz(d);
  out.ci = bootstrap_ci(d, resamples, seed);
  return out;
}

}  // namespace palace::eval
