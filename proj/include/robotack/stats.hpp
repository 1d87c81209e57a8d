#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace robotack::stats {

double mean(std::span<const double> xs);
// Maximum-likelihood (population) standard deviation.
double stddev_mle(std::span<const double> xs);
// Linear-interpolated percentile, q in [0, 100] (numpy's default method).
double percentile(std::vector<double> xs, double q);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};
// Wilson score interval for k successes out of n at ~95% (z = 1.96).
Interval wilson_interval(std::int64_t k, std::int64_t n, double z = 1.959963984540054);

// Two-sided Fisher exact test on the 2x2 table [[a, b], [c, d]].
double fisher_exact_two_sided(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d);

// One-sample Kolmogorov-Smirnov test against a continuous CDF.
struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};
KsResult ks_test(std::vector<double> xs, const std::function<double(double)>& cdf);
double normal_cdf(double x, double mu, double sigma);

}  // namespace robotack::stats
