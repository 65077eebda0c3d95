#pragma once

#include <functional>
#include <vector>

namespace ofulq {

double mean(const std::vector<double>& xs);
/// Unbiased sample variance; needs at least two values.
double sample_variance(const std::vector<double>& xs);
double median(std::vector<double> xs);

double normal_cdf(double x);

/// P(K > lambda) for the Kolmogorov distribution.
double kolmogorov_survival(double lambda);

struct KsResult {
  double statistic = 0.0;  // sup |F_n - F|
  double p_value = 0.0;
};

/// One-sample Kolmogorov-Smirnov test against N(mu, sigma^2), with the
/// Stephens small-sample correction (sqrt(n) + 0.12 + 0.11/sqrt(n)) D.
KsResult ks_test_normal(std::vector<double> xs, double mu, double sigma);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y);

/// Runs body(k) for k in [0, count) on `threads` workers. Work is assigned by
/// index, so results written to slot k do not depend on the thread count.
/// The first exception thrown by any task is rethrown.
void parallel_for(long count, int threads, const std::function<void(long)>& body);

}  // namespace ofulq
