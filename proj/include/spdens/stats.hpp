#pragma once

#include <functional>
#include <span>

namespace spdens {

struct KsResult {
  double statistic = 0.0;  // sup |F_n - F|
  double p_value = 1.0;
};

/// Asymptotic Kolmogorov tail Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

/// One-sample Kolmogorov-Smirnov test with the small-sample correction
/// lambda = (sqrt(n) + 0.12 + 0.11 / sqrt(n)) D.
KsResult ks_test(std::span<const double> samples, const std::function<double(double)>& cdf);

/// ks_test against N(mean, variance).
KsResult ks_test_normal(std::span<const double> samples, double mean, double variance);

double sample_mean(std::span<const double> x);
double sample_variance(std::span<const double> x);

}  // namespace spdens
