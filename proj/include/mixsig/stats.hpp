#pragma once

#include <cstddef>
#include <vector>

namespace mixsig {

// Standard normal CDF / survival / quantile.
double norm_cdf(double x);
double norm_sf(double x);
double norm_quantile(double p);

// Exact upper tail of Binomial(n, 1/2): P(X >= k). k = 0 gives 1.
double binom_half_upper_tail(std::size_t k, std::size_t n);

// Survival function of the limiting Kolmogorov distribution,
// Q(lambda) = 2 * sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
double kolmogorov_sf(double lambda);

// One-sample KS test of `values` against U(0,1). Returns {D, p_value}
// using the Stephens small-sample adjustment of the asymptotic tail.
struct KsResult {
    double statistic;
    double p_value;
};
KsResult ks_uniform_test(std::vector<double> values);

// KS test of `values` against N(mean, sd) (simple composite use: callers
// standardize with estimated moments themselves when appropriate).
KsResult ks_normal_test(std::vector<double> values, double mean, double sd);

double sample_mean(const std::vector<double>& v);
// Variance with divisor n (the library-wide MLE convention).
double sample_var_n(const std::vector<double>& v);

}  // namespace mixsig
