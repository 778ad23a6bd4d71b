#include "mixsig/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/normal.hpp>

#include "mixsig/errors.hpp"

namespace mixsig {

double norm_cdf(double x) {
    return 0.5 * std::erfc(-x * M_SQRT1_2);
}

double norm_sf(double x) {
    return 0.5 * std::erfc(x * M_SQRT1_2);
}

double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw InputError("norm_quantile: p must be in (0,1)");
    }
    static const boost::math::normal_distribution<double> unit(0.0, 1.0);
    return boost::math::quantile(unit, p);
}

double binom_half_upper_tail(std::size_t k, std::size_t n) {
    if (k == 0) return 1.0;
    if (k > n) return 0.0;
    const boost::math::binomial_distribution<double> bin(static_cast<double>(n), 0.5);
    // P(X >= k) = 1 - P(X <= k-1), computed through the complement to keep
    // precision in the far tail.
    return boost::math::cdf(boost::math::complement(bin, static_cast<double>(k) - 1.0));
}

double kolmogorov_sf(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += sign * term;
        if (term < 1e-16) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_uniform_test(std::vector<double> values) {
    const std::size_t n = values.size();
    if (n == 0) throw InputError("ks_uniform_test: empty sample");
    std::sort(values.begin(), values.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = std::clamp(values[i], 0.0, 1.0);
        const double hi = static_cast<double>(i + 1) / n - u;
        const double lo = u - static_cast<double>(i) / n;
        d = std::max({d, hi, lo});
    }
    const double sn = std::sqrt(static_cast<double>(n));
    // Stephens (1970) effective sample size correction.
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    return {d, kolmogorov_sf(lambda)};
}

KsResult ks_normal_test(std::vector<double> values, double mean, double sd) {
    if (sd <= 0.0) throw NumericError("ks_normal_test: non-positive sd");
    for (auto& v : values) v = norm_cdf((v - mean) / sd);
    return ks_uniform_test(std::move(values));
}

double sample_mean(const std::vector<double>& v) {
    if (v.empty()) throw InputError("sample_mean: empty sample");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_var_n(const std::vector<double>& v) {
    const double m = sample_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

}  // namespace mixsig
