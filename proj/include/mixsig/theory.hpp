#pragma once

#include <cstddef>
#include <utility>

#include "mixsig/dist.hpp"

namespace mixsig {

// Parameters of the analytic model: a symmetric two-component mixture
// 0.5 N(-theta, D) + 0.5 N(theta, D) with theta = (a/2, 0, ..., 0) and
// D = diag(sigmas_sq). a = 0 recovers the single-Gaussian null.
struct TheoryParams {
    Vector sigmas_sq;
    double a = 0.0;
    std::size_t n = 0;
    double alpha = 0.05;
};

enum class Regime { first_coord, second_coord, indeterminate };

struct RegimeResult {
    Regime regime;
    double w1;       // optimal constrained within-cluster sum of squares
    double tau1_sq;  // variance of the limiting normal for W_n^(0)
};

// Population 2-means moments under N(0, diag(sigmas_sq)) with sigma1^2
// strictly largest: W = sum sigma_i^2 - 2 sigma1^2 / pi,
// tau^2 = 2 sum sigma_i^4 - 16 sigma1^4 / pi^2.
std::pair<double, double> null_moments(const Vector& sigmas_sq);

// kappa = E[Y | Y > 0] for Y ~ 0.5 N(-a/2, s1^2) + 0.5 N(a/2, s1^2).
double kappa(double a, double sigma1_sq);

// Which coordinate carries the optimal symmetric split, with the matching
// W1 and tau1^2. Between the two analytic thresholds the optimum is not
// characterized; that band is reported as indeterminate with the better of
// the two candidate splits filled in.
RegimeResult alt_split(const TheoryParams& params);

// Moments of the matched Gaussian null N(0, diag(sigma1^2 + a^2/4,
// sigma2^2, ..., sigmad^2)) fitted to the mixture.
std::pair<double, double> null_moments_shifted(const TheoryParams& params);

// Asymptotic rejection probability of the symmetric-statistic test at level
// alpha and sample size n. Throws NumericError in the indeterminate band.
double asymptotic_power(const TheoryParams& params);

// gap = kappa^2 - (2/pi)(sigma1^2 + a^2/4) and its analytic lower bound
// (a^4 / (240 sigma1^2 pi) for a <= 4 sigma1, a^2/40 beyond).
std::pair<double, double> kappa_gap_bound(double a, double sigma1_sq);

// var((X - kappa)^2 | X >= 0) for the two-component marginal
// X ~ 0.5 N(-a/2, s1^2) + 0.5 N(a/2, s1^2), by adaptive quadrature.
// Exposed for oracle cross-checks.
double folded_mixture_sq_var(double a, double sigma1_sq);

// var((X - sqrt(2/pi) s)^2 | X >= 0) for X ~ N(0, s^2), by quadrature.
double half_normal_sq_var(double sigma_sq);

}  // namespace mixsig
