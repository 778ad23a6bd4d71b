#include "mixsig/theory.hpp"

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mixsig/errors.hpp"
#include "mixsig/stats.hpp"

namespace mixsig {

namespace {

using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;

double phi(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
}

void check_null_ordering(const Vector& s) {
    if (s.size() < 1) throw InputError("null_moments: empty variance vector");
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (!(s[i] > 0.0)) throw InputError("null_moments: variances must be positive");
    }
    for (Eigen::Index i = 1; i < s.size(); ++i) {
        if (!(s[0] > s[i])) {
            throw InputError("null_moments: sigma1^2 must be strictly largest");
        }
    }
}

void check_alt_ordering(const Vector& s) {
    if (s.size() < 1) throw InputError("alt_split: empty variance vector");
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (!(s[i] > 0.0)) throw InputError("alt_split: variances must be positive");
    }
    for (Eigen::Index i = 2; i < s.size(); ++i) {
        if (!(s[0] > s[i]) || !(s[1] > s[i])) {
            throw InputError("alt_split: sigma1^2, sigma2^2 must exceed the tail variances");
        }
        if (i + 1 < s.size() && s[i] < s[i + 1]) {
            throw InputError("alt_split: tail variances must be non-increasing");
        }
    }
}

// E[g(X) | X >= 0] for the symmetric mixture marginal
// X ~ 0.5 N(-h, s^2) + 0.5 N(h, s^2) (P(X >= 0) = 1/2 exactly).
template <typename G>
double folded_mixture_expect(double h, double sigma, G g) {
    auto integrand = [&](double x) {
        const double dens = 0.5 / sigma * (phi((x + h) / sigma) + phi((x - h) / sigma));
        return g(x) * dens;
    };
    const double upper = h + 12.0 * sigma;
    return 2.0 * Quad::integrate(integrand, 0.0, upper, 15, 1e-10);
}

}  // namespace

double folded_mixture_sq_var(double a, double sigma1_sq) {
    const double sigma = std::sqrt(sigma1_sq);
    const double h = 0.5 * a;
    const double k = kappa(a, sigma1_sq);
    const double m2 = folded_mixture_expect(h, sigma, [&](double x) {
        const double c = (x - k) * (x - k);
        return c;
    });
    const double m4 = folded_mixture_expect(h, sigma, [&](double x) {
        const double c = (x - k) * (x - k);
        return c * c;
    });
    return m4 - m2 * m2;
}

double half_normal_sq_var(double sigma_sq) {
    const double sigma = std::sqrt(sigma_sq);
    const double m = std::sqrt(2.0 / M_PI) * sigma;
    auto expect = [&](auto g) {
        auto integrand = [&](double x) { return g(x) * 2.0 / sigma * phi(x / sigma); };
        return Quad::integrate(integrand, 0.0, 12.0 * sigma, 15, 1e-10);
    };
    const double m2 = expect([&](double x) { return (x - m) * (x - m); });
    const double m4 = expect([&](double x) {
        const double c = (x - m) * (x - m);
        return c * c;
    });
    return m4 - m2 * m2;
}

std::pair<double, double> null_moments(const Vector& sigmas_sq) {
    check_null_ordering(sigmas_sq);
    const double sum_sq = sigmas_sq.sum();
    const double sum_4 = sigmas_sq.array().square().sum();
    const double s1 = sigmas_sq[0];
    const double w0 = sum_sq - 2.0 * s1 / M_PI;
    const double tau0_sq = 2.0 * sum_4 - 16.0 * s1 * s1 / (M_PI * M_PI);
    return {w0, tau0_sq};
}

double kappa(double a, double sigma1_sq) {
    if (!(sigma1_sq > 0.0)) throw InputError("kappa: sigma1^2 must be positive");
    if (a < 0.0) throw InputError("kappa: a must be >= 0");
    const double sigma = std::sqrt(sigma1_sq);
    const double u = a / (2.0 * sigma);
    // P(|Z| <= u) = erf(u / sqrt(2)).
    return 0.5 * a * std::erf(u * M_SQRT1_2) +
           std::sqrt(2.0 / M_PI) * sigma * std::exp(-0.5 * u * u);
}

RegimeResult alt_split(const TheoryParams& params) {
    check_alt_ordering(params.sigmas_sq);
    if (params.a < 0.0) throw InputError("alt_split: a must be >= 0");
    const Vector& s = params.sigmas_sq;
    const double a = params.a;
    const double s1 = s[0];
    const double s2 = (s.size() > 1) ? s[1] : 0.0;
    const double sum_sq = s.sum();
    const double k = kappa(a, s1);

    // Candidate splits: along the signal coordinate or along coordinate 2.
    const double w_first = sum_sq + 0.25 * a * a - k * k;
    const double w_second = sum_sq + 0.25 * a * a - 2.0 * s2 / M_PI;

    auto tau_first = [&]() {
        double tail4 = 0.0;
        for (Eigen::Index j = 1; j < s.size(); ++j) tail4 += s[j] * s[j];
        return 2.0 * tail4 + folded_mixture_sq_var(a, s1);
    };
    auto tau_second = [&]() {
        double rest4 = s1 * s1;
        for (Eigen::Index j = 2; j < s.size(); ++j) rest4 += s[j] * s[j];
        return 2.0 * rest4 + half_normal_sq_var(s2) + s1 * a * a;
    };

    const double thr_consistent = s1 + 0.25 * a * a;
    const double a4 = a * a * a * a;
    const double thr_quartic = (2.0 * s1 * s1 + a4 / 16.0 +
                                0.5 * a * a * std::sqrt(s1 * s1 + a4 / 64.0)) /
                               (2.0 * s1);
    const double thr_inconsistent = std::max({thr_quartic, 0.5 * M_PI * k * k,
                                              thr_consistent});

    if (s.size() > 1 && s2 > thr_inconsistent) {
        return RegimeResult{Regime::second_coord, w_second, tau_second()};
    }
    if (s.size() == 1 || s2 < thr_consistent) {
        return RegimeResult{Regime::first_coord, w_first, tau_first()};
    }
    // Between (or exactly at) the thresholds nothing is proven; report the
    // better candidate but flag it.
    if (w_first <= w_second) {
        return RegimeResult{Regime::indeterminate, w_first, tau_first()};
    }
    return RegimeResult{Regime::indeterminate, w_second, tau_second()};
}

std::pair<double, double> null_moments_shifted(const TheoryParams& params) {
    check_alt_ordering(params.sigmas_sq);
    const Vector& s = params.sigmas_sq;
    const double top = s[0] + 0.25 * params.a * params.a;
    const double sigma_tilde_sq = s.sum() + 0.25 * params.a * params.a;
    const double big = std::max(top, (s.size() > 1) ? s[1] : 0.0);
    double tail4 = 0.0;
    for (Eigen::Index j = 1; j < s.size(); ++j) tail4 += s[j] * s[j];
    const double w0 = sigma_tilde_sq - 2.0 * big / M_PI;
    const double tau0_sq = 2.0 * tail4 + 2.0 * top * top - 16.0 * big * big / (M_PI * M_PI);
    return {w0, tau0_sq};
}

double asymptotic_power(const TheoryParams& params) {
    if (!(params.alpha > 0.0 && params.alpha < 1.0)) {
        throw InputError("asymptotic_power: alpha must be in (0,1)");
    }
    if (params.n == 0) throw InputError("asymptotic_power: n must be >= 1");
    const RegimeResult alt = alt_split(params);
    if (alt.regime == Regime::indeterminate) {
        throw NumericError(
            "asymptotic_power: parameters fall in the indeterminate band between the "
            "split-regime thresholds; the limiting split is not characterized there");
    }
    const auto [w0, tau0_sq] = null_moments_shifted(params);
    const double tau0 = std::sqrt(tau0_sq);
    const double tau1 = std::sqrt(alt.tau1_sq);
    const double shift = std::sqrt(static_cast<double>(params.n)) * (w0 - alt.w1);
    return norm_cdf((tau0 * norm_quantile(params.alpha) + shift) / tau1);
}

std::pair<double, double> kappa_gap_bound(double a, double sigma1_sq) {
    const double k = kappa(a, sigma1_sq);
    const double gap = k * k - (2.0 / M_PI) * (sigma1_sq + 0.25 * a * a);
    const double sigma = std::sqrt(sigma1_sq);
    const double bound = (a <= 4.0 * sigma)
                             ? a * a * a * a / (240.0 * sigma1_sq * M_PI)
                             : a * a / 40.0;
    return {gap, bound};
}

}  // namespace mixsig
