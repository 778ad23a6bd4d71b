#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mixsig/errors.hpp"
#include "mixsig/theory.hpp"

using namespace mixsig;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

// Simpson-rule oracle for E[g(X) | X >= 0] of the folded mixture marginal,
// independent of the library's Gauss-Kronrod path.
double folded_expect_oracle(double a, double sigma, double (*g)(double, double),
                            double param) {
    const double h = 0.5 * a;
    auto dens = [&](double x) {
        auto phi = [](double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); };
        return 0.5 / sigma * (phi((x + h) / sigma) + phi((x - h) / sigma));
    };
    const int steps = 60000;
    const double upper = h + 12.0 * sigma;
    const double dx = upper / steps;
    double s = 0.0;
    for (int i = 0; i < steps; ++i) {
        const double x0 = i * dx, x1 = x0 + dx, xm = x0 + 0.5 * dx;
        s += dx / 6.0 *
             (g(x0, param) * dens(x0) + 4.0 * g(xm, param) * dens(xm) + g(x1, param) * dens(x1));
    }
    return 2.0 * s;
}

double ident(double x, double) { return x; }
double sq_dev(double x, double k) { return (x - k) * (x - k); }
double quart_dev(double x, double k) {
    const double c = (x - k) * (x - k);
    return c * c;
}

}  // namespace

TEST_CASE("null_moments formula values") {
    auto [w0, tau0] = null_moments(vec({2.0, 1.0}));
    CHECK(w0 == doctest::Approx(3.0 - 4.0 / M_PI).epsilon(1e-12));
    CHECK(tau0 == doctest::Approx(10.0 - 64.0 / (M_PI * M_PI)).epsilon(1e-12));

    auto [w1, tau1] = null_moments(vec({4.0, 1.0}));
    CHECK(w1 == doctest::Approx(5.0 - 8.0 / M_PI).epsilon(1e-12));

    auto [wd1, taud1] = null_moments(vec({1.0}));
    CHECK(wd1 == doctest::Approx(1.0 - 2.0 / M_PI).epsilon(1e-12));
    CHECK(taud1 == doctest::Approx(2.0 - 16.0 / (M_PI * M_PI)).epsilon(1e-12));

    CHECK_THROWS_AS(null_moments(vec({1.0, 1.0})), InputError);
    CHECK_THROWS_AS(null_moments(vec({1.0, 2.0})), InputError);
}

TEST_CASE("kappa closed form vs quadrature oracle") {
    CHECK(kappa(0.0, 1.0) == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-12));
    CHECK(kappa(0.0, 4.0) == doctest::Approx(2.0 * std::sqrt(2.0 / M_PI)).epsilon(1e-12));

    // Large separation: conditional mean approaches a/2.
    CHECK(kappa(100.0, 1.0) / 50.0 == doctest::Approx(1.0).epsilon(1e-6));

    CHECK(kappa(4.0, 1.0) == doctest::Approx(2.01700).epsilon(1e-4));
    for (double a : {0.5, 1.0, 2.0, 4.0, 7.0}) {
        const double oracle = folded_expect_oracle(a, 1.0, ident, 0.0);
        CHECK(kappa(a, 1.0) == doctest::Approx(oracle).epsilon(1e-8));
    }
    // Non-unit variance too.
    const double oracle = folded_expect_oracle(3.0, 1.7, ident, 0.0);
    CHECK(kappa(3.0, 1.7 * 1.7) == doctest::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("folded conditional variance matches Simpson oracle") {
    for (double a : {0.0, 1.0, 2.0, 4.0}) {
        const double k = kappa(a, 1.0);
        const double m2 = folded_expect_oracle(a, 1.0, sq_dev, k);
        const double m4 = folded_expect_oracle(a, 1.0, quart_dev, k);
        CHECK(folded_mixture_sq_var(a, 1.0) == doctest::Approx(m4 - m2 * m2).epsilon(1e-7));
    }
}

TEST_CASE("half-normal conditional variance matches closed moments") {
    for (double s2 : {0.5, 1.0, 3.0, 9.0}) {
        const double s = std::sqrt(s2);
        const double m = std::sqrt(2.0 / M_PI) * s;
        // Half-normal conditional moments: E X = m, E X^2 = s^2,
        // E X^3 = 2 m s^2, E X^4 = 3 s^4.
        const double e2 = s2 - m * m;
        const double e4 = 3.0 * s2 * s2 - 4.0 * m * (2.0 * m * s2) + 6.0 * m * m * s2 -
                          4.0 * m * m * m * m + m * m * m * m;
        const double expect = e4 - e2 * e2;
        CHECK(half_normal_sq_var(s2) == doctest::Approx(expect).epsilon(1e-8));
    }
}

TEST_CASE("alt_split regime classification and W values") {
    TheoryParams p;
    p.sigmas_sq = vec({1.0, 0.8});
    p.a = 2.0;
    auto first = alt_split(p);
    CHECK(first.regime == Regime::first_coord);
    const double k21 = kappa(2.0, 1.0);
    CHECK(k21 == doctest::Approx(1.16664).epsilon(1e-4));
    CHECK(first.w1 == doctest::Approx(2.8 - k21 * k21).epsilon(1e-10));
    CHECK(first.w1 == doctest::Approx(1.43895).epsilon(1e-4));
    CHECK(first.tau1_sq > 0.0);

    p.sigmas_sq = vec({1.0, 9.0});
    p.a = 1.0;
    auto second = alt_split(p);
    CHECK(second.regime == Regime::second_coord);
    CHECK(second.w1 == doctest::Approx(10.25 - 18.0 / M_PI).epsilon(1e-10));
    CHECK(second.w1 == doctest::Approx(4.52056).epsilon(1e-4));

    // a = 0 collapses to the null model.
    p.sigmas_sq = vec({1.0, 0.5});
    p.a = 0.0;
    auto collapsed = alt_split(p);
    auto [w0, tau0] = null_moments(vec({1.0, 0.5}));
    CHECK(collapsed.regime == Regime::first_coord);
    CHECK(collapsed.w1 == doctest::Approx(w0).epsilon(1e-10));
}

TEST_CASE("alt_split regime is monotone in sigma2^2") {
    TheoryParams p;
    p.a = 2.0;
    int state = 0;  // 0 = first, 1 = indeterminate, 2 = second
    for (double s2 = 0.3; s2 <= 8.0; s2 += 0.05) {
        p.sigmas_sq = vec({1.0, s2});
        const auto res = alt_split(p);
        int now = (res.regime == Regime::first_coord)    ? 0
                  : (res.regime == Regime::indeterminate) ? 1
                                                          : 2;
        CHECK(now >= state);
        state = now;
    }
    CHECK(state == 2);

    // Threshold arithmetic for sigma1 = 1, a = 2: first-coord below 2,
    // second-coord above (3 + sqrt(5))/2.
    p.sigmas_sq = vec({1.0, 1.99});
    CHECK(alt_split(p).regime == Regime::first_coord);
    p.sigmas_sq = vec({1.0, 2.5});
    CHECK(alt_split(p).regime == Regime::indeterminate);
    p.sigmas_sq = vec({1.0, 2.7});
    CHECK(alt_split(p).regime == Regime::second_coord);
}

TEST_CASE("null_moments_shifted values") {
    TheoryParams p;
    p.sigmas_sq = vec({2.0, 1.0});
    p.a = 0.0;
    auto [w0s, tau0s] = null_moments_shifted(p);
    auto [w0, tau0] = null_moments(p.sigmas_sq);
    CHECK(w0s == doctest::Approx(w0).epsilon(1e-12));
    CHECK(tau0s == doctest::Approx(tau0).epsilon(1e-12));

    p.sigmas_sq = vec({1.0, 9.0});
    p.a = 1.0;
    auto [wa, taua] = null_moments_shifted(p);
    CHECK(wa == doctest::Approx(10.25 - 18.0 / M_PI).epsilon(1e-12));

    p.sigmas_sq = vec({1.0, 0.5});
    p.a = 4.0;
    auto [wb, taub] = null_moments_shifted(p);
    CHECK(wb == doctest::Approx(5.5 - 10.0 / M_PI).epsilon(1e-12));
}

TEST_CASE("asymptotic_power limits") {
    TheoryParams p;
    p.sigmas_sq = vec({1.0, 0.8});
    p.a = 2.0;
    p.alpha = 0.05;

    p.n = 100000000;
    CHECK(asymptotic_power(p) > 0.999);

    p.n = 500;
    const double mid = asymptotic_power(p);
    CHECK(mid > 0.0);
    CHECK(mid < 1.0);

    // Inconsistent regime: power does not move with n.
    p.sigmas_sq = vec({1.0, 9.0});
    p.a = 1.0;
    p.n = 100;
    const double low_n = asymptotic_power(p);
    p.n = 1000000;
    CHECK(asymptotic_power(p) == doctest::Approx(low_n).epsilon(1e-12));

    // Indeterminate band refuses.
    p.sigmas_sq = vec({1.0, 2.5});
    p.a = 2.0;
    CHECK_THROWS_AS(asymptotic_power(p), NumericError);
}

TEST_CASE("kappa gap bound examples") {
    auto [gap1, bound1] = kappa_gap_bound(2.0, 1.0);
    CHECK(gap1 == doctest::Approx(0.08781).epsilon(1e-3));
    CHECK(bound1 == doctest::Approx(16.0 / (240.0 * M_PI)).epsilon(1e-12));
    CHECK(gap1 >= bound1);

    auto [gap0, bound0] = kappa_gap_bound(0.0, 1.0);
    CHECK(gap0 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(bound0 == doctest::Approx(0.0));

    auto [gap8, bound8] = kappa_gap_bound(8.0, 1.0);
    CHECK(bound8 == doctest::Approx(64.0 / 40.0).epsilon(1e-12));
    CHECK(gap8 >= 1.6);
}
