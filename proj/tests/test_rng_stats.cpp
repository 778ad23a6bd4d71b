#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mixsig/rng.hpp"
#include "mixsig/stats.hpp"

using namespace mixsig;

TEST_CASE("identical (seed, stream) reproduces draws bit for bit") {
    RngStream a(42, 7);
    RngStream b(42, 7);
    for (int i = 0; i < 1000; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    RngStream c(42, 7), d(42, 7);
    for (int i = 0; i < 1000; ++i) {
        CHECK(c.normal() == d.normal());
    }
}

TEST_CASE("different streams decorrelate") {
    RngStream a(42, 0);
    RngStream b(42, 1);
    int equal = 0;
    for (int i = 0; i < 1000; ++i) {
        equal += (a.next_u64() == b.next_u64());
    }
    CHECK(equal == 0);
}

TEST_CASE("derive is stable and order-sensitive") {
    RngStream root(9, 3);
    RngStream c1 = root.derive(5);
    RngStream c2 = root.derive(5);
    CHECK(c1.next_u64() == c2.next_u64());
    RngStream ab = root.derive(1).derive(2);
    RngStream ba = root.derive(2).derive(1);
    CHECK(ab.next_u64() != ba.next_u64());
}

TEST_CASE("uniform and normal moments") {
    RngStream rng(123);
    const int n = 200000;
    double su = 0.0, su2 = 0.0, sn = 0.0, sn2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        su += u;
        su2 += u * u;
        const double z = rng.normal();
        sn += z;
        sn2 += z * z;
    }
    CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(su2 / n == doctest::Approx(1.0 / 3.0).epsilon(0.01));
    CHECK(std::abs(sn / n) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("below stays in range and covers it") {
    RngStream rng(5);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 7000; ++i) {
        const auto v = rng.below(7);
        REQUIRE(v < 7);
        counts[static_cast<int>(v)]++;
    }
    for (int c : counts) CHECK(c > 700);
}

TEST_CASE("normal cdf/quantile basics") {
    CHECK(norm_cdf(0.0) == doctest::Approx(0.5));
    CHECK(norm_cdf(1.0) == doctest::Approx(0.8413447461).epsilon(1e-9));
    CHECK(norm_sf(1.6448536269514722) == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(norm_quantile(0.975) == doctest::Approx(1.959963985).epsilon(1e-8));
    for (double p : {0.001, 0.05, 0.3, 0.5, 0.9, 0.999}) {
        CHECK(norm_cdf(norm_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
    }
}

// Independent oracle: direct lgamma summation of the binomial upper tail.
static double binom_tail_direct(int k, int n) {
    double s = 0.0;
    for (int j = k; j <= n; ++j) {
        s += std::exp(std::lgamma(n + 1.0) - std::lgamma(j + 1.0) -
                      std::lgamma(n - j + 1.0) - n * std::log(2.0));
    }
    return s;
}

TEST_CASE("exact binomial(1/2) upper tail") {
    CHECK(binom_half_upper_tail(0, 10) == doctest::Approx(1.0));
    CHECK(binom_half_upper_tail(10, 10) == doctest::Approx(std::pow(2.0, -10)).epsilon(1e-12));
    CHECK(binom_half_upper_tail(32, 50) ==
          doctest::Approx(binom_tail_direct(32, 50)).epsilon(1e-10));
    CHECK(binom_half_upper_tail(60, 100) ==
          doctest::Approx(binom_tail_direct(60, 100)).epsilon(1e-10));
    CHECK(binom_half_upper_tail(101, 100) == doctest::Approx(0.0));
}

TEST_CASE("kolmogorov tail and KS test behave") {
    // Classical critical point: Q(1.3581) is close to 0.05.
    CHECK(kolmogorov_sf(1.3581) == doctest::Approx(0.05).epsilon(0.01));
    CHECK(kolmogorov_sf(0.0) == doctest::Approx(1.0));

    RngStream rng(77);
    std::vector<double> u(2000);
    for (auto& v : u) v = rng.uniform();
    const auto res = ks_uniform_test(u);
    CHECK(res.p_value > 0.001);

    // Clearly non-uniform sample must be rejected hard.
    std::vector<double> bad(2000);
    for (std::size_t i = 0; i < bad.size(); ++i) {
        bad[i] = 0.5 + 0.25 * rng.uniform();
    }
    CHECK(ks_uniform_test(bad).p_value < 1e-6);
}

TEST_CASE("sample moments") {
    std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    CHECK(sample_mean(v) == doctest::Approx(2.5));
    CHECK(sample_var_n(v) == doctest::Approx(1.25));
}
