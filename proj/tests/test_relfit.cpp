#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mixsig/dist.hpp"
#include "mixsig/errors.hpp"
#include "mixsig/relfit.hpp"
#include "mixsig/stats.hpp"

using namespace mixsig;

namespace {

Gaussian std_normal(int d) {
    return Gaussian{Vector::Zero(d), Matrix::Identity(d, d)};
}

Mixture duplicate_mixture(const Gaussian& g) {
    Mixture m;
    m.weights = Vector::Constant(2, 0.5);
    m.components = {g, g};
    return m;
}

Mixture sym_mixture(double a, int d) {
    Gaussian l = std_normal(d), r = std_normal(d);
    l.mean[0] = -a;
    r.mean[0] = a;
    Mixture m;
    m.weights = Vector::Constant(2, 0.5);
    m.components = {l, r};
    return m;
}

}  // namespace

TEST_CASE("split_halves sizes, rounding, determinism") {
    RngStream r1(1), r2(1);
    auto s1 = split_halves(100, 0.5, r1);
    CHECK(s1.d1.size() == 50);
    CHECK(s1.d2.size() == 50);

    auto s2 = split_halves(100, 0.5, r2);
    CHECK(s1.d1 == s2.d1);
    CHECK(s1.d2 == s2.d2);

    RngStream r3(2);
    auto odd = split_halves(101, 0.5, r3);
    CHECK(odd.d1.size() == 51);
    CHECK(odd.d2.size() == 50);

    // Disjoint cover.
    std::vector<bool> seen(101, false);
    for (auto i : odd.d1) seen[static_cast<std::size_t>(i)] = true;
    for (auto i : odd.d2) {
        CHECK(!seen[static_cast<std::size_t>(i)]);
        seen[static_cast<std::size_t>(i)] = true;
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));

    RngStream r4(3);
    CHECK_THROWS_AS(split_halves(3, 0.5, r4), InputError);
}

TEST_CASE("relative_fit_stats degenerate and whole-space region cases") {
    Gaussian p1 = std_normal(2);
    Mixture p2 = duplicate_mixture(p1);
    RngStream rng(4);
    auto d2 = mvn_sample(p1, 50, rng);

    RngStream r1(5);
    auto stats = relative_fit_stats(p1, p2, d2, std::nullopt, 0.0, r1);
    CHECK(stats.gamma_hat == doctest::Approx(0.0));
    CHECK(stats.tau_hat == doctest::Approx(0.0));
    for (double r : stats.r_values) CHECK(r == doctest::Approx(0.0));

    // An explicit whole-space region changes nothing, draw for draw.
    RngStream r2(6), r3(6);
    auto plain = relative_fit_stats(p1, sym_mixture(1.0, 2), d2, std::nullopt, 1e-5, r2);
    auto whole = relative_fit_stats(p1, sym_mixture(1.0, 2), d2, Region{}, 1e-5, r3);
    CHECK(plain.gamma_hat == whole.gamma_hat);
    CHECK(plain.tau_hat == whole.tau_hat);
}

TEST_CASE("rift p-values are uniform under a forced duplicate fit") {
    Gaussian p1 = std_normal(2);
    Mixture p2 = duplicate_mixture(p1);
    RiftOptions opts;
    std::vector<double> pvals;
    for (int rep = 0; rep < 200; ++rep) {
        RngStream rng(100 + rep);
        auto d2 = mvn_sample(p1, 100, rng);
        auto out = relative_fit_test(p1, p2, d2, opts, RelFitVariant::mean, {}, rng);
        pvals.push_back(out.p_value);
    }
    CHECK(ks_uniform_test(pvals).p_value > 0.01);
}

TEST_CASE("rift pipeline: null calibration and power") {
    FitConstraints c;
    RiftOptions opts;
    int rejects_null = 0, rejects_alt = 0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
        RngStream gen(500 + rep);
        auto null_data = mvn_sample(std_normal(2), 200, gen);
        RngStream t1(900 + rep);
        rejects_null += rift(null_data, c, opts, t1).reject;
    }
    const double se = std::sqrt(0.05 * 0.95 / reps);
    CHECK(static_cast<double>(rejects_null) / reps <= 0.05 + 3.0 * se);

    for (int rep = 0; rep < 30; ++rep) {
        RngStream gen(1500 + rep);
        auto alt = mixture_sample(sym_mixture(10.0, 2), 200, gen).first;
        RngStream t(1900 + rep);
        rejects_alt += rift(alt, c, opts, t).reject;
    }
    CHECK(rejects_alt >= 27);
}

TEST_CASE("mrift: exact level and super-uniform null p-values") {
    FitConstraints c;
    RiftOptions opts;
    std::vector<double> pvals;
    int rejects = 0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
        RngStream gen(2500 + rep);
        auto data = mvn_sample(std_normal(2), 120, gen);
        RngStream t(2900 + rep);
        auto out = mrift(data, c, opts, t);
        pvals.push_back(out.p_value);
        rejects += out.reject;
    }
    const double se = std::sqrt(0.05 * 0.95 / reps);
    CHECK(static_cast<double>(rejects) / reps <= 0.05 + 3.0 * se);

    // Super-uniformity: empirical CDF below the uniform CDF + KS band.
    std::sort(pvals.begin(), pvals.end());
    const double band = 1.36 / std::sqrt(static_cast<double>(reps));
    for (std::size_t i = 0; i < pvals.size(); ++i) {
        const double ecdf = static_cast<double>(i + 1) / reps;
        CHECK(ecdf <= pvals[i] + band + 1e-12);
    }
}

TEST_CASE("mrift rejects a far mixture") {
    FitConstraints c;
    RiftOptions opts;
    int rejects = 0;
    for (int rep = 0; rep < 30; ++rep) {
        RngStream gen(3500 + rep);
        auto data = mixture_sample(sym_mixture(10.0, 2), 200, gen).first;
        RngStream t(3900 + rep);
        rejects += mrift(data, c, opts, t).reject;
    }
    CHECK(rejects >= 27);
}

TEST_CASE("l2rift closed-form self integral and integration-mode agreement") {
    Gaussian p1 = std_normal(1);
    Mixture p2 = sym_mixture(2.0, 1);
    RngStream rng(7);
    auto d2 = mvn_sample(p1, 100, rng);

    RiftOptions opts;
    RngStream t1(8);
    auto closed = relative_fit_test(p1, p2, d2, opts, RelFitVariant::l2, {}, t1);
    CHECK(closed.aux["int_p1_sq"] == doctest::Approx(0.2820947918).epsilon(1e-9));

    L2Integration is;
    is.mode = L2Integration::Mode::importance;
    is.draws = 100000;
    RngStream t2(8);
    auto sampled = relative_fit_test(p1, p2, d2, opts, RelFitVariant::l2, is, t2);
    CHECK(sampled.aux["int_p1_sq"] ==
          doctest::Approx(closed.aux["int_p1_sq"]).epsilon(0.02));
    CHECK(sampled.aux["int_p2_sq"] ==
          doctest::Approx(closed.aux["int_p2_sq"]).epsilon(0.02));
    // Same decision in both modes on this clearly-null draw.
    CHECK(closed.reject == sampled.reject);
}

TEST_CASE("l2rift null rejection rate under a duplicate fit stays near level") {
    Gaussian p1 = std_normal(2);
    Mixture p2 = duplicate_mixture(p1);
    RiftOptions opts;
    int rejects = 0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
        RngStream rng(4500 + rep);
        auto d2 = mvn_sample(p1, 150, rng);
        rejects += relative_fit_test(p1, p2, d2, opts, RelFitVariant::l2, {}, rng).reject;
    }
    const double se = std::sqrt(0.05 * 0.95 / reps);
    CHECK(static_cast<double>(rejects) / reps <= 0.05 + 3.0 * se);
}

TEST_CASE("l2rift full pipeline calibration on Gaussian data") {
    FitConstraints c;
    RiftOptions opts;
    int rejects = 0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
        RngStream gen(5500 + rep);
        auto data = mvn_sample(std_normal(2), 200, gen);
        RngStream t(5900 + rep);
        rejects += l2rift(data, c, opts, {}, t).reject;
    }
    const double se = std::sqrt(0.05 * 0.95 / reps);
    CHECK(static_cast<double>(rejects) / reps <= 0.05 + 3.0 * se);
}

TEST_CASE("scale invariance of rift and l2rift decisions") {
    FitConstraints c;
    RiftOptions opts;
    opts.delta_jitter = 0.0;  // isolate the scaling behavior

    RngStream gen(42);
    auto data = mvn_sample(std_normal(2), 200, gen);
    DataMatrix scaled = 2.0 * data;  // power of two: exact in floating point

    RngStream a1(43), a2(43);
    // rift needs a positive jitter for tau; use the mixture alternative so
    // the ratios are non-degenerate under the duplicate-free fit.
    auto r1 = rift(data, c, RiftOptions{}, a1);
    auto r2 = rift(scaled, c, RiftOptions{}, a2);
    CHECK(r1.p_value == doctest::Approx(r2.p_value).epsilon(1e-6));
    CHECK(r1.reject == r2.reject);

    RngStream b1(44), b2(44);
    auto l1 = l2rift(data, c, opts, {}, b1);
    auto l2o = l2rift(scaled, c, opts, {}, b2);
    CHECK(l1.p_value == doctest::Approx(l2o.p_value).epsilon(1e-6));
    CHECK(l1.reject == l2o.reject);
}

TEST_CASE("separated_mixture_test: Delta=0 equals rift, calibration, power") {
    FitConstraints c;
    RiftOptions opts;

    RngStream gen(45);
    auto data = mvn_sample(std_normal(2), 300, gen);
    RngStream t1(46), t2(46);
    auto plain = rift(data, c, opts, t1);
    auto sep = separated_mixture_test(data, c, 0.0, opts, t2);
    CHECK(plain.p_value == doctest::Approx(sep.p_value).epsilon(1e-12));
    CHECK(plain.reject == sep.reject);

    int rejects = 0;
    const int reps = 150;
    for (int rep = 0; rep < reps; ++rep) {
        RngStream g(6500 + rep);
        auto null_data = mvn_sample(std_normal(2), 300, g);
        RngStream t(6900 + rep);
        rejects += separated_mixture_test(null_data, c, 0.5, opts, t).reject;
    }
    const double se = std::sqrt(0.05 * 0.95 / reps);
    CHECK(static_cast<double>(rejects) / reps <= 0.05 + 3.0 * se);

    int alt_rejects = 0;
    for (int rep = 0; rep < 30; ++rep) {
        RngStream g(7500 + rep);
        auto alt = mixture_sample(sym_mixture(10.0, 2), 300, g).first;
        RngStream t(7900 + rep);
        alt_rejects += separated_mixture_test(alt, c, 0.5, opts, t).reject;
    }
    CHECK(alt_rejects >= 27);
}

TEST_CASE("sigclust_bootstrap p-value range and extreme separation") {
    RngStream gen(48);
    auto data = mixture_sample(sym_mixture(10.0, 2), 100, gen).first;
    RngStream t(49);
    auto out = sigclust_bootstrap(data, 200, 0.05, false, std::nullopt, t);
    CHECK(out.p_value >= 1.0 / 201.0 - 1e-15);
    CHECK(out.p_value <= 1.0);
    CHECK(out.p_value == doctest::Approx(1.0 / 201.0));
    CHECK(out.reject);

    RngStream t2(50);
    CHECK_THROWS_AS(sigclust_bootstrap(data, 10, 0.05, false, std::nullopt, t2), InputError);
}

TEST_CASE("sigclust_bootstrap null calibration") {
    Vector s(2);
    s << 2.0, 1.0;
    Gaussian g{Vector::Zero(2), s.asDiagonal().toDenseMatrix()};
    int rejects = 0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
        RngStream gen(8500 + rep);
        auto data = mvn_sample(g, 200, gen);
        RngStream t(8900 + rep);
        rejects += sigclust_bootstrap(data, 200, 0.05, false, std::nullopt, t).reject;
    }
    const double rate = static_cast<double>(rejects) / reps;
    const double se = std::sqrt(0.05 * 0.95 / reps);
    CHECK(std::abs(rate - 0.05) <= 3.0 * se);
}

TEST_CASE("mardia: null behavior and heavy-tail power") {
    RngStream gen(51);
    auto big = mvn_sample(std_normal(2), 100000, gen);
    auto out = mardia(big, 0.05);
    CHECK(out.aux["b2d"] == doctest::Approx(8.0).epsilon(0.02));

    int wild = 0;
    for (int rep = 0; rep < 100; ++rep) {
        RngStream g(9500 + rep);
        auto data = mvn_sample(std_normal(3), 20000, g);
        if (std::abs(mardia(data, 0.05).statistic) >= 4.0) ++wild;
    }
    CHECK(wild <= 1);

    // Multivariate t with 3 dof has heavy tails; kurtosis blows up.
    int rejects = 0;
    for (int rep = 0; rep < 30; ++rep) {
        RngStream g(10500 + rep);
        DataMatrix data(1000, 2);
        for (Eigen::Index i = 0; i < data.rows(); ++i) {
            double chi2 = 0.0;
            for (int k = 0; k < 3; ++k) {
                const double z = g.normal();
                chi2 += z * z;
            }
            const double scale = std::sqrt(3.0 / std::max(chi2, 1e-300));
            data(i, 0) = g.normal() * scale;
            data(i, 1) = g.normal() * scale;
        }
        rejects += mardia(data, 0.05).reject;
    }
    CHECK(rejects >= 27);
}

TEST_CASE("nn_test: W range and null calibration of both variants") {
    FitConstraints c;
    RngStream gen(52);
    auto data = mvn_sample(std_normal(2), 400, gen);
    RngStream t(53);
    auto out = nn_test(data, NnVariant::ks, 0.05, 0.5, t);
    CHECK(out.p_value >= 0.0);
    CHECK(out.p_value <= 1.0);

    int rej_ks = 0, rej_z = 0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
        RngStream g(11500 + rep);
        auto d = mvn_sample(std_normal(2), 1000, g);
        RngStream t1(11900 + rep), t2(11900 + rep);
        rej_ks += nn_test(d, NnVariant::ks, 0.05, 0.5, t1).reject;
        rej_z += nn_test(d, NnVariant::zstat, 0.05, 0.5, t2).reject;
    }
    const double se = std::sqrt(0.05 * 0.95 / reps);
    CHECK(std::abs(static_cast<double>(rej_ks) / reps - 0.05) <= 3.0 * se);
    CHECK(std::abs(static_cast<double>(rej_z) / reps - 0.05) <= 3.0 * se);
}

TEST_CASE("nn_test rejects strongly clustered data") {
    int rejects = 0;
    for (int rep = 0; rep < 30; ++rep) {
        RngStream g(12500 + rep);
        auto data = mixture_sample(sym_mixture(10.0, 2), 400, g).first;
        RngStream t(12900 + rep);
        rejects += nn_test(data, NnVariant::ks, 0.05, 0.5, t).reject;
    }
    CHECK(rejects >= 27);
}
