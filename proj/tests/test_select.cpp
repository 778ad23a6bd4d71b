#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mixsig/errors.hpp"
#include "mixsig/select.hpp"

using namespace mixsig;

namespace {

DataMatrix tetra_scenario(int d, double delta, int per_cluster, RngStream& rng) {
    const double s = delta / (2.0 * std::sqrt(2.0));
    const double v[4][3] = {{s, s, s}, {s, -s, -s}, {-s, s, -s}, {-s, -s, s}};
    DataMatrix out(4 * per_cluster, d);
    for (int k = 0; k < 4; ++k) {
        for (int i = 0; i < per_cluster; ++i) {
            for (int j = 0; j < d; ++j) {
                out(k * per_cluster + i, j) = (j < 3 ? v[k][j] : 0.0) + rng.normal();
            }
        }
    }
    return out;
}

DataMatrix gaussian_data(int n, int d, RngStream& rng) {
    Gaussian g{Vector::Zero(d), Matrix::Identity(d, d)};
    return mvn_sample(g, static_cast<std::size_t>(n), rng);
}

}  // namespace

TEST_CASE("default_kmax") {
    CHECK(default_kmax(4) == 2);
    CHECK(default_kmax(50) == 7);
    CHECK(default_kmax(1000) == 10);
    CHECK(default_kmax(1) == 1);
}

TEST_CASE("srift_select with K_n = 1 runs no tests") {
    RngStream gen(1);
    auto data = gaussian_data(100, 2, gen);
    FitConstraints c;
    RiftOptions opts;
    RngStream t(2);
    auto res = srift_select(data, 1, 0.05, SelectDistance::kl, c, opts, t);
    CHECK(res.k_hat == 1);
    REQUIRE(res.per_j.size() == 1);
    CHECK(res.per_j[0].tested_s.empty());
    CHECK(!res.per_j[0].rejected);
}

TEST_CASE("srift_select stops at its first acceptance") {
    RngStream gen(3);
    auto data = tetra_scenario(3, 6.0, 60, gen);
    FitConstraints c;
    RiftOptions opts;
    RngStream t(4);
    auto res = srift_select(data, 6, 0.05, SelectDistance::kl, c, opts, t);
    CHECK(res.k_hat >= 1);
    CHECK(res.k_hat <= 6);
    for (std::size_t i = 0; i + 1 < res.per_j.size(); ++i) CHECK(res.per_j[i].rejected);
    CHECK(res.per_j.back().j == res.k_hat);
    CHECK(!res.per_j.back().rejected);
}

TEST_CASE("srift_select type-I control on a single Gaussian") {
    FitConstraints c;
    RiftOptions opts;
    int over = 0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
        RngStream gen(100 + rep);
        auto data = gaussian_data(200, 2, gen);
        RngStream t(500 + rep);
        over += srift_select(data, 3, 0.05, SelectDistance::kl, c, opts, t).k_hat > 1;
    }
    const double se = std::sqrt(0.05 * 0.95 / reps);
    CHECK(static_cast<double>(over) / reps <= 0.05 + 3.0 * se);
}

TEST_CASE("srift_select on four tetrahedron components: kl finds them, l2 undershoots") {
    // In d = 10 each component has 65 free parameters against ~50 estimation
    // points; without a real covariance floor the restart winner is a
    // spike-degenerate fit and the held-out advantage of the k = 4 model is
    // noise. Flooring eigenvalues at half the true component variance keeps
    // every fit honest.
    FitConstraints c;
    c.eig_lo = 0.5;
    c.eig_hi = 1e6;
    RiftOptions opts;
    int hits_kl = 0, small_l2 = 0;
    const int reps = 15;
    for (int rep = 0; rep < reps; ++rep) {
        RngStream gen(1100 + rep);
        auto data = tetra_scenario(10, 10.0, 100, gen);
        RngStream t1(1500 + rep), t2(1500 + rep);
        hits_kl += srift_select(data, 6, 0.05, SelectDistance::kl, c, opts, t1).k_hat == 4;
        small_l2 += srift_select(data, 6, 0.05, SelectDistance::l2, c, opts, t2).k_hat <= 2;
    }
    CHECK(hits_kl >= 11);
    // The l2 distance between well-separated mixtures is dominated by the
    // self-integrals, so the sequential l2 test is known to underestimate k.
    CHECK(small_l2 >= 12);
}

TEST_CASE("ic_select: BIC prefers one component on a single Gaussian") {
    FitConstraints c;
    RiftOptions opts;
    int ones = 0;
    const int reps = 20;
    for (int rep = 0; rep < reps; ++rep) {
        RngStream gen(2100 + rep);
        auto data = gaussian_data(2000, 2, gen);
        RngStream t(2500 + rep);
        const int k = ic_select(data, 5, Criterion::bic, c, opts, t);
        CHECK(k >= 1);
        CHECK(k <= 5);
        ones += k == 1;
    }
    CHECK(ones >= 18);
}

TEST_CASE("ic_select on the tetrahedron: AIC resolves all four, BIC merges") {
    FitConstraints c;
    c.eig_lo = 0.5;
    c.eig_hi = 1e6;
    RiftOptions opts;
    int aic4 = 0, bic3 = 0;
    const int reps = 10;
    for (int rep = 0; rep < reps; ++rep) {
        RngStream gen(3100 + rep);
        auto data = tetra_scenario(10, 10.0, 100, gen);
        RngStream ta(3500 + rep), tb(3500 + rep);
        const int ka = ic_select(data, 6, Criterion::aic, c, opts, ta);
        const int kb = ic_select(data, 6, Criterion::bic, c, opts, tb);
        CHECK(ka >= 1);
        CHECK(ka <= 6);
        CHECK(kb >= 1);
        CHECK(kb <= 6);
        aic4 += ka == 4;
        bic3 += kb == 3;
    }
    CHECK(aic4 >= 8);
    // Reference behavior for this scenario is BIC settling on 3 clusters.
    // With the estimation-half likelihood both pair-splitting moves gain the
    // same ~250 in 2 log L, below the per-component penalty ln(200)*66, so a
    // correctly minimized BIC stops at 2 and this check stays red.
    CHECK(bic3 >= 6);
}

TEST_CASE("preconditions") {
    RngStream gen(5);
    auto data = gaussian_data(20, 2, gen);
    FitConstraints c;
    RiftOptions opts;
    RngStream t(6);
    CHECK_THROWS_AS(srift_select(data, 0, 0.05, SelectDistance::kl, c, opts, t), InputError);
    CHECK_THROWS_AS(srift_select(data, 6, 0.05, SelectDistance::kl, c, opts, t), InputError);
    CHECK_THROWS_AS(ic_select(data, 6, Criterion::bic, c, opts, t), InputError);
}
