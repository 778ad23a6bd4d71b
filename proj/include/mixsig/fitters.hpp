#pragma once

#include <cstddef>
#include <vector>

#include "mixsig/dist.hpp"
#include "mixsig/rng.hpp"

namespace mixsig {

struct EmOptions {
    std::size_t max_iter = 500;
    double tol = 1e-8;  // relative log-likelihood change
    std::size_t restarts = 10;
    enum class Init { kmeans_seeded, random_responsibility };
    Init init = Init::kmeans_seeded;
};

struct KmeansResult {
    Matrix centers;               // 2 x d
    std::vector<int> assignment;  // 0/1 per row
    double within_ss;             // mean within-cluster squared distance, W_n(b_n)
    std::size_t iterations;
};

struct SymKmeansResult {
    Vector center;     // t; the second center is -t
    double within_ss;  // W_n^(0)(t), same per-point normalization as KmeansResult
};

// k-component Gaussian mixture by EM, best of `restarts` runs by final
// log-likelihood. k = 1 reduces exactly to fit_single_gaussian.
Mixture em_fit(const DataMatrix& data, std::size_t k, const FitConstraints& c,
               const EmOptions& opts, RngStream& rng);

double loglik(const Mixture& m, const DataMatrix& data);

// Lloyd 2-means with k-means++ seeding, best of restarts by within_ss.
KmeansResult kmeans2(const DataMatrix& data, std::size_t restarts, RngStream& rng);

// 2-means constrained to centers {t, -t}: alternate sign assignment
// s_i = sign(x_i . t) and the update t = (1/n) sum s_i x_i.
SymKmeansResult symmetric_kmeans2(const DataMatrix& data, std::size_t restarts,
                                  RngStream& rng);

// Cluster index T = W / ((1/n) sum ||x_i - xbar||^2), numerator from plain or
// symmetric 2-means.
double sigclust_statistic(const DataMatrix& data, bool symmetric, std::size_t restarts,
                          RngStream& rng);

// Mean within-cluster squared distance of `data` for the given 2 x d centers.
double within_ss_of(const DataMatrix& data, const Matrix& centers);

}  // namespace mixsig
