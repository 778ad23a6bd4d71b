#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mixsig/dist.hpp"
#include "mixsig/fitters.hpp"
#include "mixsig/rng.hpp"

namespace mixsig {

struct TestOutcome {
    std::string method;
    double statistic = 0.0;
    double p_value = 1.0;
    bool reject = false;
    double alpha = 0.05;
    std::map<std::string, double> aux;
};

struct SplitHalves {
    std::vector<Eigen::Index> d1;  // estimation half
    std::vector<Eigen::Index> d2;  // testing half
    double ratio = 0.5;
};

struct RiftOptions {
    double delta_jitter = 1e-5;
    double alpha = 0.05;
    double split_ratio = 0.5;
    std::optional<Region> region;
    std::size_t trunc_mc = 100000;  // draws for region-mass estimates
    EmOptions em;                   // options for the 2-component fit
};

// How the l2 relative-fit integrals are evaluated.
struct L2Integration {
    enum class Mode { closed_form, importance };
    Mode mode = Mode::closed_form;
    std::size_t draws = 100000;
    unsigned t_dof = 3;  // degrees of freedom of the t proposal
};

// Uniform random partition of {0..n-1} with |D1| = round(ratio * n),
// round-half-up.
SplitHalves split_halves(std::size_t n, double ratio, RngStream& rng);

struct RelFitStats {
    double gamma_hat = 0.0;
    double tau_hat = 0.0;
    std::vector<double> r_values;  // jittered log ratios
};

// Jittered log-density ratios R~_i = log p2 - log p1 + delta Z_i over the
// rows of d2; with a region, each log-density is first renormalized by the
// model's Monte-Carlo mass inside it.
RelFitStats relative_fit_stats(const Gaussian& p1, const Mixture& p2, const DataMatrix& d2,
                               const std::optional<Region>& region, double delta,
                               RngStream& rng, std::size_t trunc_mc = 100000);

// The three relative-fit tests computed from already-fitted models on a
// held-out sample. `variant` selects mean (rift), sign (mrift) or l2.
enum class RelFitVariant { mean, sign, l2 };
TestOutcome relative_fit_test(const Gaussian& p1, const Mixture& p2, const DataMatrix& d2,
                              const RiftOptions& opts, RelFitVariant variant,
                              const L2Integration& integration, RngStream& rng);

// Full pipelines: split, fit both models on D1, test on D2.
TestOutcome rift(const DataMatrix& data, const FitConstraints& c, const RiftOptions& opts,
                 RngStream& rng);
TestOutcome mrift(const DataMatrix& data, const FitConstraints& c, const RiftOptions& opts,
                  RngStream& rng);
TestOutcome l2rift(const DataMatrix& data, const FitConstraints& c, const RiftOptions& opts,
                   const L2Integration& integration, RngStream& rng);

// RIFT with the two-component fit pushed away from the single-Gaussian null
// until KL(q*, p2) >= Delta, where q* is the moment-matched Gaussian of p2.
TestOutcome separated_mixture_test(const DataMatrix& data, const FitConstraints& c,
                                   double Delta, const RiftOptions& opts, RngStream& rng);

// Parametric bootstrap cluster-index test. With a region, the null Gaussian
// is rejection-sampled into it.
TestOutcome sigclust_bootstrap(const DataMatrix& data, std::size_t B, double alpha,
                               bool symmetric, const std::optional<Region>& region,
                               RngStream& rng, std::size_t kmeans_restarts = 5);

// Multivariate kurtosis test: z = sqrt(n) (b_2d - d(d+2)) / sqrt(8 d (d+2)),
// two-sided.
TestOutcome mardia(const DataMatrix& data, double alpha);

// Nearest-neighbor goodness-of-fit against a Gaussian fitted on D1.
enum class NnVariant { ks, zstat };
TestOutcome nn_test(const DataMatrix& data, NnVariant variant, double alpha,
                    double split_ratio, RngStream& rng);

// Row subset helper shared by the split-based procedures.
DataMatrix take_rows(const DataMatrix& data, const std::vector<Eigen::Index>& idx);

}  // namespace mixsig
