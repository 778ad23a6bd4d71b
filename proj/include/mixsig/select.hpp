#pragma once

#include <vector>

#include "mixsig/relfit.hpp"

namespace mixsig {

enum class SelectDistance { kl, l2 };
enum class Criterion { aic, bic };

struct SeqPerJ {
    int j = 0;
    std::vector<int> tested_s;
    double max_gamma = 0.0;           // largest relative-fit estimate over s
    std::vector<double> thresholds;   // Bonferroni cutoff per tested s
    bool rejected = false;
};

struct SeqResult {
    int k_hat = 1;
    std::vector<SeqPerJ> per_j;
    std::vector<Mixture> fits;        // index k-1; empty mixture when the fit failed
    std::vector<bool> fit_ok;
};

// Default candidate cap min(10, floor(sqrt(n))).
int default_kmax(std::size_t n);

// Sequential selection of the mixture order: fit k = 1..K_n on one half,
// then accept the first j whose fit no larger model beats significantly on
// the other half. m_j successful comparators give the Bonferroni level
// alpha / m_j.
SeqResult srift_select(const DataMatrix& data, int K_n, double alpha, SelectDistance dist,
                       const FitConstraints& c, const RiftOptions& opts, RngStream& rng);

// Information-criterion baseline on the same estimation half: minimize
// -2 loglik + penalty * p_k with p_k = k-1 + k d + k d(d+1)/2.
int ic_select(const DataMatrix& data, int K_n, Criterion criterion, const FitConstraints& c,
              const RiftOptions& opts, RngStream& rng);

}  // namespace mixsig
