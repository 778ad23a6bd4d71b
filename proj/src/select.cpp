#include "mixsig/select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mixsig/errors.hpp"
#include "mixsig/fitters.hpp"
#include "mixsig/stats.hpp"

namespace mixsig {

int default_kmax(std::size_t n) {
    const int root = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));
    return std::max(1, std::min(10, root));
}

namespace {

struct SharedFits {
    SplitHalves split;
    DataMatrix d1;
    DataMatrix d2;
    std::vector<Mixture> fits;
    std::vector<bool> ok;
};

SharedFits fit_all(const DataMatrix& data, int K_n, const FitConstraints& c,
                   const RiftOptions& opts, RngStream& rng) {
    if (K_n < 1) throw InputError("model selection: K_n >= 1 required");
    if (data.rows() < 4 * static_cast<Eigen::Index>(K_n)) {
        throw InputError("model selection: need n >= 4 K_n");
    }
    SharedFits out;
    RngStream split_rng = rng.derive(0);
    out.split = split_halves(static_cast<std::size_t>(data.rows()), opts.split_ratio,
                             split_rng);
    out.d1 = take_rows(data, out.split.d1);
    out.d2 = take_rows(data, out.split.d2);
    out.fits.resize(static_cast<std::size_t>(K_n));
    out.ok.assign(static_cast<std::size_t>(K_n), false);
    for (int k = 1; k <= K_n; ++k) {
        RngStream em_rng = rng.derive(static_cast<std::uint64_t>(k));
        try {
            out.fits[static_cast<std::size_t>(k - 1)] =
                em_fit(out.d1, static_cast<std::size_t>(k), c, opts.em, em_rng);
            out.ok[static_cast<std::size_t>(k - 1)] = true;
        } catch (const std::runtime_error&) {
            // Recorded as a failed fit; skipped as candidate and comparator.
        }
    }
    return out;
}

double mixture_l2_cross(const Mixture& a, const Mixture& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.k(); ++i) {
        for (std::size_t j = 0; j < b.k(); ++j) {
            s += a.weights[static_cast<Eigen::Index>(i)] *
                 b.weights[static_cast<Eigen::Index>(j)] *
                 gaussian_l2_cross(a.components[i], b.components[j]);
        }
    }
    return s;
}

// Relative-fit estimate and its spread for candidate j against the larger
// model s, on the held-out half. Positive means s fits better.
std::pair<double, double> compare_pair(const Mixture& fit_j, const Mixture& fit_s,
                                       const DataMatrix& d2, SelectDistance dist,
                                       double delta, RngStream& rng) {
    MixtureEval ej(fit_j);
    MixtureEval es(fit_s);
    const Eigen::Index n2 = d2.rows();
    std::vector<double> v(static_cast<std::size_t>(n2));
    if (dist == SelectDistance::kl) {
        Vector lj = ej.logpdf_rows(d2);
        Vector ls = es.logpdf_rows(d2);
        for (Eigen::Index i = 0; i < n2; ++i) {
            v[static_cast<std::size_t>(i)] = ls[i] - lj[i] + delta * rng.normal();
        }
        return {sample_mean(v), std::sqrt(sample_var_n(v))};
    }
    // l2 loss difference L(fit_j) - L(fit_s), with the cross terms from the
    // held-out sample.
    Vector lj = ej.logpdf_rows(d2);
    Vector ls = es.logpdf_rows(d2);
    for (Eigen::Index i = 0; i < n2; ++i) {
        v[static_cast<std::size_t>(i)] =
            std::exp(lj[i]) - std::exp(ls[i]) + delta * rng.normal();
    }
    const double theta =
        mixture_l2_cross(fit_j, fit_j) - mixture_l2_cross(fit_s, fit_s) - 2.0 * sample_mean(v);
    // Spread of theta is that of -2 mean(v).
    return {theta, 2.0 * std::sqrt(sample_var_n(v))};
}

}  // namespace

SeqResult srift_select(const DataMatrix& data, int K_n, double alpha, SelectDistance dist,
                       const FitConstraints& c, const RiftOptions& opts, RngStream& rng) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("srift_select: alpha in (0,1)");
    SharedFits shared = fit_all(data, K_n, c, opts, rng);
    const double sqrt_n2 = std::sqrt(static_cast<double>(shared.d2.rows()));

    SeqResult out;
    out.fits = shared.fits;
    out.fit_ok = shared.ok;
    out.k_hat = 0;
    RngStream test_rng = rng.derive(static_cast<std::uint64_t>(K_n) + 1);

    for (int j = 1; j <= K_n && out.k_hat == 0; ++j) {
        if (!shared.ok[static_cast<std::size_t>(j - 1)]) continue;
        SeqPerJ trace;
        trace.j = j;
        trace.max_gamma = -std::numeric_limits<double>::infinity();
        int m_j = 0;
        for (int s = j + 1; s <= K_n; ++s) m_j += shared.ok[static_cast<std::size_t>(s - 1)];
        if (m_j > 0) {
            const double z = norm_quantile(1.0 - alpha / static_cast<double>(m_j));
            for (int s = j + 1; s <= K_n; ++s) {
                if (!shared.ok[static_cast<std::size_t>(s - 1)]) continue;
                RngStream pair_rng = test_rng.derive(
                    static_cast<std::uint64_t>(j) * 1024 + static_cast<std::uint64_t>(s));
                auto [gamma, tau] =
                    compare_pair(shared.fits[static_cast<std::size_t>(j - 1)],
                                 shared.fits[static_cast<std::size_t>(s - 1)], shared.d2,
                                 dist, opts.delta_jitter, pair_rng);
                const double threshold = z * tau / sqrt_n2;
                trace.tested_s.push_back(s);
                trace.thresholds.push_back(threshold);
                trace.max_gamma = std::max(trace.max_gamma, gamma);
                if (gamma > threshold) trace.rejected = true;
            }
        }
        if (!trace.rejected) out.k_hat = j;
        out.per_j.push_back(std::move(trace));
    }
    if (out.k_hat == 0) {
        // Everything rejected (or failed): fall back to the largest usable k.
        for (int k = K_n; k >= 1; --k) {
            if (shared.ok[static_cast<std::size_t>(k - 1)]) {
                out.k_hat = k;
                break;
            }
        }
        if (out.k_hat == 0) throw NumericError("srift_select: every mixture fit failed");
    }
    return out;
}

int ic_select(const DataMatrix& data, int K_n, Criterion criterion, const FitConstraints& c,
              const RiftOptions& opts, RngStream& rng) {
    SharedFits shared = fit_all(data, K_n, c, opts, rng);
    const double n1 = static_cast<double>(shared.d1.rows());
    const double d = static_cast<double>(data.cols());
    const double penalty = criterion == Criterion::aic ? 2.0 : std::log(n1);

    int best_k = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= K_n; ++k) {
        if (!shared.ok[static_cast<std::size_t>(k - 1)]) continue;
        const double kk = static_cast<double>(k);
        const double p_k = kk - 1.0 + kk * d + kk * d * (d + 1.0) / 2.0;
        const double score =
            -2.0 * loglik(shared.fits[static_cast<std::size_t>(k - 1)], shared.d1) +
            penalty * p_k;
        if (score < best_score) {
            best_score = score;
            best_k = k;
        }
    }
    if (best_k == 0) throw NumericError("ic_select: every mixture fit failed");
    return best_k;
}

}  // namespace mixsig
