#include "mixsig/relfit.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

#include "mixsig/errors.hpp"
#include "mixsig/stats.hpp"

namespace mixsig {

DataMatrix take_rows(const DataMatrix& data, const std::vector<Eigen::Index>& idx) {
    DataMatrix out(static_cast<Eigen::Index>(idx.size()), data.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = data.row(idx[i]);
    }
    return out;
}

SplitHalves split_halves(std::size_t n, double ratio, RngStream& rng) {
    if (n < 4) throw InputError("split_halves: need n >= 4");
    if (!(ratio > 0.0 && ratio < 1.0)) throw InputError("split_halves: ratio in (0,1)");
    const std::size_t n1 = static_cast<std::size_t>(
        std::floor(ratio * static_cast<double>(n) + 0.5));  // round half up
    if (n1 == 0 || n1 == n) throw InputError("split_halves: degenerate split");

    std::vector<Eigen::Index> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n - 1; i > 0; --i) {
        std::swap(perm[i], perm[rng.below(i + 1)]);
    }
    SplitHalves out;
    out.ratio = ratio;
    out.d1.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n1));
    out.d2.assign(perm.begin() + static_cast<std::ptrdiff_t>(n1), perm.end());
    std::sort(out.d1.begin(), out.d1.end());
    std::sort(out.d2.begin(), out.d2.end());
    return out;
}

RelFitStats relative_fit_stats(const Gaussian& p1, const Mixture& p2, const DataMatrix& d2,
                               const std::optional<Region>& region, double delta,
                               RngStream& rng, std::size_t trunc_mc) {
    if (d2.rows() < 2) throw InputError("relative_fit_stats: need |D2| >= 2");
    GaussianEval e1(p1);
    MixtureEval e2(p2);
    Vector l1 = e1.logpdf_rows(d2);
    Vector l2 = e2.logpdf_rows(d2);

    double log_mass1 = 0.0, log_mass2 = 0.0;
    if (region && !region->whole_space()) {
        RngStream mass_rng = rng.derive(0x6d617373ULL);  // independent of the jitter draws
        const double m1 = estimate_region_mass(p1, *region, trunc_mc, mass_rng);
        const double m2 = estimate_region_mass(p2, *region, trunc_mc, mass_rng);
        if (m1 <= 0.0 || m2 <= 0.0) {
            throw NumericError("relative_fit_stats: estimated region mass is zero");
        }
        log_mass1 = std::log(m1);
        log_mass2 = std::log(m2);
    }

    RelFitStats out;
    out.r_values.resize(static_cast<std::size_t>(d2.rows()));
    for (Eigen::Index i = 0; i < d2.rows(); ++i) {
        const double r = (l2[i] - log_mass2) - (l1[i] - log_mass1);
        out.r_values[static_cast<std::size_t>(i)] = r + delta * rng.normal();
    }
    out.gamma_hat = sample_mean(out.r_values);
    out.tau_hat = std::sqrt(sample_var_n(out.r_values));
    return out;
}

namespace {

// ---- multivariate t proposal for importance sampling ----------------------

struct TProposal {
    Vector mu;
    Eigen::LLT<Matrix> llt;
    double log_norm;
    unsigned dof;
    Eigen::Index d;
};

TProposal make_t_proposal(const Gaussian& match, unsigned dof) {
    if (dof < 1) throw InputError("l2rift: t proposal needs dof >= 1");
    TProposal p;
    p.mu = match.mean;
    p.d = match.dim();
    // Inflate the matched scale so the proposal dominates the integrand tails.
    Matrix scale = 2.0 * match.cov;
    p.llt.compute(scale);
    if (p.llt.info() != Eigen::Success) {
        throw NumericError("l2rift: proposal scale not positive definite");
    }
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < p.d; ++i) {
        log_det += 2.0 * std::log(p.llt.matrixLLT()(i, i));
    }
    const double v = dof;
    const double dd = static_cast<double>(p.d);
    p.log_norm = std::lgamma(0.5 * (v + dd)) - std::lgamma(0.5 * v) -
                 0.5 * dd * std::log(v * M_PI) - 0.5 * log_det;
    p.dof = dof;
    return p;
}

double t_logpdf(const TProposal& p, const Vector& x) {
    Vector y = p.llt.matrixL().solve(x - p.mu);
    const double v = p.dof;
    return p.log_norm -
           0.5 * (v + static_cast<double>(p.d)) * std::log1p(y.squaredNorm() / v);
}

Vector t_sample(const TProposal& p, RngStream& rng) {
    Vector z(p.d);
    for (Eigen::Index i = 0; i < p.d; ++i) z[i] = rng.normal();
    double chi2 = 0.0;
    for (unsigned i = 0; i < p.dof; ++i) {
        const double g = rng.normal();
        chi2 += g * g;
    }
    if (chi2 <= 0.0) chi2 = 1e-300;
    return p.mu + (p.llt.matrixL() * z) * std::sqrt(static_cast<double>(p.dof) / chi2);
}

// ∫ p1^2 and ∫ p2^2 by importance sampling under a shared t proposal.
std::pair<double, double> l2_integrals_importance(const Gaussian& p1, const Mixture& p2,
                                                  const L2Integration& integration,
                                                  RngStream& rng) {
    const TProposal prop = make_t_proposal(moment_match(p2), integration.t_dof);
    GaussianEval e1(p1);
    MixtureEval e2(p2);
    double s1 = 0.0, s2 = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < integration.draws; ++i) {
        Vector x = t_sample(prop, rng);
        const double lg = t_logpdf(prop, x);
        const double w1 = std::exp(2.0 * e1.logpdf(x) - lg);
        const double w2 = std::exp(2.0 * e2.logpdf(x) - lg);
        any = any || (w1 > 0.0) || (w2 > 0.0);
        s1 += w1;
        s2 += w2;
    }
    if (!any) throw NumericError("l2rift: all importance weights are zero");
    const double N = static_cast<double>(integration.draws);
    return {s1 / N, s2 / N};
}

std::pair<double, double> l2_integrals_closed(const Gaussian& p1, const Mixture& p2) {
    const double i1 = gaussian_l2_cross(p1, p1);
    double i2 = 0.0;
    for (std::size_t a = 0; a < p2.k(); ++a) {
        for (std::size_t b = 0; b < p2.k(); ++b) {
            i2 += p2.weights[static_cast<Eigen::Index>(a)] *
                  p2.weights[static_cast<Eigen::Index>(b)] *
                  gaussian_l2_cross(p2.components[a], p2.components[b]);
        }
    }
    return {i1, i2};
}

// Truncated squared-density integrals ∫_S (p_j / P_j(S))^2 estimated as
// E_{p_j}[ 1_S(Z) p_j(Z) ] / P_j(S)^2 from draws of the model itself.
template <typename Model, typename Eval>
double l2_self_integral_truncated(const Model& model, const Eval& eval, const Region& region,
                                  double mass, std::size_t m, RngStream& rng) {
    DataMatrix draws;
    if constexpr (std::is_same_v<Model, Gaussian>) {
        draws = mvn_sample(model, m, rng);
    } else {
        draws = mixture_sample(model, m, rng).first;
    }
    double s = 0.0;
    for (Eigen::Index i = 0; i < draws.rows(); ++i) {
        Vector x = draws.row(i).transpose();
        if (region_contains(region, x)) s += std::exp(eval.logpdf(x));
    }
    return s / static_cast<double>(m) / (mass * mass);
}

TestOutcome normal_tail_outcome(const std::string& method, double estimate, double spread,
                                std::size_t n_test, double alpha) {
    if (!(spread > 0.0)) {
        throw NumericError(method + ": zero spread estimate (set a positive jitter)");
    }
    const double z = std::sqrt(static_cast<double>(n_test)) * estimate / spread;
    TestOutcome out;
    out.method = method;
    out.statistic = z;
    out.p_value = norm_sf(z);
    out.alpha = alpha;
    out.reject = estimate > norm_quantile(1.0 - alpha) * spread /
                                std::sqrt(static_cast<double>(n_test));
    out.aux["n_test"] = static_cast<double>(n_test);
    return out;
}

}  // namespace

TestOutcome relative_fit_test(const Gaussian& p1, const Mixture& p2, const DataMatrix& d2,
                              const RiftOptions& opts, RelFitVariant variant,
                              const L2Integration& integration, RngStream& rng) {
    if (!(opts.alpha > 0.0 && opts.alpha < 1.0)) {
        throw InputError("relative_fit_test: alpha must be in (0,1)");
    }
    const std::size_t n2 = static_cast<std::size_t>(d2.rows());

    if (variant == RelFitVariant::l2) {
        GaussianEval e1(p1);
        MixtureEval e2(p2);
        double i1, i2;
        double log_mass1 = 0.0, log_mass2 = 0.0;
        if (opts.region && !opts.region->whole_space()) {
            RngStream mass_rng = rng.derive(0x6d617373ULL);
            const double m1 = estimate_region_mass(p1, *opts.region, opts.trunc_mc, mass_rng);
            const double m2 = estimate_region_mass(p2, *opts.region, opts.trunc_mc, mass_rng);
            if (m1 <= 0.0 || m2 <= 0.0) {
                throw NumericError("l2rift: estimated region mass is zero");
            }
            i1 = l2_self_integral_truncated(p1, e1, *opts.region, m1, opts.trunc_mc, mass_rng);
            i2 = l2_self_integral_truncated(p2, e2, *opts.region, m2, opts.trunc_mc, mass_rng);
            log_mass1 = std::log(m1);
            log_mass2 = std::log(m2);
        } else if (integration.mode == L2Integration::Mode::closed_form) {
            std::tie(i1, i2) = l2_integrals_closed(p1, p2);
        } else {
            RngStream is_rng = rng.derive(0x696d70ULL);
            std::tie(i1, i2) = l2_integrals_importance(p1, p2, integration, is_rng);
        }

        Vector l1 = e1.logpdf_rows(d2);
        Vector l2v = e2.logpdf_rows(d2);
        std::vector<double> u(n2);
        for (std::size_t i = 0; i < n2; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            u[i] = std::exp(l1[ii] - log_mass1) - std::exp(l2v[ii] - log_mass2) +
                   opts.delta_jitter * rng.normal();
        }
        const double theta = i1 - i2 - 2.0 * sample_mean(u);
        // Theta's sampling variation comes solely through -2 mean(U), so its
        // spread is twice the per-point standard deviation.
        const double a_hat = 2.0 * std::sqrt(sample_var_n(u));
        TestOutcome out = normal_tail_outcome("l2rift", theta, a_hat, n2, opts.alpha);
        out.aux["theta_hat"] = theta;
        out.aux["a_hat"] = a_hat;
        out.aux["int_p1_sq"] = i1;
        out.aux["int_p2_sq"] = i2;
        return out;
    }

    RelFitStats stats = relative_fit_stats(p1, p2, d2, opts.region, opts.delta_jitter, rng,
                                           opts.trunc_mc);
    if (variant == RelFitVariant::mean) {
        TestOutcome out =
            normal_tail_outcome("rift", stats.gamma_hat, stats.tau_hat, n2, opts.alpha);
        out.aux["gamma_hat"] = stats.gamma_hat;
        out.aux["tau_hat"] = stats.tau_hat;
        return out;
    }

    // Sign test: exact one-sided binomial on the positive log ratios; exact
    // zeros are uninformative and are dropped with n adjusted.
    std::size_t pos = 0, used = 0;
    for (double r : stats.r_values) {
        if (r == 0.0) continue;
        ++used;
        pos += (r > 0.0);
    }
    TestOutcome out;
    out.method = "mrift";
    out.statistic = static_cast<double>(pos);
    out.alpha = opts.alpha;
    out.p_value = (used == 0) ? 1.0 : binom_half_upper_tail(pos, used);
    out.reject = out.p_value < opts.alpha;
    out.aux["n_test"] = static_cast<double>(used);
    out.aux["n_pos"] = static_cast<double>(pos);
    out.aux["gamma_hat"] = stats.gamma_hat;
    return out;
}

namespace {

struct FittedSplit {
    SplitHalves split;
    DataMatrix d1;
    DataMatrix d2;
    Gaussian p1;
    Mixture p2;
};

FittedSplit split_and_fit(const DataMatrix& data, const FitConstraints& c,
                          const RiftOptions& opts, RngStream& rng) {
    if (data.rows() < 8) throw InputError("relative-fit tests: need n >= 8");
    FittedSplit out;
    RngStream split_rng = rng.derive(0);
    out.split = split_halves(static_cast<std::size_t>(data.rows()), opts.split_ratio,
                             split_rng);
    out.d1 = take_rows(data, out.split.d1);
    out.d2 = take_rows(data, out.split.d2);
    out.p1 = fit_single_gaussian(out.d1, c);
    RngStream em_rng = rng.derive(1);
    out.p2 = em_fit(out.d1, 2, c, opts.em, em_rng);
    return out;
}

}  // namespace

TestOutcome rift(const DataMatrix& data, const FitConstraints& c, const RiftOptions& opts,
                 RngStream& rng) {
    FittedSplit fs = split_and_fit(data, c, opts, rng);
    RngStream test_rng = rng.derive(3);
    return relative_fit_test(fs.p1, fs.p2, fs.d2, opts, RelFitVariant::mean, {}, test_rng);
}

TestOutcome mrift(const DataMatrix& data, const FitConstraints& c, const RiftOptions& opts,
                  RngStream& rng) {
    FittedSplit fs = split_and_fit(data, c, opts, rng);
    RngStream test_rng = rng.derive(3);
    return relative_fit_test(fs.p1, fs.p2, fs.d2, opts, RelFitVariant::sign, {}, test_rng);
}

TestOutcome l2rift(const DataMatrix& data, const FitConstraints& c, const RiftOptions& opts,
                   const L2Integration& integration, RngStream& rng) {
    FittedSplit fs = split_and_fit(data, c, opts, rng);
    RngStream test_rng = rng.derive(3);
    return relative_fit_test(fs.p1, fs.p2, fs.d2, opts, RelFitVariant::l2, integration,
                             test_rng);
}

namespace {

double kl_estimate(const Gaussian& q, const Mixture& p2, std::size_t draws, RngStream& rng) {
    GaussianEval eq(q);
    MixtureEval e2(p2);
    DataMatrix z = mvn_sample(q, draws, rng);
    return (eq.logpdf_rows(z) - e2.logpdf_rows(z)).mean();
}

Mixture push_apart(const Mixture& m, double s) {
    // Scale every component mean away from the mixture mean by (1 + s).
    Gaussian mm = moment_match(m);
    Mixture out = m;
    for (auto& comp : out.components) {
        comp.mean = mm.mean + (1.0 + s) * (comp.mean - mm.mean);
    }
    return out;
}

}  // namespace

TestOutcome separated_mixture_test(const DataMatrix& data, const FitConstraints& c,
                                   double Delta, const RiftOptions& opts, RngStream& rng) {
    FittedSplit fs = split_and_fit(data, c, opts, rng);

    double separation_scale = 0.0;
    if (Delta > 0.0) {
        const std::size_t kl_draws = 100000;
        RngStream kl_rng = rng.derive(2);
        auto kl_at = [&](double s, std::uint64_t tag) {
            RngStream sub = kl_rng.derive(tag);
            const Mixture cand = push_apart(fs.p2, s);
            return kl_estimate(moment_match(cand), cand, kl_draws, sub);
        };
        if (kl_at(0.0, 0) < Delta) {
            // Bracket by doubling, then bisect the scale.
            double lo = 0.0, hi = 0.5;
            int guard = 0;
            while (kl_at(hi, 1) < Delta) {
                lo = hi;
                hi *= 2.0;
                if (++guard > 60) {
                    throw NumericError(
                        "separated_mixture_test: separation projection failed to bracket");
                }
            }
            for (int it = 0; it < 40; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (kl_at(mid, 2) >= Delta) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            separation_scale = hi;
            fs.p2 = push_apart(fs.p2, hi);
        }
    }

    RngStream test_rng = rng.derive(3);
    TestOutcome out =
        relative_fit_test(fs.p1, fs.p2, fs.d2, opts, RelFitVariant::mean, {}, test_rng);
    out.method = "separated";
    out.aux["delta_separation"] = Delta;
    out.aux["separation_scale"] = separation_scale;
    return out;
}

TestOutcome sigclust_bootstrap(const DataMatrix& data, std::size_t B, double alpha,
                               bool symmetric, const std::optional<Region>& region,
                               RngStream& rng, std::size_t kmeans_restarts) {
    if (B < 19) throw InputError("sigclust_bootstrap: need B >= 19");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("sigclust_bootstrap: bad alpha");
    const std::size_t n = static_cast<std::size_t>(data.rows());

    RngStream stat_rng = rng.derive(0);
    const double t_obs = sigclust_statistic(data, symmetric, kmeans_restarts, stat_rng);

    FitConstraints c;
    const Gaussian null_fit = fit_single_gaussian(data, c);

    const bool truncated = region && !region->whole_space();
    std::size_t below = 0;
    for (std::size_t b = 0; b < B; ++b) {
        RngStream boot = rng.derive(b + 1);
        DataMatrix sim;
        if (!truncated) {
            sim = mvn_sample(null_fit, n, boot);
        } else {
            // Rejection sampling into the region, with an acceptance guard.
            sim.resize(static_cast<Eigen::Index>(n), data.cols());
            std::size_t got = 0, tried = 0;
            while (got < n) {
                const std::size_t chunk = 4096;
                DataMatrix cand = mvn_sample(null_fit, chunk, boot);
                for (Eigen::Index i = 0; i < cand.rows() && got < n; ++i) {
                    ++tried;
                    if (region_contains(*region, cand.row(i).transpose())) {
                        sim.row(static_cast<Eigen::Index>(got++)) = cand.row(i);
                    }
                }
                if (tried > 100000 && static_cast<double>(got) / tried < 1e-4) {
                    throw NumericError(
                        "sigclust_bootstrap: region acceptance rate below 1e-4");
                }
            }
        }
        const double t_sim = sigclust_statistic(sim, symmetric, kmeans_restarts, boot);
        below += (t_sim < t_obs);
    }

    TestOutcome out;
    out.method = truncated ? "sigclust-trunc" : "sigclust";
    out.statistic = t_obs;
    out.alpha = alpha;
    out.p_value = (1.0 + static_cast<double>(below)) / (static_cast<double>(B) + 1.0);
    out.reject = out.p_value < alpha;
    out.aux["B"] = static_cast<double>(B);
    out.aux["n_test"] = static_cast<double>(n);
    return out;
}

TestOutcome mardia(const DataMatrix& data, double alpha) {
    const Eigen::Index n = data.rows();
    const Eigen::Index d = data.cols();
    if (n <= d) throw InputError("mardia: need n > d");
    Vector mu = data.colwise().mean();
    Matrix centered = data;
    centered.rowwise() -= mu.transpose();
    Matrix s = centered.transpose() * centered / static_cast<double>(n);
    Eigen::LLT<Matrix> llt(s);
    if (llt.info() != Eigen::Success) throw NumericError("mardia: singular covariance");

    double b = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        Vector y = llt.matrixL().solve(centered.row(i).transpose());
        const double q = y.squaredNorm();
        b += q * q;
    }
    b /= static_cast<double>(n);

    const double dd = static_cast<double>(d);
    const double center = dd * (dd + 2.0);
    const double z = std::sqrt(static_cast<double>(n)) * (b - center) /
                     std::sqrt(8.0 * dd * (dd + 2.0));
    TestOutcome out;
    out.method = "mardia";
    out.statistic = z;
    out.alpha = alpha;
    out.p_value = 2.0 * norm_sf(std::abs(z));
    out.reject = std::abs(z) > norm_quantile(1.0 - 0.5 * alpha);
    out.aux["b2d"] = b;
    out.aux["n_test"] = static_cast<double>(n);
    return out;
}

TestOutcome nn_test(const DataMatrix& data, NnVariant variant, double alpha,
                    double split_ratio, RngStream& rng) {
    RngStream split_rng = rng.derive(0);
    SplitHalves split =
        split_halves(static_cast<std::size_t>(data.rows()), split_ratio, split_rng);
    DataMatrix d1 = take_rows(data, split.d1);
    DataMatrix d2 = take_rows(data, split.d2);
    const std::size_t m = static_cast<std::size_t>(d2.rows());
    if (m < 10) throw InputError("nn_test: need |D2| >= 10");

    FitConstraints c;
    GaussianEval p0(fit_single_gaussian(d1, c));

    // Nearest-neighbor distance within the test half.
    std::vector<double> r(m);
    bool warned = false;
    for (std::size_t i = 0; i < m; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            const double dist = (d2.row(static_cast<Eigen::Index>(i)) -
                                 d2.row(static_cast<Eigen::Index>(j)))
                                    .norm();
            best = std::min(best, dist);
        }
        if (best == 0.0) {
            best = 1e-12;  // duplicate points
            if (!warned) {
                std::cerr << "nn_test: duplicate points, nearest-neighbor distance "
                             "jittered to 1e-12\n";
                warned = true;
            }
        }
        r[i] = best;
    }

    const double dd = static_cast<double>(data.cols());
    const double log_kd = 0.5 * dd * std::log(M_PI) - std::lgamma(0.5 * dd + 1.0);
    std::vector<double> w(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double log_di = p0.logpdf(d2.row(static_cast<Eigen::Index>(i)).transpose()) +
                              log_kd + dd * std::log(r[i]);
        w[i] = std::exp(-static_cast<double>(m) * std::exp(log_di));
    }

    TestOutcome out;
    out.alpha = alpha;
    out.aux["n_test"] = static_cast<double>(m);
    if (variant == NnVariant::ks) {
        const auto ks = ks_uniform_test(w);
        out.method = "nn-ks";
        out.statistic = ks.statistic;
        out.p_value = ks.p_value;
        out.reject = out.p_value < alpha;
    } else {
        const double sd = std::sqrt(sample_var_n(w));
        if (!(sd > 0.0)) throw NumericError("nn_test: degenerate W sample");
        double z = 0.0;
        for (double wi : w) z += wi - 0.5;
        z /= sd * std::sqrt(static_cast<double>(m));
        out.method = "nn-z";
        out.statistic = z;
        out.p_value = 2.0 * norm_sf(std::abs(z));
        out.reject = std::abs(z) > norm_quantile(1.0 - 0.5 * alpha);
    }
    return out;
}

}  // namespace mixsig
