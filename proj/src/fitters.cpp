#include "mixsig/fitters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mixsig/errors.hpp"

namespace mixsig {

namespace {

void require_two_distinct_rows(const DataMatrix& data) {
    if (data.rows() < 2) throw InputError("2-means: need at least 2 rows");
    for (Eigen::Index i = 1; i < data.rows(); ++i) {
        if ((data.row(i) - data.row(0)).cwiseAbs().maxCoeff() > 0.0) return;
    }
    throw NumericError("2-means: all rows identical");
}

// Squared distance of every row to a center.
Vector row_sq_dists(const DataMatrix& data, const Vector& center) {
    Vector out(data.rows());
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        out[i] = (data.row(i).transpose() - center).squaredNorm();
    }
    return out;
}

// k-means++ seeding: first center uniform, later centers sampled with
// probability proportional to squared distance from the chosen set.
std::vector<Eigen::Index> kmeanspp_seed(const DataMatrix& data, std::size_t k,
                                        RngStream& rng) {
    std::vector<Eigen::Index> centers;
    centers.push_back(static_cast<Eigen::Index>(rng.below(data.rows())));
    Vector d2 = row_sq_dists(data, data.row(centers[0]).transpose());
    while (centers.size() < k) {
        const double total = d2.sum();
        Eigen::Index pick;
        if (total <= 0.0) {
            pick = static_cast<Eigen::Index>(rng.below(data.rows()));
        } else {
            double u = rng.uniform() * total;
            pick = data.rows() - 1;
            for (Eigen::Index i = 0; i < d2.size(); ++i) {
                u -= d2[i];
                if (u <= 0.0) {
                    pick = i;
                    break;
                }
            }
        }
        centers.push_back(pick);
        d2 = d2.cwiseMin(row_sq_dists(data, data.row(pick).transpose()));
    }
    return centers;
}

KmeansResult lloyd2_once(const DataMatrix& data, RngStream& rng) {
    const Eigen::Index n = data.rows();
    const auto seeds = kmeanspp_seed(data, 2, rng);
    Vector c0 = data.row(seeds[0]).transpose();
    Vector c1 = data.row(seeds[1]).transpose();

    std::vector<int> assign(static_cast<std::size_t>(n), 0);
    std::size_t iters = 0;
    bool changed = true;
    while (changed && iters < 1000) {
        ++iters;
        changed = false;
        Vector d0 = row_sq_dists(data, c0);
        Vector d1 = row_sq_dists(data, c1);
        Eigen::Index n0 = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const int a = (d0[i] <= d1[i]) ? 0 : 1;  // ties to cluster 0
            if (a != assign[static_cast<std::size_t>(i)]) {
                assign[static_cast<std::size_t>(i)] = a;
                changed = true;
            }
            n0 += (a == 0);
        }
        // An emptied cluster restarts at the point farthest from the other
        // center, which always strictly decreases the objective.
        if (n0 == 0 || n0 == n) {
            const Vector& full = (n0 == 0) ? c1 : c0;
            Vector dist = row_sq_dists(data, full);
            Eigen::Index far;
            dist.maxCoeff(&far);
            if (n0 == 0) {
                c0 = data.row(far).transpose();
            } else {
                c1 = data.row(far).transpose();
            }
            changed = true;
            continue;
        }
        Vector s0 = Vector::Zero(data.cols());
        Vector s1 = Vector::Zero(data.cols());
        for (Eigen::Index i = 0; i < n; ++i) {
            if (assign[static_cast<std::size_t>(i)] == 0) {
                s0 += data.row(i).transpose();
            } else {
                s1 += data.row(i).transpose();
            }
        }
        c0 = s0 / static_cast<double>(n0);
        c1 = s1 / static_cast<double>(n - n0);
    }

    Vector d0 = row_sq_dists(data, c0);
    Vector d1 = row_sq_dists(data, c1);
    double wss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) wss += std::min(d0[i], d1[i]);
    wss /= static_cast<double>(n);

    Matrix centers(2, data.cols());
    centers.row(0) = c0.transpose();
    centers.row(1) = c1.transpose();
    return KmeansResult{centers, std::move(assign), wss, iters};
}

}  // namespace

double within_ss_of(const DataMatrix& data, const Matrix& centers) {
    Vector d0 = row_sq_dists(data, centers.row(0).transpose());
    Vector d1 = row_sq_dists(data, centers.row(1).transpose());
    return d0.cwiseMin(d1).sum() / static_cast<double>(data.rows());
}

KmeansResult kmeans2(const DataMatrix& data, std::size_t restarts, RngStream& rng) {
    require_two_distinct_rows(data);
    if (restarts == 0) throw InputError("kmeans2: restarts must be >= 1");
    KmeansResult best;
    best.within_ss = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < restarts; ++r) {
        RngStream sub = rng.derive(r);
        KmeansResult cand = lloyd2_once(data, sub);
        if (cand.within_ss < best.within_ss) best = std::move(cand);
    }
    return best;
}

SymKmeansResult symmetric_kmeans2(const DataMatrix& data, std::size_t restarts,
                                  RngStream& rng) {
    require_two_distinct_rows(data);
    if (restarts == 0) throw InputError("symmetric_kmeans2: restarts must be >= 1");
    const Eigen::Index n = data.rows();
    const double mean_sq = data.rowwise().squaredNorm().sum() / static_cast<double>(n);

    auto run_from = [&](Vector t) {
        // With s_i = sign(x_i . t) fixed, the optimal t is the signed mean;
        // iterating this pair of updates is the alternating minimizer.
        for (int iter = 0; iter < 1000; ++iter) {
            Vector proj = data * t;
            Vector t_next = Vector::Zero(data.cols());
            for (Eigen::Index i = 0; i < n; ++i) {
                const double s = (proj[i] >= 0.0) ? 1.0 : -1.0;
                t_next += s * data.row(i).transpose();
            }
            t_next /= static_cast<double>(n);
            if ((t_next - t).norm() <= 1e-14 * (1.0 + t.norm())) {
                t = t_next;
                break;
            }
            t = t_next;
        }
        // W^(0)(t) = mean||x||^2 - 2 t . signed_mean + ||t||^2; at a fixed
        // point signed_mean = t so this collapses to mean||x||^2 - ||t||^2.
        Vector proj = data * t;
        double cross = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            cross += (proj[i] >= 0.0 ? 1.0 : -1.0) * proj[i];
        }
        const double wss = mean_sq - 2.0 * cross / static_cast<double>(n) + t.squaredNorm();
        return SymKmeansResult{std::move(t), wss};
    };

    SymKmeansResult best;
    best.within_ss = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < restarts; ++r) {
        Vector t0;
        if (r == 0) {
            // Principal-direction start: top eigenvector of the MLE
            // covariance, scaled by the mean absolute projection.
            Vector mu = data.colwise().mean();
            Matrix centered = data;
            centered.rowwise() -= mu.transpose();
            Matrix cov = centered.transpose() * centered / static_cast<double>(n);
            Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
            if (es.info() != Eigen::Success) {
                throw NumericError("symmetric_kmeans2: eigendecomposition failed");
            }
            Vector v = es.eigenvectors().col(data.cols() - 1);
            const double scale = (data * v).cwiseAbs().mean();
            t0 = scale * v;
        } else {
            RngStream sub = rng.derive(r);
            t0 = data.row(static_cast<Eigen::Index>(sub.below(n))).transpose();
        }
        if (t0.norm() == 0.0) continue;
        SymKmeansResult cand = run_from(std::move(t0));
        if (cand.within_ss < best.within_ss) best = std::move(cand);
    }
    if (!std::isfinite(best.within_ss)) {
        throw NumericError("symmetric_kmeans2: no usable start");
    }
    return best;
}

double sigclust_statistic(const DataMatrix& data, bool symmetric, std::size_t restarts,
                          RngStream& rng) {
    Vector mu = data.colwise().mean();
    double tss = 0.0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        tss += (data.row(i).transpose() - mu).squaredNorm();
    }
    tss /= static_cast<double>(data.rows());
    if (tss <= 0.0) throw NumericError("sigclust_statistic: zero total sum of squares");
    const double w = symmetric ? symmetric_kmeans2(data, restarts, rng).within_ss
                               : kmeans2(data, restarts, rng).within_ss;
    return w / tss;
}

double loglik(const Mixture& m, const DataMatrix& data) {
    return MixtureEval(m).logpdf_rows(data).sum();
}

namespace {

struct EmRun {
    Mixture mixture;
    double loglik = -std::numeric_limits<double>::infinity();
};

Matrix global_cov(const DataMatrix& data) {
    Vector mu = data.colwise().mean();
    Matrix centered = data;
    centered.rowwise() -= mu.transpose();
    return centered.transpose() * centered / static_cast<double>(data.rows());
}

Vector clamp_to_box(Vector v, const FitConstraints& rc) {
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        v[j] = std::min(std::max(v[j], rc.box_lo[j]), rc.box_hi[j]);
    }
    return v;
}

Mixture init_mixture(const DataMatrix& data, std::size_t k, const FitConstraints& rc,
                     EmOptions::Init init, const Matrix& fallback_cov, RngStream& rng) {
    const Eigen::Index n = data.rows();
    const Eigen::Index d = data.cols();
    Mixture m;
    m.weights = Vector::Constant(static_cast<Eigen::Index>(k), 1.0 / static_cast<double>(k));
    m.components.resize(k);

    if (init == EmOptions::Init::kmeans_seeded) {
        const auto seeds = kmeanspp_seed(data, k, rng);
        // Hard-assign to the nearest seed, then use per-cluster moments.
        Matrix d2(n, static_cast<Eigen::Index>(k));
        for (std::size_t j = 0; j < k; ++j) {
            d2.col(static_cast<Eigen::Index>(j)) =
                row_sq_dists(data, data.row(seeds[j]).transpose());
        }
        std::vector<std::vector<Eigen::Index>> members(k);
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index j;
            d2.row(i).minCoeff(&j);
            members[static_cast<std::size_t>(j)].push_back(i);
        }
        for (std::size_t j = 0; j < k; ++j) {
            Gaussian& g = m.components[j];
            if (members[j].empty()) {
                g.mean = clamp_to_box(data.row(seeds[j]).transpose(), rc);
                g.cov = clamp_covariance(fallback_cov, rc.eig_lo, rc.eig_hi);
                continue;
            }
            Vector mu = Vector::Zero(d);
            for (auto i : members[j]) mu += data.row(i).transpose();
            mu /= static_cast<double>(members[j].size());
            g.mean = clamp_to_box(std::move(mu), rc);
            if (members[j].size() < 2) {
                g.cov = clamp_covariance(fallback_cov, rc.eig_lo, rc.eig_hi);
            } else {
                Matrix cov = Matrix::Zero(d, d);
                for (auto i : members[j]) {
                    Vector delta = data.row(i).transpose() - g.mean;
                    cov += delta * delta.transpose();
                }
                cov /= static_cast<double>(members[j].size());
                g.cov = clamp_covariance(cov, rc.eig_lo, rc.eig_hi);
            }
            m.weights[static_cast<Eigen::Index>(j)] =
                static_cast<double>(members[j].size()) / static_cast<double>(n);
        }
        const double wsum = m.weights.sum();
        if (wsum > 0.0) m.weights /= wsum;
    } else {
        // Random responsibilities, then one M-step's worth of moments.
        Matrix r(n, static_cast<Eigen::Index>(k));
        for (Eigen::Index i = 0; i < n; ++i) {
            double row_sum = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                const double u = 0.05 + rng.uniform();
                r(i, static_cast<Eigen::Index>(j)) = u;
                row_sum += u;
            }
            r.row(i) /= row_sum;
        }
        for (std::size_t j = 0; j < k; ++j) {
            const Eigen::Index jj = static_cast<Eigen::Index>(j);
            const double nj = r.col(jj).sum();
            Vector mu = (data.transpose() * r.col(jj)) / nj;
            Gaussian& g = m.components[j];
            g.mean = clamp_to_box(std::move(mu), rc);
            Matrix centered = data;
            centered.rowwise() -= g.mean.transpose();
            Matrix cov = centered.transpose() * (centered.array().colwise() *
                                                 r.col(jj).array()).matrix() / nj;
            g.cov = clamp_covariance(cov, rc.eig_lo, rc.eig_hi);
            m.weights[jj] = nj / static_cast<double>(n);
        }
    }
    return m;
}

EmRun em_once(const DataMatrix& data, std::size_t k, const FitConstraints& rc,
              const EmOptions& opts, const Matrix& fallback_cov, RngStream& rng) {
    const Eigen::Index n = data.rows();
    Mixture m = init_mixture(data, k, rc, opts.init, fallback_cov, rng);

    double prev_ll = -std::numeric_limits<double>::infinity();
    double ll = prev_ll;
    for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
        // E-step in log space.
        MixtureEval eval(m);
        Matrix logs = eval.component_logs(data);  // n x k, already + log w
        Vector row_ll(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            row_ll[i] = log_sum_exp(logs.row(i).transpose());
        }
        ll = row_ll.sum();
        Matrix resp = (logs.colwise() - row_ll).array().exp();

        // M-step with constraints re-applied every iteration.
        bool reseeded = false;
        for (std::size_t j = 0; j < k; ++j) {
            const Eigen::Index jj = static_cast<Eigen::Index>(j);
            double nj = resp.col(jj).sum();
            Gaussian& g = m.components[j];
            if (nj < 1e-8) {
                // Dead component: restart it at the point farthest from the
                // current means.
                Vector min_d2 = Vector::Constant(n, std::numeric_limits<double>::infinity());
                for (const auto& comp : m.components) {
                    min_d2 = min_d2.cwiseMin(row_sq_dists(data, comp.mean));
                }
                Eigen::Index far;
                min_d2.maxCoeff(&far);
                g.mean = clamp_to_box(data.row(far).transpose(), rc);
                g.cov = clamp_covariance(fallback_cov, rc.eig_lo, rc.eig_hi);
                m.weights[jj] = 1.0 / static_cast<double>(n);
                reseeded = true;
                continue;
            }
            Vector mu = (data.transpose() * resp.col(jj)) / nj;
            g.mean = clamp_to_box(std::move(mu), rc);
            Matrix centered = data;
            centered.rowwise() -= g.mean.transpose();
            Matrix cov = centered.transpose() * (centered.array().colwise() *
                                                 resp.col(jj).array()).matrix() / nj;
            g.cov = clamp_covariance(cov, rc.eig_lo, rc.eig_hi);
            m.weights[jj] = nj / static_cast<double>(n);
        }
        m.weights /= m.weights.sum();

        if (!reseeded && iter > 0 &&
            std::abs(ll - prev_ll) <= opts.tol * (std::abs(prev_ll) + 1e-12)) {
            break;
        }
        prev_ll = ll;
    }
    const double final_ll = loglik(m, data);
    return EmRun{std::move(m), final_ll};
}

}  // namespace

Mixture em_fit(const DataMatrix& data, std::size_t k, const FitConstraints& c,
               const EmOptions& opts, RngStream& rng) {
    if (k == 0) throw InputError("em_fit: k must be >= 1");
    if (data.rows() < static_cast<Eigen::Index>(k)) {
        throw InputError("em_fit: fewer rows than components");
    }
    if (k == 1) {
        Mixture m;
        m.weights = Vector::Ones(1);
        m.components = {fit_single_gaussian(data, c)};
        return m;
    }
    const FitConstraints rc = resolve_constraints(data, c);
    const Matrix fallback_cov = global_cov(data);

    EmRun best;
    for (std::size_t r = 0; r < opts.restarts; ++r) {
        RngStream sub = rng.derive(r);
        EmRun cand = em_once(data, k, rc, opts, fallback_cov, sub);
        if (cand.loglik > best.loglik) best = std::move(cand);
    }
    if (!std::isfinite(best.loglik)) throw NumericError("em_fit: all restarts failed");
    return best.mixture;
}

}  // namespace mixsig
