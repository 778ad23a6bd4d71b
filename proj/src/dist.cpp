#include "mixsig/dist.hpp"

#include <cmath>
#include <limits>

#include "mixsig/errors.hpp"

namespace mixsig {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

double log_sum_exp(const Vector& v) {
    const double m = v.maxCoeff();
    if (!std::isfinite(m)) return m;  // all -inf stays -inf
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += std::exp(v[i] - m);
    return m + std::log(s);
}

Matrix clamp_covariance(const Matrix& cov, double lo, double hi) {
    Matrix sym = 0.5 * (cov + cov.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    if (es.info() != Eigen::Success) {
        throw NumericError("clamp_covariance: eigendecomposition failed");
    }
    Vector ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        ev[i] = std::min(std::max(ev[i], lo), hi);
    }
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

FitConstraints resolve_constraints(const DataMatrix& data, const FitConstraints& c) {
    FitConstraints out = c;
    const Eigen::Index d = data.cols();
    if (!out.box_set()) {
        Vector lo = data.colwise().minCoeff();
        Vector hi = data.colwise().maxCoeff();
        Vector mid = 0.5 * (lo + hi);
        Vector half = 0.5 * (hi - lo);
        // Degenerate (constant) coordinates still get a usable box.
        for (Eigen::Index j = 0; j < d; ++j) {
            if (half[j] <= 0.0) half[j] = 1.0;
        }
        out.box_lo = mid - 10.0 * half;
        out.box_hi = mid + 10.0 * half;
    }
    if (!out.eig_set()) {
        Vector mean = data.colwise().mean();
        double tr = 0.0;
        for (Eigen::Index i = 0; i < data.rows(); ++i) {
            tr += (data.row(i).transpose() - mean).squaredNorm();
        }
        tr /= static_cast<double>(data.rows());
        double scale = tr / static_cast<double>(d);
        if (scale <= 0.0) scale = 1.0;
        out.eig_lo = 1e-6 * scale;
        out.eig_hi = 1e6 * scale;
    }
    if (out.box_lo.size() != d || out.box_hi.size() != d) {
        throw InputError("FitConstraints: box dimension does not match data");
    }
    if (!(out.eig_lo > 0.0) || out.eig_lo > out.eig_hi) {
        throw InputError("FitConstraints: need 0 < c1 <= c2");
    }
    return out;
}

GaussianEval::GaussianEval(const Gaussian& g) : g_(g) {
    if (g.cov.rows() != g.dim() || g.cov.cols() != g.dim()) {
        throw InputError("Gaussian: covariance shape does not match mean");
    }
    if ((g.cov - g.cov.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
        throw InputError("Gaussian: covariance not symmetric");
    }
    llt_.compute(g.cov);
    if (llt_.info() != Eigen::Success) {
        throw NumericError("Gaussian: covariance not positive definite");
    }
    double log_det = 0.0;
    const auto& L = llt_.matrixLLT();
    for (Eigen::Index i = 0; i < g.dim(); ++i) log_det += 2.0 * std::log(L(i, i));
    log_norm_ = -0.5 * (static_cast<double>(g.dim()) * kLog2Pi + log_det);
}

double GaussianEval::logpdf(const Vector& x) const {
    if (x.size() != g_.dim()) throw InputError("mvn_logpdf: dimension mismatch");
    Vector centered = x - g_.mean;
    // Quadratic form via the triangular solve L y = (x - mu).
    Vector y = llt_.matrixL().solve(centered);
    return log_norm_ - 0.5 * y.squaredNorm();
}

Vector GaussianEval::logpdf_rows(const DataMatrix& X) const {
    if (X.cols() != g_.dim()) throw InputError("mvn_logpdf: dimension mismatch");
    Matrix centered = X.transpose();
    centered.colwise() -= g_.mean;
    Matrix y = llt_.matrixL().solve(centered);
    return (log_norm_ - 0.5 * y.colwise().squaredNorm().array()).matrix().transpose();
}

MixtureEval::MixtureEval(const Mixture& m) : m_(m) {
    if (m.components.empty()) throw InputError("Mixture: needs at least one component");
    if (m.weights.size() != static_cast<Eigen::Index>(m.k())) {
        throw InputError("Mixture: weights/components length mismatch");
    }
    double sum = 0.0;
    for (Eigen::Index j = 0; j < m.weights.size(); ++j) {
        if (m.weights[j] < 0.0) throw InputError("Mixture: negative weight");
        sum += m.weights[j];
    }
    if (std::abs(sum - 1.0) > 1e-12) throw InputError("Mixture: weights must sum to 1");
    comps_.reserve(m.k());
    log_w_.reserve(m.k());
    for (std::size_t j = 0; j < m.k(); ++j) {
        if (m.components[j].dim() != m.dim()) {
            throw InputError("Mixture: component dimensions differ");
        }
        comps_.emplace_back(m.components[j]);
        log_w_.push_back(m.weights[j] > 0.0 ? std::log(m.weights[j])
                                            : -std::numeric_limits<double>::infinity());
    }
}

double MixtureEval::logpdf(const Vector& x) const {
    Vector terms(static_cast<Eigen::Index>(comps_.size()));
    for (std::size_t j = 0; j < comps_.size(); ++j) {
        terms[static_cast<Eigen::Index>(j)] = log_w_[j] + comps_[j].logpdf(x);
    }
    return log_sum_exp(terms);
}

Matrix MixtureEval::component_logs(const DataMatrix& X) const {
    Matrix out(X.rows(), static_cast<Eigen::Index>(comps_.size()));
    for (std::size_t j = 0; j < comps_.size(); ++j) {
        out.col(static_cast<Eigen::Index>(j)) =
            comps_[j].logpdf_rows(X).array() + log_w_[j];
    }
    return out;
}

Vector MixtureEval::logpdf_rows(const DataMatrix& X) const {
    Matrix logs = component_logs(X);
    Vector out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        out[i] = log_sum_exp(logs.row(i).transpose());
    }
    return out;
}

double mvn_logpdf(const Vector& x, const Gaussian& g) {
    return GaussianEval(g).logpdf(x);
}

double mixture_logpdf(const Vector& x, const Mixture& m) {
    return MixtureEval(m).logpdf(x);
}

DataMatrix mvn_sample(const Gaussian& g, std::size_t n, RngStream& rng) {
    if (n == 0) throw InputError("mvn_sample: n must be >= 1");
    Eigen::LLT<Matrix> llt(g.cov);
    if (llt.info() != Eigen::Success) {
        throw NumericError("mvn_sample: covariance not positive definite");
    }
    const Eigen::Index d = g.dim();
    DataMatrix z(static_cast<Eigen::Index>(n), d);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        for (Eigen::Index j = 0; j < d; ++j) z(i, j) = rng.normal();
    }
    DataMatrix out = z * llt.matrixU();  // z * L^T
    out.rowwise() += g.mean.transpose();
    return out;
}

std::pair<DataMatrix, std::vector<int>> mixture_sample(const Mixture& m, std::size_t n,
                                                       RngStream& rng) {
    if (n == 0) throw InputError("mixture_sample: n must be >= 1");
    MixtureEval check(m);  // validates the mixture
    const Eigen::Index d = m.dim();
    std::vector<Eigen::LLT<Matrix>> llts;
    llts.reserve(m.k());
    for (const auto& g : m.components) {
        llts.emplace_back(g.cov);
        if (llts.back().info() != Eigen::Success) {
            throw NumericError("mixture_sample: component covariance not positive definite");
        }
    }
    DataMatrix out(static_cast<Eigen::Index>(n), d);
    std::vector<int> labels(n);
    Vector z(d);
    for (std::size_t i = 0; i < n; ++i) {
        // Categorical by CDF scan, then the component's Gaussian draw.
        const double u = rng.uniform();
        double acc = 0.0;
        std::size_t j = m.k() - 1;
        for (std::size_t c = 0; c < m.k(); ++c) {
            acc += m.weights[static_cast<Eigen::Index>(c)];
            if (u < acc) {
                j = c;
                break;
            }
        }
        for (Eigen::Index t = 0; t < d; ++t) z[t] = rng.normal();
        out.row(static_cast<Eigen::Index>(i)) =
            (m.components[j].mean + llts[j].matrixL() * z).transpose();
        labels[i] = static_cast<int>(j);
    }
    return {std::move(out), std::move(labels)};
}

Gaussian fit_single_gaussian(const DataMatrix& data, const FitConstraints& c) {
    if (data.rows() < 1) throw InputError("fit_single_gaussian: empty data");
    const FitConstraints rc = resolve_constraints(data, c);
    Vector mean = data.colwise().mean();
    for (Eigen::Index j = 0; j < mean.size(); ++j) {
        mean[j] = std::min(std::max(mean[j], rc.box_lo[j]), rc.box_hi[j]);
    }
    Matrix centered = data;
    centered.rowwise() -= mean.transpose();
    Matrix cov = centered.transpose() * centered / static_cast<double>(data.rows());
    return Gaussian{mean, clamp_covariance(cov, rc.eig_lo, rc.eig_hi)};
}

double gaussian_l2_cross(const Gaussian& g1, const Gaussian& g2) {
    if (g1.dim() != g2.dim()) throw InputError("gaussian_l2_cross: dimension mismatch");
    Gaussian conv{Vector::Zero(g1.dim()), g1.cov + g2.cov};
    return std::exp(mvn_logpdf(g1.mean - g2.mean, conv));
}

namespace {

// Precomputed factorizations for repeated membership checks.
struct RegionEval {
    struct Step {
        GaussianEval left;
        GaussianEval right;
        double log_w_left;
        double log_w_right;
        Branch branch;
    };
    std::vector<Step> steps;

    explicit RegionEval(const Region& region) {
        steps.reserve(region.route.size());
        for (const auto& [split, branch] : region.route) {
            if (split.k() != 2) {
                throw InputError("Region: split rule must have 2 components");
            }
            steps.push_back(Step{GaussianEval(split.components[0]),
                                 GaussianEval(split.components[1]),
                                 std::log(split.weights[0]), std::log(split.weights[1]),
                                 branch});
        }
    }

    bool contains(const Vector& x) const {
        for (const auto& s : steps) {
            const double left = s.log_w_left + s.left.logpdf(x);
            const double right = s.log_w_right + s.right.logpdf(x);
            const Branch taken = (left >= right) ? Branch::left : Branch::right;
            if (taken != s.branch) return false;
        }
        return true;
    }
};

double region_mass_from_draws(const DataMatrix& draws, const Region& region) {
    const RegionEval eval(region);
    std::size_t inside = 0;
    for (Eigen::Index i = 0; i < draws.rows(); ++i) {
        if (eval.contains(draws.row(i).transpose())) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(draws.rows());
}

}  // namespace

bool region_contains(const Region& region, const Vector& x) {
    return RegionEval(region).contains(x);
}

double estimate_region_mass(const Gaussian& dist, const Region& region, std::size_t m,
                            RngStream& rng) {
    if (m == 0) throw InputError("estimate_region_mass: m must be >= 1");
    if (region.whole_space()) return 1.0;
    return region_mass_from_draws(mvn_sample(dist, m, rng), region);
}

double estimate_region_mass(const Mixture& dist, const Region& region, std::size_t m,
                            RngStream& rng) {
    if (m == 0) throw InputError("estimate_region_mass: m must be >= 1");
    if (region.whole_space()) return 1.0;
    return region_mass_from_draws(mixture_sample(dist, m, rng).first, region);
}

Gaussian moment_match(const Mixture& m) {
    const Eigen::Index d = m.dim();
    Vector mean = Vector::Zero(d);
    for (std::size_t j = 0; j < m.k(); ++j) {
        mean += m.weights[static_cast<Eigen::Index>(j)] * m.components[j].mean;
    }
    Matrix cov = Matrix::Zero(d, d);
    for (std::size_t j = 0; j < m.k(); ++j) {
        const double w = m.weights[static_cast<Eigen::Index>(j)];
        Vector delta = m.components[j].mean - mean;
        cov += w * (m.components[j].cov + delta * delta.transpose());
    }
    return Gaussian{mean, cov};
}

}  // namespace mixsig
