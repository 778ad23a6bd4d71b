#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mixsig/rng.hpp"

namespace mixsig {

// One observation per row, one feature per column.
using DataMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Gaussian {
    Vector mean;
    Matrix cov;

    Eigen::Index dim() const { return mean.size(); }
};

struct Mixture {
    Vector weights;                    // simplex, length k
    std::vector<Gaussian> components;  // length k

    std::size_t k() const { return components.size(); }
    Eigen::Index dim() const { return components.empty() ? 0 : components.front().dim(); }
};

// Compactness constraints applied by every fitting routine: the fitted mean
// is projected into an axis-aligned box and covariance eigenvalues are
// clamped into [eig_lo, eig_hi]. Empty box / non-positive interval means
// "derive the default from the data at fit time" (box = data bounding box
// inflated 10x, interval = [1e-6, 1e6] * trace(raw MLE)/d).
struct FitConstraints {
    Vector box_lo;
    Vector box_hi;
    double eig_lo = 0.0;
    double eig_hi = 0.0;

    bool box_set() const { return box_lo.size() > 0; }
    bool eig_set() const { return eig_lo > 0.0; }
};

// Resolve auto fields of `c` against a concrete dataset.
FitConstraints resolve_constraints(const DataMatrix& data, const FitConstraints& c);

// A region of R^d described as a route of binary splits: each step is a
// 2-component mixture and the branch taken. A point is inside iff at every
// step it lands on the recorded branch, where the left branch is
// w0*N0(x) >= w1*N1(x) (ties left). Empty route = all of R^d.
enum class Branch { left, right };

struct Region {
    std::vector<std::pair<Mixture, Branch>> route;

    bool whole_space() const { return route.empty(); }
};

bool region_contains(const Region& region, const Vector& x);

// Cached Cholesky factorization of one Gaussian for repeated evaluation.
class GaussianEval {
public:
    explicit GaussianEval(const Gaussian& g);
    double logpdf(const Vector& x) const;
    // Log-density of every row of X at once.
    Vector logpdf_rows(const DataMatrix& X) const;
    const Gaussian& model() const { return g_; }

private:
    Gaussian g_;
    Eigen::LLT<Matrix> llt_;
    double log_norm_;
};

class MixtureEval {
public:
    explicit MixtureEval(const Mixture& m);
    double logpdf(const Vector& x) const;
    Vector logpdf_rows(const DataMatrix& X) const;
    // Per-component log(w_j) + log N_j(x) for every row (n x k).
    Matrix component_logs(const DataMatrix& X) const;
    const Mixture& model() const { return m_; }

private:
    Mixture m_;
    std::vector<GaussianEval> comps_;
    std::vector<double> log_w_;
};

double mvn_logpdf(const Vector& x, const Gaussian& g);
double mixture_logpdf(const Vector& x, const Mixture& m);

DataMatrix mvn_sample(const Gaussian& g, std::size_t n, RngStream& rng);
std::pair<DataMatrix, std::vector<int>> mixture_sample(const Mixture& m, std::size_t n,
                                                       RngStream& rng);

Gaussian fit_single_gaussian(const DataMatrix& data, const FitConstraints& c);

// Exact cross integral  ∫ N(x; mu1, S1) N(x; mu2, S2) dx  =  N(mu1 - mu2; 0, S1 + S2).
double gaussian_l2_cross(const Gaussian& g1, const Gaussian& g2);

// Monte-Carlo mass of `region` under the distribution, m draws.
double estimate_region_mass(const Gaussian& dist, const Region& region, std::size_t m,
                            RngStream& rng);
double estimate_region_mass(const Mixture& dist, const Region& region, std::size_t m,
                            RngStream& rng);

// Moment-matched single Gaussian of a mixture (mean and covariance equal to
// the mixture's).
Gaussian moment_match(const Mixture& m);

// Symmetrize + clamp eigenvalues of a covariance into [lo, hi].
Matrix clamp_covariance(const Matrix& cov, double lo, double hi);

// Numerically safe log(sum(exp(v))).
double log_sum_exp(const Vector& v);

}  // namespace mixsig
