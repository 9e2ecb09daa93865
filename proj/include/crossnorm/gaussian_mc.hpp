#pragma once

// Monte Carlo for centred Gaussian vectors X = F z with F F^T = cov.
// Samples are processed in fixed blocks; block statistics are merged in block
// order, so the result does not depend on how blocks were spread over threads.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "crossnorm/errors.hpp"
#include "crossnorm/rng.hpp"
#include "crossnorm/special_functions.hpp"
#include "crossnorm/supnorm_expectation.hpp"

namespace crossnorm {

class CovarianceSpec {
  public:
    explicit CovarianceSpec(Eigen::MatrixXd matrix) : matrix_(std::move(matrix)) {
        const auto n = matrix_.rows();
        if (n == 0 || matrix_.cols() != n) {
            throw crossnorm::domain_error("CovarianceSpec: matrix must be square and non-empty");
        }
        if (!matrix_.allFinite()) throw crossnorm::domain_error("CovarianceSpec: non-finite entry");
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j) {
                if (std::fabs(matrix_(i, j) - matrix_(j, i)) > 1e-12) {
                    throw crossnorm::domain_error("CovarianceSpec: matrix is not symmetric");
                }
            }
        }
        if (std::fabs(matrix_.trace() - 1.0) > 1e-10) {
            throw crossnorm::domain_error("CovarianceSpec: trace must equal 1");
        }
        const Eigen::MatrixXd sym = 0.5 * (matrix_ + matrix_.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
        if (solver.info() != Eigen::Success) {
            throw crossnorm::domain_error("CovarianceSpec: eigendecomposition failed");
        }
        Eigen::VectorXd lambda = solver.eigenvalues();
        const double floor = 1e-14 * std::max(1.0, lambda.maxCoeff());
        for (Eigen::Index i = 0; i < n; ++i) {
            if (lambda(i) < -1e-10) {
                throw crossnorm::domain_error("CovarianceSpec: matrix is not positive semidefinite");
            }
            if (lambda(i) <= floor) lambda(i) = 0.0;
        }
        factor_ = solver.eigenvectors() * lambda.cwiseSqrt().asDiagonal();
        rank_ = static_cast<std::size_t>((lambda.array() > 0.0).count());
    }

    static CovarianceSpec scaled_identity(std::size_t n) {
        return CovarianceSpec(Eigen::MatrixXd::Identity(n, n) / static_cast<double>(n));
    }

    /// diag(u_1^2, ..., u_n^2) for a unit vector u.
    static CovarianceSpec diagonal(std::span<const double> u) {
        Eigen::VectorXd d(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) d(static_cast<Eigen::Index>(i)) = u[i] * u[i];
        return CovarianceSpec(d.asDiagonal().toDenseMatrix());
    }

    /// v v^T for a unit vector v.
    static CovarianceSpec rank_one(std::span<const double> v) {
        const Eigen::Map<const Eigen::VectorXd> x(v.data(), static_cast<Eigen::Index>(v.size()));
        return CovarianceSpec(x * x.transpose());
    }

    /// ((1 - rho) I + rho 1 1^T) / n.
    static CovarianceSpec equicorrelated(std::size_t n, double rho) {
        const auto m = static_cast<Eigen::Index>(n);
        Eigen::MatrixXd c = Eigen::MatrixXd::Constant(m, m, rho);
        c.diagonal().setOnes();
        return CovarianceSpec(c / static_cast<double>(n));
    }

    const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
    /// F with F F^T = matrix (up to the clipped eigenvalues).
    const Eigen::MatrixXd& factor() const noexcept { return factor_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
    std::size_t rank() const noexcept { return rank_; }

    /// sqrt(cov_ii).
    std::vector<double> coordinate_scales() const {
        std::vector<double> u(size());
        for (std::size_t i = 0; i < u.size(); ++i) {
            u[i] = std::sqrt(std::max(0.0, matrix_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i))));
        }
        return u;
    }

  private:
    Eigen::MatrixXd matrix_;
    Eigen::MatrixXd factor_;
    std::size_t rank_ = 0;
};

struct McParams {
    std::size_t samples = 100000;
    std::uint64_t seed = 0;
    std::size_t substreams = 1;

    void validate() const {
        if (samples == 0) throw crossnorm::domain_error("McParams: samples must be >= 1");
        if (substreams == 0) throw crossnorm::domain_error("McParams: substreams must be >= 1");
    }
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};

/// Welford accumulator with Chan's pairwise merge.
struct RunningMean {
    double count = 0.0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        count += 1.0;
        const double delta = x - mean;
        mean += delta / count;
        m2 += delta * (x - mean);
    }
    void merge(const RunningMean& o) {
        if (o.count == 0.0) return;
        if (count == 0.0) {
            *this = o;
            return;
        }
        const double total = count + o.count;
        const double delta = o.mean - mean;
        mean += delta * (o.count / total);
        m2 += o.m2 + delta * delta * (count * o.count / total);
        count = total;
    }
    McEstimate estimate() const {
        McEstimate e;
        e.mean = mean;
        e.samples = static_cast<std::size_t>(count);
        e.std_error = count > 1.0 ? std::sqrt(m2 / (count - 1.0) / count) : 0.0;
        return e;
    }
};

/// Deterministic access to the samples of X under a seed.
class GaussianSampler {
  public:
    GaussianSampler(const CovarianceSpec& cov, std::uint64_t seed) : factor_(cov.factor()), seed_(seed) {}

    std::size_t dimension() const noexcept { return static_cast<std::size_t>(factor_.rows()); }

    /// Writes sample number `index` into `x`, using `z` as scratch (both of size n).
    void draw(std::uint64_t index, Eigen::Ref<Eigen::VectorXd> x, Eigen::Ref<Eigen::VectorXd> z) const {
        rng::normals(seed_, index, rng::Tag::normal, std::span<double>(z.data(), static_cast<std::size_t>(z.size())));
        x.noalias() = factor_ * z;
    }

    Eigen::VectorXd operator()(std::uint64_t index) const {
        Eigen::VectorXd x(factor_.rows());
        Eigen::VectorXd z(factor_.cols());
        draw(index, x, z);
        return x;
    }

  private:
    Eigen::MatrixXd factor_;
    std::uint64_t seed_;
};

/// The first params.samples draws of X as rows of a matrix.
inline Eigen::MatrixXd sample_correlated(const CovarianceSpec& cov, const McParams& params) {
    params.validate();
    const GaussianSampler sampler(cov, params.seed);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(params.samples), static_cast<Eigen::Index>(cov.size()));
    for (std::size_t s = 0; s < params.samples; ++s) out.row(static_cast<Eigen::Index>(s)) = sampler(s).transpose();
    return out;
}

inline constexpr std::size_t mc_block_size = 4096;

/// Runs `visit(acc, x)` over every sample; per-block accumulators (copies of
/// `init`) are merged in block order with `Acc::merge`.
template <class Acc, class Visit>
Acc accumulate_samples(const CovarianceSpec& cov, const McParams& params, const Acc& init, Visit visit) {
    params.validate();
    const GaussianSampler sampler(cov, params.seed);
    const std::size_t blocks = (params.samples + mc_block_size - 1) / mc_block_size;
    std::vector<Acc> partial(blocks, init);
    const std::size_t workers = std::min(params.substreams, blocks);

    auto work = [&](std::size_t worker) {
        Eigen::VectorXd x(static_cast<Eigen::Index>(cov.size()));
        Eigen::VectorXd z(static_cast<Eigen::Index>(cov.size()));
        for (std::size_t b = worker; b < blocks; b += workers) {
            const std::size_t end = std::min(params.samples, (b + 1) * mc_block_size);
            for (std::size_t s = b * mc_block_size; s < end; ++s) {
                sampler.draw(s, x, z);
                visit(partial[b], std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
            }
        }
    };
    if (workers <= 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    }
    Acc total = init;
    for (const auto& acc : partial) total.merge(acc);
    return total;
}

/// Sample mean of ||X||_p (p in (0, inf]) with its standard error.
inline McEstimate mc_expected_norm(const CovarianceSpec& cov, double p, const McParams& params) {
    if (!(p > 0.0)) throw crossnorm::domain_error("mc_expected_norm: p must be > 0");
    const RunningMean acc = accumulate_samples(cov, params, RunningMean{},
                                               [p](RunningMean& a, std::span<const double> x) {
                                                   a.add(lq_norm(x, p));
                                               });
    return acc.estimate();
}

struct SidakRow {
    double t;
    double empirical;  ///< P(||X||_inf <= t) estimated
    double product;    ///< prod_i phi(t / u_i)
    double margin;     ///< empirical - product
    double std_error;  ///< binomial standard error at the product
    bool violation;    ///< margin < -3 std_error
};

struct SidakReport {
    std::vector<SidakRow> rows;
    std::size_t violations = 0;
    std::size_t samples = 0;
};

namespace detail {

struct HitCounter {
    std::vector<double> thresholds;
    std::vector<std::size_t> hits;
    std::size_t count = 0;

    void merge(const HitCounter& o) {
        for (std::size_t i = 0; i < hits.size(); ++i) hits[i] += o.hits[i];
        count += o.count;
    }
};

}  // namespace detail

inline SidakReport sidak_check(const CovarianceSpec& cov, std::span<const double> t_grid,
                               const McParams& params) {
    for (double t : t_grid) {
        if (!(t > 0.0) || !std::isfinite(t)) throw crossnorm::domain_error("sidak_check: t must be > 0");
    }
    detail::HitCounter init;
    init.thresholds.assign(t_grid.begin(), t_grid.end());
    init.hits.assign(t_grid.size(), 0);
    const auto counts = accumulate_samples(cov, params, init, [](detail::HitCounter& h, std::span<const double> x) {
        double m = 0.0;
        for (double v : x) m = std::max(m, std::fabs(v));
        for (std::size_t i = 0; i < h.thresholds.size(); ++i) {
            if (m <= h.thresholds[i]) ++h.hits[i];
        }
        ++h.count;
    });

    const auto u = cov.coordinate_scales();
    const double n = static_cast<double>(counts.count);
    SidakReport report;
    report.samples = counts.count;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        SidakRow row{};
        row.t = t_grid[i];
        row.empirical = static_cast<double>(counts.hits[i]) / n;
        row.product = 1.0;
        for (double s : u) {
            if (s > 0.0) row.product *= phi(row.t / s);
        }
        row.margin = row.empirical - row.product;
        const double p = std::clamp(row.product, 1.0 / n, 1.0 - 1.0 / n);
        row.std_error = std::sqrt(p * (1.0 - p) / n);
        row.violation = row.margin < -3.0 * row.std_error;
        if (row.violation) ++report.violations;
        report.rows.push_back(row);
    }
    return report;
}

struct Theorem2Verdict {
    std::size_t n = 0;
    McEstimate estimate;
    double lower = 0.0;  ///< sqrt(2/(n pi))
    double upper = 0.0;  ///< sqrt(2/pi)
    bool holds = false;
    std::string message;
};

/// Checks sqrt(2/(n pi)) - 3 se <= E||X||_inf <= sqrt(2/pi) + 3 se.
inline Theorem2Verdict theorem2_bounds_check(const CovarianceSpec& cov, const McParams& params) {
    Theorem2Verdict v;
    v.n = cov.size();
    v.estimate = mc_expected_norm(cov, infinity, params);
    v.upper = sqrt_2_over_pi;
    v.lower = std::sqrt(2.0 / (static_cast<double>(v.n) * std::numbers::pi));
    const double slack = 3.0 * v.estimate.std_error;
    v.holds = v.estimate.mean >= v.lower - slack && v.estimate.mean <= v.upper + slack;
    if (!v.holds) {
        v.message = "estimate " + std::to_string(v.estimate.mean) + " outside [" + std::to_string(v.lower) +
                    ", " + std::to_string(v.upper) + "] by more than 3 standard errors";
    }
    return v;
}

/// Random trace-one PSD matrix G G^T / tr, G an n x r normal matrix with
/// r uniform in 1..n; fully determined by (n, seed, index).
inline CovarianceSpec random_trace_one_covariance(std::size_t n, std::uint64_t seed, std::uint64_t index) {
    if (n == 0) throw crossnorm::domain_error("random_trace_one_covariance: n must be >= 1");
    const auto head = rng::block(seed, index, 0xFFFFFFFFu, rng::Tag::covariance);
    const std::size_t r = 1 + head[0] % n;
    std::vector<double> z(n * r);
    rng::normals(seed, index, rng::Tag::covariance, z);
    const Eigen::Map<const Eigen::MatrixXd> g(z.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(r));
    Eigen::MatrixXd c = g * g.transpose();
    c = 0.5 * (c + c.transpose());
    c /= c.trace();
    return CovarianceSpec(c);
}

}  // namespace crossnorm
