#pragma once

// First intrinsic volume of orthogonal cross-polytopes, the mean-width lower
// bound in terms of successive inner radii, and the tail inequality used for
// the l_q extension.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crossnorm/errors.hpp"
#include "crossnorm/quadrature.hpp"
#include "crossnorm/special_functions.hpp"
#include "crossnorm/supnorm_expectation.hpp"

namespace crossnorm {

inline constexpr double corollary_constant = 1.74;

/// Volume of the n-dimensional unit ball.
inline double kappa(std::size_t n) {
    const double h = 0.5 * static_cast<double>(n);
    return std::exp(h * std::log(std::numbers::pi) - std::lgamma(1.0 + h));
}

/// C_n(l) = conv{+-l_i e_i}.
class CrossPolytope {
  public:
    explicit CrossPolytope(std::vector<double> semi_axes) : axes_(std::move(semi_axes)) {
        if (axes_.empty()) throw crossnorm::domain_error("CrossPolytope: no semi-axes");
        for (double v : axes_) {
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw crossnorm::domain_error("CrossPolytope: semi-axes must be finite and > 0");
            }
        }
    }
    const std::vector<double>& semi_axes() const noexcept { return axes_; }
    std::size_t dimension() const noexcept { return axes_.size(); }

  private:
    std::vector<double> axes_;
};

/// V_1(C_n(l)) = sqrt(2 pi) E||l . xi||_inf.
inline ExpectationResult v1_crosspolytope(const CrossPolytope& cp, const QuadratureConfig& cfg = {}) {
    ExpectationResult r = expected_supnorm(WeightVector(cp.semi_axes()), cfg);
    const double s = std::sqrt(2.0 * std::numbers::pi);
    r.value *= s;
    r.error_bound *= s;
    return r;
}

/// Successive inner radii r_1 >= r_2 >= ... > 0.
class RadiiProfile {
  public:
    explicit RadiiProfile(std::vector<double> radii, bool allow_unordered = false) : radii_(std::move(radii)) {
        if (radii_.empty()) throw crossnorm::domain_error("RadiiProfile: no radii");
        for (std::size_t i = 0; i < radii_.size(); ++i) {
            if (!(radii_[i] > 0.0) || !std::isfinite(radii_[i])) {
                throw crossnorm::domain_error("RadiiProfile: radii must be finite and > 0");
            }
            if (!allow_unordered && i > 0 && radii_[i] > radii_[i - 1]) {
                throw crossnorm::domain_error("RadiiProfile: radii must be nonincreasing (r_" + std::to_string(i + 1) +
                                              " = " + std::to_string(radii_[i]) + " > r_" + std::to_string(i) +
                                              " = " + std::to_string(radii_[i - 1]) +
                                              "); pass allow_unordered to override");
            }
        }
    }
    const std::vector<double>& radii() const noexcept { return radii_; }
    std::size_t dimension() const noexcept { return radii_.size(); }

  private:
    std::vector<double> radii_;
};

struct MeanWidthBound {
    std::size_t n = 0;
    double radii_norm = 0.0;  ///< sqrt(sum r_i^2)
    double e_n = 0.0;
    double bound_exact = 0.0;                ///< sqrt(2 pi) E_n ||r||_2
    std::optional<double> bound_corollary;   ///< 1.74 sqrt(log n / n) ||r||_2; absent for n = 1
    bool corollary_defined = true;
    /// V_1 of C_n(r) itself, the cross-polytope attaining the same radii.
    double v1_cross_polytope = 0.0;
};

inline MeanWidthBound mean_width_lower_bound(const RadiiProfile& r, const QuadratureConfig& cfg = {}) {
    MeanWidthBound out;
    out.n = r.dimension();
    out.radii_norm = lq_norm(r.radii(), 2.0);
    out.e_n = ek(out.n, cfg);
    out.bound_exact = std::sqrt(2.0 * std::numbers::pi) * out.e_n * out.radii_norm;
    if (out.n >= 2) {
        const double nd = static_cast<double>(out.n);
        out.bound_corollary = corollary_constant * std::sqrt(std::log(nd) / nd) * out.radii_norm;
    } else {
        out.corollary_defined = false;
    }
    out.v1_cross_polytope = v1_crosspolytope(CrossPolytope(r.radii()), cfg).value;
    return out;
}

struct ConstantRow {
    std::size_t n;
    double e_n;
    double c_exact;   ///< sqrt(2 pi n / log n) E_n
    double median;    ///< mu_n
    double c_median;  ///< sqrt(pi/2) mu_n / sqrt(log n), from E >= mu / 2
};

struct ConstantTable {
    std::vector<ConstantRow> rows;
    double min_c = std::numeric_limits<double>::infinity();
    std::size_t argmin = 0;
    double c_at_largest_n = 0.0;
    std::size_t largest_n = 0;
    std::vector<std::size_t> below_constant;  ///< n with c_exact < 1.74
    double min_c_median = std::numeric_limits<double>::infinity();
};

inline ConstantTable constant_c_table(std::span<const std::size_t> n_list, const QuadratureConfig& cfg = {}) {
    ConstantTable t;
    for (std::size_t n : n_list) {
        if (n < 2) throw crossnorm::domain_error("constant_c_table: entries must be >= 2");
        const double nd = static_cast<double>(n);
        const double log_n = std::log(nd);
        ConstantRow row{n, ek(n, cfg), 0.0, median_supnorm(n), 0.0};
        row.c_exact = std::sqrt(2.0 * std::numbers::pi * nd / log_n) * row.e_n;
        row.c_median = sqrt_pi_over_2 * row.median / std::sqrt(log_n);
        if (row.c_exact < t.min_c) {
            t.min_c = row.c_exact;
            t.argmin = n;
        }
        t.min_c_median = std::min(t.min_c_median, row.c_median);
        if (row.c_exact < corollary_constant) t.below_constant.push_back(n);
        if (n >= t.largest_n) {
            t.largest_n = n;
            t.c_at_largest_n = row.c_exact;
        }
        t.rows.push_back(row);
    }
    return t;
}

struct Lemma2Result {
    double c;
    double lhs;                ///< c + int_c^inf (1 - phi(sqrt2 t)^2) dt
    double middle;             ///< c + int_c^inf (1 - phi(t)) dt
    double rhs;                ///< sqrt(2/pi) e^{-c^2/2} + c phi(c)
    double identity_residual;  ///< |middle - rhs|
    bool holds;                ///< lhs <= rhs + 1e-10
};

inline Lemma2Result lemma2_check(double c, const QuadratureConfig& cfg = {}) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw crossnorm::domain_error("lemma2_check: c must be finite and >= 0");
    cfg.validate();
    // Both integrands are below e^{-t^2/2} * const, negligible past c + 10.
    const double end = c + 10.0;
    const double lhs_tail = integrate(
        [](double t) {
            const double tail = phi_c(std::numbers::sqrt2 * t);
            return tail * (2.0 - tail);
        },
        c, end, cfg.abs_tol, cfg.rel_tol).value;
    const double mid_tail = integrate([](double t) { return phi_c(t); }, c, end, cfg.abs_tol, cfg.rel_tol).value;
    Lemma2Result r;
    r.c = c;
    r.lhs = c + lhs_tail;
    r.middle = c + mid_tail;
    r.rhs = sqrt_2_over_pi * std::exp(-0.5 * c * c) + c * phi(c);
    r.identity_residual = std::fabs(r.middle - r.rhs);
    r.holds = r.lhs <= r.rhs + 1e-10;
    return r;
}

}  // namespace crossnorm
