#pragma once

// Expected sup-norm of a coordinate-scaled standard normal vector,
//
//   E ||u . xi||_inf = int_0^inf (1 - prod_i phi(t / u_i)) dt,
//
// evaluated by adaptive quadrature on a truncated range, together with the
// derivative, critical-point and monotonicity machinery built on it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "crossnorm/errors.hpp"
#include "crossnorm/quadrature.hpp"
#include "crossnorm/special_functions.hpp"

namespace crossnorm {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

/// ||x||_q for q in (0, inf]; q < 1 gives the usual quasi-norm.
inline double lq_norm(std::span<const double> x, double q) {
    double peak = 0.0;
    for (double v : x) peak = std::max(peak, std::fabs(v));
    if (std::isinf(q) || peak == 0.0) return peak;
    double sum = 0.0;
    for (double v : x) sum += std::pow(std::fabs(v) / peak, q);
    return peak * std::pow(sum, 1.0 / q);
}

/// Nonnegative coordinate scales u. Signs are dropped on construction (the
/// expectation only sees |u_i|); order is kept so indices stay meaningful.
class WeightVector {
  public:
    WeightVector() = default;

    explicit WeightVector(std::vector<double> entries, std::optional<double> q_norm = std::nullopt)
        : entries_(std::move(entries)), q_norm_(q_norm) {
        if (entries_.empty()) throw crossnorm::domain_error("WeightVector: no entries");
        bool any_positive = false;
        for (double& v : entries_) {
            if (!std::isfinite(v)) throw crossnorm::domain_error("WeightVector: non-finite entry");
            v = std::fabs(v);
            any_positive = any_positive || v > 0.0;
        }
        if (!any_positive) throw crossnorm::domain_error("WeightVector: all entries are zero");
        if (q_norm_) {
            if (!(*q_norm_ > 0.0)) throw crossnorm::domain_error("WeightVector: q must be > 0");
            const double norm = lq_norm(entries_, *q_norm_);
            if (std::fabs(norm - 1.0) > 1e-12) {
                throw crossnorm::domain_error("WeightVector: entries are not l_q normalized");
            }
        }
    }

    /// Rescales `entries` to unit l_q norm.
    static WeightVector normalized(std::vector<double> entries, double q) {
        const double norm = lq_norm(entries, q);
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            throw crossnorm::domain_error("WeightVector: cannot normalize a zero vector");
        }
        for (double& v : entries) v /= norm;
        return WeightVector(std::move(entries), q);
    }

    const std::vector<double>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    double operator[](std::size_t i) const { return entries_.at(i); }
    std::optional<double> q_norm() const noexcept { return q_norm_; }

    std::size_t positive_count() const noexcept {
        return static_cast<std::size_t>(
            std::count_if(entries_.begin(), entries_.end(), [](double v) { return v > 0.0; }));
    }

    /// Representative of the permutation class: entries sorted descending.
    WeightVector canonical() const {
        WeightVector out = *this;
        std::sort(out.entries_.begin(), out.entries_.end(), std::greater<>());
        return out;
    }

  private:
    std::vector<double> entries_;
    std::optional<double> q_norm_;
};

struct QuadratureConfig {
    double rel_tol = 1e-12;
    double abs_tol = 1e-13;
    double tail_epsilon = 1e-14;  ///< bound on the integrand mass dropped past the cutoff

    void validate() const {
        if (!(rel_tol > 0.0 && abs_tol > 0.0 && tail_epsilon > 0.0)) {
            throw crossnorm::domain_error("QuadratureConfig: tolerances must be positive");
        }
        if (tail_epsilon > abs_tol / 10.0) {
            throw crossnorm::domain_error("QuadratureConfig: tail_epsilon must be <= abs_tol/10");
        }
    }
};

enum class Method { quadrature, monte_carlo, closed_form };

inline const char* to_string(Method m) {
    switch (m) {
    case Method::quadrature: return "quadrature";
    case Method::monte_carlo: return "monte-carlo";
    case Method::closed_form: return "closed-form";
    }
    return "unknown";
}

struct ExpectationResult {
    double value = 0.0;
    double error_bound = 0.0;
    Method method = Method::quadrature;
    std::string detail;
};

/// `count` coordinates sharing the scale `scale`.
struct WeightGroup {
    double scale;
    std::size_t count;
};

namespace detail {

// Canonical grouping: positive entries sorted descending, equal values merged.
inline std::vector<WeightGroup> group_weights(std::span<const double> entries) {
    std::vector<double> sorted;
    for (double v : entries) {
        if (v > 0.0) sorted.push_back(v);
    }
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    std::vector<WeightGroup> groups;
    for (double v : sorted) {
        if (!groups.empty() && groups.back().scale == v) {
            ++groups.back().count;
        } else {
            groups.push_back({v, 1});
        }
    }
    return groups;
}

// log phi(a), accurate on both sides of a = 1.
inline double log_phi(double a) {
    return a < 1.0 ? std::log(phi(a)) : std::log1p(-phi_c(a));
}

// int_a^inf phi_c(s) ds <= sqrt(2/pi) exp(-a^2/2) / a^2.
inline double tail_mass_bound(double a) {
    if (a <= 0.0) return infinity;
    return sqrt_2_over_pi * std::exp(-0.5 * a * a) / (a * a);
}

inline void validate_groups(std::span<const WeightGroup> groups) {
    if (groups.empty()) throw crossnorm::domain_error("expected_supnorm: no positive weights");
    for (const auto& g : groups) {
        if (!(g.scale > 0.0) || !std::isfinite(g.scale) || g.count == 0) {
            throw crossnorm::domain_error("expected_supnorm: invalid weight group");
        }
    }
}

// Product over groups of phi(t/u)^m, skipping one member of group `skip`.
inline double phi_product(std::span<const WeightGroup> groups, double t,
                          std::size_t skip = static_cast<std::size_t>(-1)) {
    double prod = 1.0;
    for (std::size_t l = 0; l < groups.size(); ++l) {
        const std::size_t m = groups[l].count - (l == skip ? 1 : 0);
        if (m == 0) continue;
        prod *= std::pow(phi(t / groups[l].scale), static_cast<double>(m));
    }
    return prod;
}

// Cutoff past which exp(-t^2 / 2 s^2) * weight drops below eps.
inline double gaussian_cutoff(double s, double weight, double eps) {
    return s * std::sqrt(2.0 * std::log(std::max(1.0, weight) / eps));
}

}  // namespace detail

/// E||u . xi||_inf for grouped scales; the workhorse behind every other entry.
inline ExpectationResult expected_supnorm(std::span<const WeightGroup> groups,
                                          const QuadratureConfig& cfg = {}) {
    cfg.validate();
    detail::validate_groups(groups);
    double u_max = 0.0;
    double mult = 0.0;
    for (const auto& g : groups) {
        u_max = std::max(u_max, g.scale);
        mult += static_cast<double>(g.count);
    }
    // Union bound: 1 - prod phi(T/u_i) <= sum phi_c(T/u_i) <= M phi_c(T/u_max).
    const double cutoff = u_max * phi_c_inv(cfg.tail_epsilon / mult);

    auto integrand = [&](double t) {
        double log_prod = 0.0;
        for (const auto& g : groups) {
            log_prod += static_cast<double>(g.count) * detail::log_phi(t / g.scale);
        }
        return -std::expm1(log_prod);
    };
    const QuadratureResult q = integrate(integrand, 0.0, cutoff, cfg.abs_tol, cfg.rel_tol);

    double tail = 0.0;
    for (const auto& g : groups) {
        tail += static_cast<double>(g.count) * g.scale * detail::tail_mass_bound(cutoff / g.scale);
    }
    ExpectationResult out;
    out.value = q.value;
    out.error_bound = q.error + tail;
    out.method = Method::quadrature;
    std::ostringstream detail;
    detail << "cutoff=" << cutoff << " panels=" << q.panels << " evaluations=" << q.evaluations;
    if (!q.converged) detail << " warning=tolerance-not-reached";
    out.detail = detail.str();
    return out;
}

/// E||u . xi||_inf. Zero entries drop out (their factor is phi(inf) = 1).
inline ExpectationResult expected_supnorm(const WeightVector& u, const QuadratureConfig& cfg = {}) {
    const auto groups = detail::group_weights(u.entries());
    return expected_supnorm(std::span<const WeightGroup>(groups), cfg);
}

/// E_k = k^(-1/2) E||(xi_1..xi_k)||_inf.
inline double ek(std::size_t k, const QuadratureConfig& cfg = {}) {
    if (k == 0) throw crossnorm::domain_error("ek: k must be >= 1");
    const WeightGroup g{1.0, k};
    return expected_supnorm(std::span<const WeightGroup>(&g, 1), cfg).value /
           std::sqrt(static_cast<double>(k));
}

struct EkRow {
    std::size_t k;
    double value;
    /// E_k * sqrt(2k / log k); NaN for k = 1 and for q != 2 tables.
    double asymptotic_ratio;
};

struct EkTable {
    double q = 2.0;
    std::vector<EkRow> rows;
    /// Strict decrease from k = 2 (q = 2) or from k = 1 (q < 2).
    bool strictly_decreasing = true;
    /// |E_1 - E_2|.
    double head_gap = 0.0;
    /// Smallest E_k - E_{k+1} over the range checked for strict decrease.
    double min_step = infinity;
};

namespace detail {

inline void finish_table(EkTable& table) {
    const std::size_t first = table.q == 2.0 ? 1 : 0;  // 0-based index of first checked row
    if (table.rows.size() >= 2) {
        table.head_gap = std::fabs(table.rows[0].value - table.rows[1].value);
    }
    for (std::size_t i = first; i + 1 < table.rows.size(); ++i) {
        const double step = table.rows[i].value - table.rows[i + 1].value;
        table.min_step = std::min(table.min_step, step);
        if (!(step > 0.0)) table.strictly_decreasing = false;
    }
}

}  // namespace detail

/// Rows E_1..E_{n_max}.
inline EkTable ek_table(std::size_t n_max, const QuadratureConfig& cfg = {}) {
    if (n_max == 0) throw crossnorm::domain_error("ek_table: n_max must be >= 1");
    EkTable table;
    table.q = 2.0;
    table.rows.reserve(n_max);
    for (std::size_t k = 1; k <= n_max; ++k) {
        const double v = ek(k, cfg);
        const double kd = static_cast<double>(k);
        const double ratio = k >= 2 ? v * std::sqrt(2.0 * kd / std::log(kd))
                                    : std::numeric_limits<double>::quiet_NaN();
        table.rows.push_back({k, v, ratio});
    }
    detail::finish_table(table);
    return table;
}

/// E_{k,q} = k^(-1/q) E||(xi_1..xi_k)||_inf, for 0 < q <= 2.
inline double ekq(std::size_t k, double q, const QuadratureConfig& cfg = {}) {
    if (k == 0) throw crossnorm::domain_error("ekq: k must be >= 1");
    if (!(q > 0.0 && q <= 2.0)) throw crossnorm::domain_error("ekq: q must lie in (0, 2]");
    const WeightGroup g{1.0, k};
    return expected_supnorm(std::span<const WeightGroup>(&g, 1), cfg).value *
           std::pow(static_cast<double>(k), -1.0 / q);
}

inline EkTable ekq_table(std::size_t n_max, double q, const QuadratureConfig& cfg = {}) {
    if (n_max == 0) throw crossnorm::domain_error("ekq_table: n_max must be >= 1");
    EkTable table;
    table.q = q;
    for (std::size_t k = 1; k <= n_max; ++k) {
        table.rows.push_back({k, ekq(k, q, cfg), std::numeric_limits<double>::quiet_NaN()});
    }
    detail::finish_table(table);
    return table;
}

/// Median of ||xi||_inf in dimension n: the mu with phi(mu)^n = 1/2.
inline double median_supnorm(std::size_t n) {
    if (n == 0) throw crossnorm::domain_error("median_supnorm: n must be >= 1");
    // 1 - 2^(-1/n), formed without cancellation for large n.
    const double tail = -std::expm1(-std::numbers::ln2 / static_cast<double>(n));
    return phi_c_inv(tail);
}

/// dE||u . xi||_inf / du_i, in the form obtained after integrating by parts:
///
///   (2/pi) int_0^inf e^{-t^2/2u_i^2} sum_{j != i} e^{-t^2/2u_j^2}/u_j prod_{l != i,j} phi(t/u_l) dt
///
/// plus the boundary term sqrt(2/pi) when u_i is the only positive entry.
inline double partial_derivative(const WeightVector& u, std::size_t i,
                                 const QuadratureConfig& cfg = {}) {
    cfg.validate();
    if (i >= u.size()) throw crossnorm::domain_error("partial_derivative: index out of range");
    const double ui = u[i];
    if (!(ui > 0.0)) {
        throw crossnorm::domain_error("partial_derivative: u_i must be > 0");
    }
    std::vector<double> rest;
    for (std::size_t k = 0; k < u.size(); ++k) {
        if (k != i) rest.push_back(u[k]);
    }
    const auto others = detail::group_weights(rest);
    if (others.empty()) return sqrt_2_over_pi;

    double weight = 0.0;
    for (const auto& g : others) weight += static_cast<double>(g.count) / g.scale;
    weight *= ui;

    auto integrand = [&](double t) {
        const double own = std::exp(-0.5 * (t / ui) * (t / ui));
        if (own == 0.0) return 0.0;
        double sum = 0.0;
        for (std::size_t j = 0; j < others.size(); ++j) {
            const double s = others[j].scale;
            const double dens = std::exp(-0.5 * (t / s) * (t / s)) / s;
            if (dens == 0.0) continue;
            sum += static_cast<double>(others[j].count) * dens *
                   detail::phi_product(others, t, j);
        }
        return (2.0 / std::numbers::pi) * own * sum;
    };
    const double cutoff = detail::gaussian_cutoff(ui, weight, cfg.tail_epsilon);
    return integrate(integrand, 0.0, cutoff, cfg.abs_tol, cfg.rel_tol).value;
}

/// (1/u_i) dE/du_i - (1/u_j) dE/du_j, integrated as the difference of the
/// two sides of the Lagrange condition so the shared i-j term cancels exactly.
///
/// Sign: positive when u_i > u_j, negative when u_i < u_j, zero when equal or
/// when no third positive coordinate exists.
inline double critical_point_residual(const WeightVector& u, std::size_t i, std::size_t j,
                                      const QuadratureConfig& cfg = {}) {
    cfg.validate();
    if (i >= u.size() || j >= u.size() || i == j) {
        throw crossnorm::domain_error("critical_point_residual: need two distinct valid indices");
    }
    const double ui = u[i];
    const double uj = u[j];
    if (!(ui > 0.0) || !(uj > 0.0)) {
        throw crossnorm::domain_error("critical_point_residual: u_i and u_j must be > 0");
    }
    if (ui == uj) return 0.0;
    std::vector<double> rest;
    for (std::size_t k = 0; k < u.size(); ++k) {
        if (k != i && k != j) rest.push_back(u[k]);
    }
    const auto others = detail::group_weights(rest);
    if (others.empty()) return 0.0;

    double weight = 0.0;
    for (const auto& g : others) weight += static_cast<double>(g.count) / g.scale;
    weight *= std::max(ui, uj) * (1.0 / ui + 1.0 / uj);

    auto integrand = [&](double t) {
        const double side_i = std::exp(-0.5 * (t / ui) * (t / ui)) / ui * phi(t / uj);
        const double side_j = std::exp(-0.5 * (t / uj) * (t / uj)) / uj * phi(t / ui);
        const double diff = side_i - side_j;
        if (diff == 0.0) return 0.0;
        double sum = 0.0;
        for (std::size_t k = 0; k < others.size(); ++k) {
            const double s = others[k].scale;
            const double dens = std::exp(-0.5 * (t / s) * (t / s)) / s;
            if (dens == 0.0) continue;
            sum += static_cast<double>(others[k].count) * dens *
                   detail::phi_product(others, t, k);
        }
        return (2.0 / std::numbers::pi) * sum * diff;
    };
    const double cutoff = detail::gaussian_cutoff(std::max(ui, uj), weight, cfg.tail_epsilon);
    return integrate(integrand, 0.0, cutoff, cfg.abs_tol, cfg.rel_tol).value;
}

/// R(rho) = E||u(rho) . xi||_inf with
/// u(rho) = (sqrt((1-rho^2)/n) repeated n times, rho) in dimension n + 1.
inline ExpectationResult r_rho(std::size_t n, double rho, const QuadratureConfig& cfg = {}) {
    if (n == 0) throw crossnorm::domain_error("r_rho: n must be >= 1");
    const double rho_max = 1.0 / std::sqrt(static_cast<double>(n + 1));
    if (!(rho >= 0.0) || rho > rho_max * (1.0 + 1e-15)) {
        throw crossnorm::domain_error("r_rho: rho must lie in [0, 1/sqrt(n+1)]");
    }
    const double bulk = std::sqrt((1.0 - rho * rho) / static_cast<double>(n));
    std::vector<WeightGroup> groups;
    if (rho == bulk) {
        groups.push_back({bulk, n + 1});
    } else {
        groups.push_back({bulk, n});
        if (rho > 0.0) groups.push_back({rho, 1});
    }
    ExpectationResult out = expected_supnorm(std::span<const WeightGroup>(groups), cfg);
    if (n == 1) out.detail += " note=n=1: R is constant (R' == 0)";
    return out;
}

struct RderSign {
    /// e^{-t^2/2rho^2} phi(t b) - e^{-(t b)^2/2} rho b phi(t/rho), b = sqrt(n/(1-rho^2)).
    double bracket;
    /// Full integrand of R'(rho) at t, including the (n-1) prefactor.
    double integrand;
    /// Sign of `integrand` (-1, 0, +1), with |.| below 1e-12 of the bracket scale read as 0.
    int sign;
};

/// Sign of the R'(rho) integrand at a single t.
inline RderSign rder_integrand_sign(std::size_t n, double rho, double t) {
    if (n == 0) throw crossnorm::domain_error("rder_integrand_sign: n must be >= 1");
    const double rho_max = 1.0 / std::sqrt(static_cast<double>(n + 1));
    if (!(rho > 0.0) || rho > rho_max * (1.0 + 1e-15)) {
        throw crossnorm::domain_error("rder_integrand_sign: rho must lie in (0, 1/sqrt(n+1)]");
    }
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw crossnorm::domain_error("rder_integrand_sign: t must be > 0");
    }
    const double nd = static_cast<double>(n);
    const double b = std::sqrt(nd / (1.0 - rho * rho));
    const double tb = t * b;
    const double first = std::exp(-0.5 * (t / rho) * (t / rho)) * phi(tb);
    const double second = std::exp(-0.5 * tb * tb) * rho * b * phi(t / rho);
    RderSign out{};
    out.bracket = first - second;
    if (n == 1) {
        out.integrand = 0.0;
        out.sign = 0;
        return out;
    }
    const double scale = std::max(first, second);
    const double prefactor = (2.0 / std::numbers::pi) * std::exp(-0.5 * tb * tb) * (nd - 1.0) * b *
                             std::pow(phi(tb), nd - 2.0);
    out.integrand = prefactor * out.bracket;
    if (std::fabs(out.bracket) <= 1e-12 * scale || prefactor == 0.0) {
        out.sign = 0;
    } else {
        out.sign = out.bracket > 0.0 ? 1 : -1;
    }
    return out;
}

}  // namespace crossnorm
