#pragma once

// Expected l_p norms of u . xi for u on the l_q sphere: evaluation routes,
// the candidate family, multi-start optimization, and the n = 2 landscape
// with its phase thresholds.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "crossnorm/errors.hpp"
#include "crossnorm/gaussian_mc.hpp"
#include "crossnorm/quadrature.hpp"
#include "crossnorm/rng.hpp"
#include "crossnorm/special_functions.hpp"
#include "crossnorm/supnorm_expectation.hpp"

namespace crossnorm {

struct PQSpec {
    double p = infinity;
    double q = 2.0;
    std::size_t n = 1;

    void validate() const {
        if (!(p > 1.0)) throw crossnorm::domain_error("PQSpec: p must be > 1 or inf");
        if (!(q > 0.0)) throw crossnorm::domain_error("PQSpec: q must be > 0");
        if (n == 0) throw crossnorm::domain_error("PQSpec: n must be >= 1");
    }
};

enum class EvalMethod { automatic, quadrature, monte_carlo };

struct PnormOptions {
    EvalMethod method = EvalMethod::automatic;
    QuadratureConfig quadrature{};
    McParams mc{200000, 0, 1};
};

namespace detail {

/// (2/pi) int_0^{pi/2} (a^p cos^p + b^p sin^p)^{1/p} d theta, a, b >= 0.
inline QuadratureResult angular_mean(double a, double b, double p, const QuadratureConfig& cfg) {
    auto f = [&](double theta) {
        const double x = a * std::cos(theta);
        const double y = b * std::sin(theta);
        const double hi = std::max(x, y);
        const double lo = std::min(x, y);
        if (hi == 0.0) return 0.0;
        return hi * std::pow(1.0 + std::pow(lo / hi, p), 1.0 / p);
    };
    // Kink region of large p sits where a cos = b sin.
    const double cross = std::atan2(a, b);
    const double bp[] = {cross};
    QuadratureResult r = integrate(f, 0.0, std::numbers::pi / 2.0, cfg.abs_tol, cfg.rel_tol, bp);
    r.value *= 2.0 / std::numbers::pi;
    r.error *= 2.0 / std::numbers::pi;
    return r;
}

/// Mean of ||u . z_s||_p over the supplied sample rows.
class SampleObjective {
  public:
    SampleObjective(std::size_t n, double p, const McParams& params) : n_(n), p_(p) {
        params.validate();
        draws_.resize(params.samples * n);
        for (std::size_t s = 0; s < params.samples; ++s) {
            rng::normals(params.seed, s, rng::Tag::normal, std::span<double>(draws_.data() + s * n, n));
        }
    }

    McEstimate operator()(std::span<const double> u) const {
        RunningMean acc;
        std::vector<double> x(n_);
        const std::size_t samples = draws_.size() / n_;
        for (std::size_t s = 0; s < samples; ++s) {
            for (std::size_t i = 0; i < n_; ++i) x[i] = u[i] * draws_[s * n_ + i];
            acc.add(lq_norm(x, p_));
        }
        return acc.estimate();
    }

  private:
    std::size_t n_;
    double p_;
    std::vector<double> draws_;
};

}  // namespace detail

/// E||u . xi||_p. Routes: p = inf by sup-norm quadrature; n <= 2 with finite p
/// by angular quadrature (radius and direction of a planar Gaussian are
/// independent, E R = sqrt(pi/2)); anything else by Monte Carlo.
inline ExpectationResult expected_pnorm(const WeightVector& u, const PQSpec& spec,
                                        const PnormOptions& opts = {}) {
    spec.validate();
    if (u.size() != spec.n) throw crossnorm::domain_error("expected_pnorm: u has the wrong dimension");
    const bool exact_route = std::isinf(spec.p) || spec.n <= 2;
    if (opts.method == EvalMethod::quadrature && !exact_route) {
        throw crossnorm::capability_error("expected_pnorm: quadrature needs p = inf or n <= 2");
    }
    if (exact_route && opts.method != EvalMethod::monte_carlo) {
        if (std::isinf(spec.p)) return expected_supnorm(u, opts.quadrature);
        const double a = u[0];
        const double b = spec.n == 2 ? u[1] : 0.0;
        const auto r = detail::angular_mean(a, b, spec.p, opts.quadrature);
        ExpectationResult out;
        out.value = sqrt_pi_over_2 * r.value;
        out.error_bound = sqrt_pi_over_2 * r.error;
        out.method = Method::quadrature;
        out.detail = "route=angular panels=" + std::to_string(r.panels);
        return out;
    }
    const auto& e = u.entries();
    const double scale = lq_norm(e, 2.0);
    std::vector<double> unit(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) unit[i] = e[i] / scale;
    const auto est = mc_expected_norm(CovarianceSpec::diagonal(unit), spec.p, opts.mc);
    ExpectationResult out;
    out.value = scale * est.mean;
    out.error_bound = scale * est.std_error;
    out.method = Method::monte_carlo;
    out.detail = "samples=" + std::to_string(est.samples) + " seed=" + std::to_string(opts.mc.seed) +
                 " error_bound=std_error";
    return out;
}

/// u_q^k = (k^{-1/q} repeated k times, then zeros) in dimension n.
inline WeightVector candidate_uqk(std::size_t n, std::size_t k, double q) {
    if (k == 0 || k > n) throw crossnorm::domain_error("candidate_uqk: need 1 <= k <= n");
    if (!(q > 0.0)) throw crossnorm::domain_error("candidate_uqk: q must be > 0");
    std::vector<double> u(n, 0.0);
    const double v = std::isinf(q) ? 1.0 : std::pow(static_cast<double>(k), -1.0 / q);
    std::fill_n(u.begin(), k, v);
    return WeightVector(std::move(u));
}

// ---------------------------------------------------------------------------
// Optimization on the l_q sphere

enum class Mode { minimize, maximize };

inline const char* to_string(Mode m) { return m == Mode::minimize ? "min" : "max"; }

struct OptimizerOptions {
    std::size_t starts = 10;  ///< random feasible starts
    std::uint64_t seed = 0;
    bool include_candidates = true;  ///< also start from u_q^1 .. u_q^n
    std::size_t max_iterations = 10000;
    double tolerance = 1e-6;  ///< on the projected finite-difference gradient
    double fd_step = 1e-5;
    PnormOptions eval{EvalMethod::automatic, {5e-14, 5e-14, 5e-15}, {20000, 0, 1}};
};

struct OptimizerRun {
    std::string origin;  ///< "candidate k=..", "random #.."
    std::vector<double> start;
    std::vector<double> point;
    double value = 0.0;
    double residual = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

struct OptimizationResult {
    WeightVector point;
    ExpectationResult value;
    double residual = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    /// Every start and every end point had the same value within 1e-10.
    bool constant_landscape = false;
    std::size_t best_run = 0;
    std::vector<OptimizerRun> runs;
};

namespace detail {

struct Objective {
    PQSpec spec;
    PnormOptions eval;
    std::optional<SampleObjective> sampled;

    Objective(const PQSpec& s, const PnormOptions& e) : spec(s), eval(e) {
        const bool exact = std::isinf(spec.p) || spec.n <= 2;
        if (eval.method == EvalMethod::monte_carlo || (!exact && eval.method == EvalMethod::automatic)) {
            sampled.emplace(spec.n, spec.p, eval.mc);
        } else if (!exact) {
            throw crossnorm::capability_error("optimize_on_lq_sphere: quadrature needs p = inf or n <= 2");
        }
    }

    /// E on the direction of v (scale invariant extension off the sphere).
    double operator()(std::span<const double> v) const {
        const double norm = lq_norm(v, spec.q);
        std::vector<double> u(v.begin(), v.end());
        for (double& x : u) x /= norm;
        if (sampled) return (*sampled)(u).mean;
        return expected_pnorm(WeightVector(std::move(u)), spec, eval).value;
    }
};

inline std::vector<double> normalize_q(std::vector<double> v, double q) {
    const double norm = lq_norm(v, q);
    for (double& x : v) x /= norm;
    return v;
}

struct Gradient {
    std::vector<double> g;
    double residual;
};

inline Gradient fd_gradient(const Objective& f, const std::vector<double>& u, double fu, double sign,
                            double h) {
    Gradient out{std::vector<double>(u.size()), 0.0};
    std::vector<double> w = u;
    double r2 = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] > h) {
            w[i] = u[i] + h;
            const double up = f(w);
            w[i] = u[i] - h;
            const double down = f(w);
            out.g[i] = (up - down) / (2.0 * h);
        } else {
            w[i] = u[i] + h;
            out.g[i] = (f(w) - fu) / h;
        }
        w[i] = u[i];
        if (u[i] > 0.0) {
            r2 += out.g[i] * out.g[i];
        } else {
            // Only the feasible direction (increase from zero) counts.
            const double improving = std::min(0.0, sign * out.g[i]);
            r2 += improving * improving;
        }
    }
    out.residual = std::sqrt(r2);
    return out;
}

inline OptimizerRun descend(const Objective& f, std::vector<double> start, double sign,
                            const OptimizerOptions& opts, std::string origin) {
    OptimizerRun run;
    run.origin = std::move(origin);
    run.start = start;
    std::vector<double> u = normalize_q(std::move(start), f.spec.q);
    double fu = f(u);
    double eta = 0.1;
    Gradient grad = fd_gradient(f, u, fu, sign, opts.fd_step);
    std::size_t it = 0;
    for (; it < opts.max_iterations && grad.residual >= opts.tolerance; ++it) {
        bool accepted = false;
        while (eta > 1e-14) {
            std::vector<double> v(u.size());
            double decrease = 0.0;
            for (std::size_t i = 0; i < u.size(); ++i) {
                v[i] = std::max(0.0, u[i] - eta * sign * grad.g[i]);
                decrease += sign * grad.g[i] * (v[i] - u[i]);
            }
            if (lq_norm(v, f.spec.q) == 0.0) {
                eta *= 0.5;
                continue;
            }
            v = normalize_q(std::move(v), f.spec.q);
            const double fv = f(v);
            // Armijo on the projected step; f is scale invariant so the
            // normalized point has the same value as the raw step.
            if (sign * fv <= sign * fu + 1e-4 * decrease && v != u) {
                u = std::move(v);
                fu = fv;
                accepted = true;
                eta = std::min(eta * 2.0, 10.0);
                break;
            }
            eta *= 0.5;
        }
        if (!accepted) break;
        grad = fd_gradient(f, u, fu, sign, opts.fd_step);
    }
    run.point = u;
    run.value = fu;
    run.residual = grad.residual;
    run.iterations = it;
    run.converged = grad.residual < opts.tolerance;
    return run;
}

}  // namespace detail

/// Multi-start projected gradient descent/ascent of E||u . xi||_p over
/// u >= 0, ||u||_q = 1. Throws convergence_error (carrying the best iterate)
/// when the best run did not reach the tolerance.
inline OptimizationResult optimize_on_lq_sphere(const PQSpec& spec, Mode mode, const OptimizerOptions& opts = {}) {
    spec.validate();
    if (opts.starts == 0 && !opts.include_candidates) {
        throw crossnorm::domain_error("optimize_on_lq_sphere: need at least one start");
    }
    const detail::Objective f(spec, opts.eval);
    const double sign = mode == Mode::minimize ? 1.0 : -1.0;

    OptimizationResult out;
    double lo = infinity;
    double hi = -infinity;
    auto record = [&](double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    };
    auto run_from = [&](std::vector<double> start, std::string origin) {
        record(f(start));
        out.runs.push_back(detail::descend(f, std::move(start), sign, opts, std::move(origin)));
        record(out.runs.back().value);
    };
    if (opts.include_candidates) {
        for (std::size_t k = 1; k <= spec.n; ++k) {
            run_from(candidate_uqk(spec.n, k, spec.q).entries(), "candidate k=" + std::to_string(k));
        }
    }
    for (std::size_t s = 0; s < opts.starts; ++s) {
        std::vector<double> start(spec.n);
        rng::normals(opts.seed, s, rng::Tag::start_point, start);
        for (double& x : start) x = std::fabs(x);
        run_from(detail::normalize_q(std::move(start), spec.q), "random #" + std::to_string(s));
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < out.runs.size(); ++i) {
        const auto& cand = out.runs[i];
        const auto& cur = out.runs[best];
        const double gain = sign * (cur.value - cand.value);
        if (gain > 1e-12 || (std::fabs(gain) <= 1e-12 && cand.converged && !cur.converged)) best = i;
    }
    const auto& win = out.runs[best];
    out.best_run = best;
    out.residual = win.residual;
    out.iterations = win.iterations;
    out.converged = win.converged;
    out.constant_landscape = out.runs.size() > 1 && hi - lo < 1e-10;
    if (!win.converged) {
        throw crossnorm::convergence_error("optimize_on_lq_sphere: no convergence within " +
                                               std::to_string(opts.max_iterations) + " iterations (residual " +
                                               std::to_string(win.residual) + ")",
                                           win.point, win.value);
    }
    out.point = WeightVector(win.point, spec.q);
    if (f.sampled) {
        const auto est = (*f.sampled)(win.point);
        out.value = {est.mean, est.std_error, Method::monte_carlo,
                     "samples=" + std::to_string(est.samples) + " common random numbers"};
    } else {
        out.value = expected_pnorm(out.point, spec, opts.eval);
    }
    return out;
}

// ---------------------------------------------------------------------------
// n = 2 landscape
//
// The quarter arc a^q + b^q = 1, a, b >= 0, is parametrized by x = log(b/a):
// x = -inf is (1, 0), x = 0 the uniform point, x = +inf is (0, 1). With
// k = e^x, w = b^q and A = cos^p + k^p sin^p,
//
//   d log V / dx = (-w P + (1 - w) k^p Q) / (P + k^p Q),
//   P = int A^{1/p-1} cos^p,   Q = int A^{1/p-1} sin^p   (over [0, pi/2]),
//
// and the slope has the sign of g(x) = log((1-w) k^p Q) - log(w P). The map
// x -> -x swaps a and b, so g is odd.

struct SlopeInfo {
    double log_ratio;  ///< g(x)
    double log_slope;  ///< d log V / dx
};

namespace detail {

inline double log_add_exp(double a, double b) {
    const double hi = std::max(a, b);
    if (hi == -infinity) return -infinity;
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

/// Finite p quadrature for P and Q at x < 0, in phi = pi/2 - theta so the
/// boundary layer of width e^x near theta = pi/2 sits at the origin.
inline std::pair<double, double> landscape_pq(double p, double x) {
    auto log_a = [&](double phi) {
        return log_add_exp(p * std::log(std::sin(phi)), p * x + p * std::log(std::cos(phi)));
    };
    auto fp = [&](double phi) {
        if (phi <= 0.0) return 0.0;
        return std::exp((1.0 / p - 1.0) * log_a(phi) + p * std::log(std::sin(phi)));
    };
    auto fq = [&](double phi) {
        return std::exp((1.0 / p - 1.0) * log_a(phi) + p * std::log(std::cos(phi)));
    };
    std::vector<double> bp;
    for (double s = std::exp(x) * 1e-2; s < std::numbers::pi / 2.0; s *= 10.0) bp.push_back(s);
    const double half_pi = std::numbers::pi / 2.0;
    const double P = integrate(fp, 0.0, half_pi, 0.0, 1e-13, bp, 20000).value;
    const double Q = integrate(fq, 0.0, half_pi, 0.0, 1e-13, bp, 20000).value;
    return {P, Q};
}

/// Largest |x| the slope can be evaluated at for this p.
inline double landscape_reach(double p) { return (std::isinf(p) || p == 2.0) ? 1e6 : 30.0; }

}  // namespace detail

/// g(x) and d log V/dx on the n = 2 arc.
inline SlopeInfo landscape_slope_n2(double p, double q, double x) {
    if (!(p > 1.0)) throw crossnorm::domain_error("landscape_slope_n2: p must be > 1 or inf");
    if (!(q > 0.0) || std::isinf(q)) throw crossnorm::domain_error("landscape_slope_n2: q must be finite and > 0");
    if (!std::isfinite(x)) throw crossnorm::domain_error("landscape_slope_n2: x must be finite");
    if (x == 0.0) return {0.0, 0.0};
    if (x > 0.0) {
        const SlopeInfo m = landscape_slope_n2(p, q, -x);
        return {-m.log_ratio, -m.log_slope};
    }
    if (-x > detail::landscape_reach(p) * (1.0 + 1e-12)) {
        throw crossnorm::capability_error("landscape_slope_n2: x beyond the reach of the slope evaluation");
    }
    const double log_a = -std::log1p(std::exp(q * x)) / q;
    const double log_w = q * (x + log_a);
    const double w = std::exp(log_w);

    double P;
    double Q;
    double expo;
    if (std::isinf(p)) {
        P = 1.0;
        Q = 1.0;
        expo = 2.0;
    } else if (p == 2.0 && x < -20.0) {
        // Complete elliptic integrals at k'^2 = e^{2x}:
        //   P = (E - k'^2 K) / k^2,  Q = (K - E) / k^2.
        const double kp2 = std::exp(2.0 * x);
        const double lam = 2.0 * std::numbers::ln2 - x;
        const double K = lam + 0.25 * kp2 * (lam - 1.0);
        const double E = 1.0 + 0.5 * kp2 * (lam - 0.5);
        const double k2 = -std::expm1(2.0 * x);
        P = (E - kp2 * K) / k2;
        Q = (K - E) / k2;
        expo = 2.0;
    } else {
        std::tie(P, Q) = detail::landscape_pq(p, x);
        expo = p;
    }
    SlopeInfo out;
    out.log_ratio = std::log1p(-w) + expo * x + std::log(Q) - log_w - std::log(P);
    const double kp = std::exp(expo * x);
    out.log_slope = (-w * P + (1.0 - w) * kp * Q) / (P + kp * Q);
    return out;
}

/// Point of the arc at x and its expected l_p norm.
inline std::pair<double, double> arc_point(double q, double x) {
    if (std::isinf(x)) return x < 0.0 ? std::pair{1.0, 0.0} : std::pair{0.0, 1.0};
    if (x > 0.0) {
        const auto m = arc_point(q, -x);
        return {m.second, m.first};
    }
    const double a = std::exp(-std::log1p(std::exp(q * x)) / q);
    return {a, a * std::exp(x)};
}

inline double arc_value(double p, double q, double x, const QuadratureConfig& cfg = {}) {
    const auto [a, b] = arc_point(q, x);
    if (std::isinf(p)) return sqrt_2_over_pi * std::hypot(a, b);
    return sqrt_pi_over_2 * detail::angular_mean(a, b, p, cfg).value;
}

enum class CriticalType { minimum, maximum, saddle };

inline const char* to_string(CriticalType t) {
    switch (t) {
    case CriticalType::minimum: return "min";
    case CriticalType::maximum: return "max";
    case CriticalType::saddle: return "saddle";
    }
    return "unknown";
}

struct CriticalPoint {
    double x;  ///< log(b/a); +-inf at the endpoints
    double a;
    double b;
    CriticalType type;
    double value;
    double residual;       ///< |dV/dx| at the point (0 at endpoints)
    std::string location;  ///< "endpoint", "interior" or "uniform"
};

struct LandscapeRow {
    double p = 2.0;
    double q = 1.0;
    std::size_t grid_size = 0;
    double reach = 0.0;  ///< scan covers |x| <= reach
    bool constant = false;
    std::vector<CriticalPoint> points;  ///< ordered from (1, 0) to (0, 1)

    std::size_t count(CriticalType t) const {
        return static_cast<std::size_t>(
            std::count_if(points.begin(), points.end(), [t](const CriticalPoint& c) { return c.type == t; }));
    }
};

/// Locates and classifies the critical points of V on the n = 2 arc from sign
/// changes of the tangential slope on a log-spaced grid, refined by bisection.
inline LandscapeRow scan_landscape_n2(double p, double q, std::size_t grid_size = 256,
                                      const QuadratureConfig& cfg = {}) {
    if (grid_size < 64) throw crossnorm::domain_error("scan_landscape_n2: grid_size must be >= 64");
    LandscapeRow row;
    row.p = p;
    row.q = q;
    row.grid_size = grid_size;
    row.reach = detail::landscape_reach(p);
    constexpr double h = 1e-5;

    // x_i = -(e^{y_i} - 1) with y uniform, from -reach up to just below 0.
    std::vector<double> xs;
    const double ymax = std::log1p(row.reach);
    for (std::size_t i = 0; i + 1 < grid_size; ++i) {
        const double y = ymax * (1.0 - static_cast<double>(i) / static_cast<double>(grid_size - 1));
        const double x = -std::expm1(y);
        if (x < -h) xs.push_back(x);
    }
    xs.push_back(-h);
    std::vector<double> gs;
    gs.reserve(xs.size());
    bool flat = true;
    for (double x : xs) {
        gs.push_back(landscape_slope_n2(p, q, x).log_ratio);
        flat = flat && std::fabs(gs.back()) <= 1e-12;
    }
    if (flat) {
        row.constant = true;
        return row;
    }
    auto classify = [](double left, double right) {
        return left < 0.0 && right > 0.0 ? CriticalType::minimum : CriticalType::maximum;
    };
    auto make_point = [&](double x, CriticalType t, std::string loc) {
        const auto [a, b] = arc_point(q, x);
        double residual = 0.0;
        if (std::isfinite(x) && x != 0.0) {
            const double v = arc_value(p, q, x, cfg);
            residual = std::fabs(v * landscape_slope_n2(p, q, x).log_slope);
        }
        return CriticalPoint{x, a, b, t, arc_value(p, q, x, cfg), residual, std::move(loc)};
    };

    std::vector<CriticalPoint> left;
    left.push_back(make_point(-infinity, gs.front() < 0.0 ? CriticalType::maximum : CriticalType::minimum,
                              "endpoint"));
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        if ((gs[i] < 0.0) == (gs[i + 1] < 0.0) || gs[i] == 0.0) continue;
        double lo = xs[i];
        double hi = xs[i + 1];
        const bool lo_negative = gs[i] < 0.0;
        while (hi - lo > 1e-12 * std::max(1.0, std::fabs(lo))) {
            const double mid = 0.5 * (lo + hi);
            if ((landscape_slope_n2(p, q, mid).log_ratio < 0.0) == lo_negative) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        left.push_back(make_point(0.5 * (lo + hi), classify(gs[i], gs[i + 1]), "interior"));
    }
    const CriticalType uniform = gs.back() < 0.0 ? CriticalType::minimum : CriticalType::maximum;

    row.points = left;
    row.points.push_back(make_point(0.0, uniform, "uniform"));
    for (auto it = left.rbegin(); it != left.rend(); ++it) {
        CriticalPoint m = *it;
        m.x = -m.x;
        std::swap(m.a, m.b);
        row.points.push_back(m);
    }
    return row;
}

struct Threshold {
    double value = 0.0;
    double lo = 0.0;  ///< bracket
    double hi = 0.0;
};

namespace detail {

inline Threshold bisect_threshold(const std::function<double(double)>& f, double lo, double hi, double tol,
                                  const char* what) {
    double flo = f(lo);
    const double fhi = f(hi);
    if (!(flo < 0.0) == !(fhi < 0.0)) {
        throw crossnorm::detection_error(std::string(what) + ": no sign change in [" + std::to_string(lo) + ", " +
                                         std::to_string(hi) + "]");
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return {0.5 * (lo + hi), lo, hi};
}

}  // namespace detail

struct PhaseThresholds {
    Threshold q_L;  ///< uniform point turns from min to max
    Threshold q_M;  ///< V(uniform) = V((1, 0))
    Threshold q_U;  ///< (1, 0) turns from max to min
};

/// q at which the uniform point changes type, searched in [1, 3].
inline Threshold detect_q_L(double p, double tol = 1e-10) {
    return detail::bisect_threshold([p](double q) { return landscape_slope_n2(p, q, -1e-5).log_ratio; }, 1.0, 3.0,
                                    tol, "detect_q_L");
}

inline PhaseThresholds phase_thresholds_n2_p2(const QuadratureConfig& cfg = {}, double tol = 1e-10) {
    PhaseThresholds t;
    t.q_L = detect_q_L(2.0, tol);
    t.q_M = detail::bisect_threshold(
        [&](double q) { return arc_value(2.0, q, 0.0, cfg) - arc_value(2.0, q, -infinity, cfg); }, 1.0, 3.0, tol,
        "q_M");
    const double far = -detail::landscape_reach(2.0);
    t.q_U = detail::bisect_threshold([far](double q) { return landscape_slope_n2(2.0, q, far).log_ratio; }, 1.0,
                                     3.0, tol, "q_U");
    return t;
}

struct PhaseReport {
    double p = 2.0;
    std::vector<double> q_values;
    std::vector<LandscapeRow> rows;
    std::optional<PhaseThresholds> thresholds;  ///< p = 2 only
    std::optional<Threshold> q_L;               ///< detected for any p; reported, not asserted
    std::string note;
};

inline PhaseReport phase_report(double p, std::span<const double> q_grid, std::size_t grid_size = 256,
                                const QuadratureConfig& cfg = {}) {
    PhaseReport rep;
    rep.p = p;
    rep.q_values.assign(q_grid.begin(), q_grid.end());
    for (double q : q_grid) rep.rows.push_back(scan_landscape_n2(p, q, grid_size, cfg));
    if (p == 2.0) {
        rep.thresholds = phase_thresholds_n2_p2(cfg);
        rep.q_L = rep.thresholds->q_L;
    } else {
        try {
            rep.q_L = detect_q_L(p);
        } catch (const crossnorm::detection_error& e) {
            rep.note = e.what();
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// p = inf, q > 2 exploration (reported only)

struct ExploratoryRow {
    double q;
    std::vector<double> candidate_values;  ///< E at u_q^k, k = 1..n
    std::size_t candidate_argmin;          ///< k
    std::size_t candidate_argmax;          ///< k
    std::optional<OptimizationResult> minimum;
    std::optional<OptimizationResult> maximum;
    std::optional<bool> min_equal_nonzero;
    std::optional<bool> max_equal_nonzero;
    std::string note;
};

namespace detail {

inline bool equal_nonzero(const std::vector<double>& u) {
    double lo = infinity;
    double hi = 0.0;
    for (double v : u) {
        if (v <= 1e-6) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi - lo <= 1e-3 * hi;
}

}  // namespace detail

inline std::vector<ExploratoryRow> exploratory_scan_pinf_qgt2(std::size_t n, std::span<const double> q_grid,
                                                              std::size_t starts = 4, std::uint64_t seed = 0,
                                                              const QuadratureConfig& cfg = {}) {
    if (n == 0) throw crossnorm::domain_error("exploratory_scan_pinf_qgt2: n must be >= 1");
    std::vector<ExploratoryRow> rows;
    for (double q : q_grid) {
        if (!(q > 2.0)) throw crossnorm::domain_error("exploratory_scan_pinf_qgt2: q must be > 2");
        ExploratoryRow row{q, {}, 1, 1, std::nullopt, std::nullopt, std::nullopt, std::nullopt, {}};
        for (std::size_t k = 1; k <= n; ++k) {
            row.candidate_values.push_back(expected_supnorm(candidate_uqk(n, k, q), cfg).value);
        }
        const auto& cv = row.candidate_values;
        row.candidate_argmin = 1 + static_cast<std::size_t>(std::min_element(cv.begin(), cv.end()) - cv.begin());
        row.candidate_argmax = 1 + static_cast<std::size_t>(std::max_element(cv.begin(), cv.end()) - cv.begin());
        if (std::isfinite(q)) {
            OptimizerOptions opts;
            opts.starts = starts;
            opts.seed = seed;
            for (Mode mode : {Mode::minimize, Mode::maximize}) {
                try {
                    auto res = optimize_on_lq_sphere({infinity, q, n}, mode, opts);
                    const bool eq = detail::equal_nonzero(res.point.entries());
                    if (mode == Mode::minimize) {
                        row.min_equal_nonzero = eq;
                        row.minimum = std::move(res);
                    } else {
                        row.max_equal_nonzero = eq;
                        row.maximum = std::move(res);
                    }
                } catch (const crossnorm::convergence_error& e) {
                    row.note += std::string(to_string(mode)) + ": " + e.what() + "; ";
                }
            }
        } else {
            row.note = "q = inf: candidates only";
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace crossnorm
