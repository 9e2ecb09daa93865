#pragma once

// Gaussian error-function family in double precision.
//
// phi(a)   = erf(a / sqrt 2)   = P(|xi| <= a)   for standard normal xi
// phi_c(a) = erfc(a / sqrt 2)  = P(|xi| > a)
//
// erf/erfc use W. J. Cody's rational Chebyshev split (small argument erf,
// mid-range and asymptotic erfc), accurate to double rounding. The inverses
// start from Acklam's rational quantile and polish with Halley steps against
// the forward functions, so phi(phi_inv(p)) == p to a few ulps.

#include <cmath>
#include <limits>
#include <numbers>

#include "crossnorm/errors.hpp"

namespace crossnorm {

inline constexpr double sqrt_2_over_pi = 0.79788456080286535588;  // sqrt(2/pi)
inline constexpr double sqrt_pi_over_2 = 1.25331413731550025121;  // sqrt(pi/2)

namespace detail {

enum class erf_kind { erf, erfc, erfcx };

// Cody, Math. Comp. 23 (1969) 631-638; netlib specfun CALERF.
inline double calerf(double x, erf_kind kind) {
    static constexpr double a[5] = {3.1611237438705656, 113.864154151050156, 377.485237685302021,
                                    3209.37758913846947, 0.185777706184603153};
    static constexpr double b[4] = {23.6012909523441209, 244.024637934444173, 1282.61652607737228,
                                    2844.23683343917062};
    static constexpr double c[9] = {0.564188496988670089, 8.88314979438837594, 66.1191906371416295,
                                    298.635138197400131,  881.95222124176909,  1712.04761263407058,
                                    2051.07837782607147,  1230.33935479799725, 2.15311535474403846e-8};
    static constexpr double d[8] = {15.7449261107098347, 117.693950891312499, 537.181101862009858,
                                    1621.38957456669019, 3290.79923573345963, 4362.61909014324716,
                                    3439.36767414372164, 1230.33935480374942};
    static constexpr double p[6] = {0.305326634961232344, 0.360344899949804439,
                                    0.125781726111229246, 0.0160837851487422766,
                                    6.58749161529837803e-4, 0.0163153871373020978};
    static constexpr double q[5] = {2.56852019228982242, 1.87295284992346047, 0.527905102951428412,
                                    0.0605183413124413191, 0.00233520497626869185};
    constexpr double sqrpi = 0.56418958354775628695;
    constexpr double thresh = 0.46875;
    constexpr double xsmall = 1.11e-16;
    constexpr double xbig = 26.543;
    constexpr double xhuge = 6.71e7;
    constexpr double xmax = 2.53e307;
    constexpr double xneg = -26.628;

    // exp(-y*y) with the square split to keep the exponent exact.
    auto gauss_factor = [](double y) {
        const double ysq = std::trunc(y * 16.0) / 16.0;
        const double del = (y - ysq) * (y + ysq);
        return std::exp(-ysq * ysq) * std::exp(-del);
    };

    const double y = std::fabs(x);
    double result;
    if (y <= thresh) {
        const double ysq = y > xsmall ? y * y : 0.0;
        double xnum = a[4] * ysq;
        double xden = ysq;
        for (int i = 0; i < 3; ++i) {
            xnum = (xnum + a[i]) * ysq;
            xden = (xden + b[i]) * ysq;
        }
        result = x * (xnum + a[3]) / (xden + b[3]);
        if (kind != erf_kind::erf) result = 1.0 - result;
        if (kind == erf_kind::erfcx) result *= std::exp(ysq);
        return result;
    }
    if (y <= 4.0) {
        double xnum = c[8] * y;
        double xden = y;
        for (int i = 0; i < 7; ++i) {
            xnum = (xnum + c[i]) * y;
            xden = (xden + d[i]) * y;
        }
        result = (xnum + c[7]) / (xden + d[7]);
        if (kind != erf_kind::erfcx) result *= gauss_factor(y);
    } else {
        result = 0.0;
        bool done = false;
        if (y >= xbig) {
            if (kind != erf_kind::erfcx || y >= xmax) {
                done = true;
            } else if (y >= xhuge) {
                result = sqrpi / y;
                done = true;
            }
        }
        if (!done) {
            const double ysq = 1.0 / (y * y);
            double xnum = p[5] * ysq;
            double xden = ysq;
            for (int i = 0; i < 4; ++i) {
                xnum = (xnum + p[i]) * ysq;
                xden = (xden + q[i]) * ysq;
            }
            result = ysq * (xnum + p[4]) / (xden + q[4]);
            result = (sqrpi - result) / y;
            if (kind != erf_kind::erfcx) result *= gauss_factor(y);
        }
    }

    switch (kind) {
    case erf_kind::erf:
        result = (0.5 - result) + 0.5;
        return x < 0.0 ? -result : result;
    case erf_kind::erfc:
        return x < 0.0 ? 2.0 - result : result;
    case erf_kind::erfcx:
        if (x < 0.0) {
            if (x < xneg) return std::numeric_limits<double>::max();
            const double ysq = std::trunc(x * 16.0) / 16.0;
            const double del = (x - ysq) * (x + ysq);
            const double e = std::exp(ysq * ysq) * std::exp(del);
            return (e + e) - result;
        }
        return result;
    }
    return result;
}

inline void require_nonnegative(double a, const char* who) {
    if (std::isnan(a) || a < 0.0) {
        throw crossnorm::domain_error(std::string(who) + ": argument must be >= 0");
    }
}

// Acklam's rational approximation to the standard normal quantile, relative
// error below 1.2e-9. `lower` is the lower-tail probability, `centered` the
// same value minus one half (passed separately so callers can supply it
// without cancellation).
inline double acklam_quantile(double lower, double centered) {
    static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                    -2.759285104469687e+02, 1.383577518672690e+02,
                                    -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                    -1.556989798598866e+02, 6.680131188771972e+01,
                                    -1.328068155288572e+01};
    static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                    -2.400758277161838e+00, -2.549732539343734e+00,
                                    4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                    2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    if (lower < p_low) {
        const double t = std::sqrt(-2.0 * std::log(lower));
        return (((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]) /
               ((((d[0] * t + d[1]) * t + d[2]) * t + d[3]) * t + 1.0);
    }
    const double qv = centered;
    const double r = qv * qv;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * qv /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace detail

/// erf(a / sqrt 2) for a >= 0; phi(+inf) == 1 exactly.
inline double phi(double a) {
    detail::require_nonnegative(a, "phi");
    if (std::isinf(a)) return 1.0;
    return detail::calerf(a * std::numbers::sqrt2 / 2.0, detail::erf_kind::erf);
}

/// 1 - phi(a), evaluated without cancellation in the tail.
inline double phi_c(double a) {
    detail::require_nonnegative(a, "phi_c");
    if (std::isinf(a)) return 0.0;
    return detail::calerf(a * std::numbers::sqrt2 / 2.0, detail::erf_kind::erfc);
}

/// exp(a^2/2) * phi_c(a); finite for every a >= 0.
inline double phi_c_scaled(double a) {
    detail::require_nonnegative(a, "phi_c_scaled");
    return detail::calerf(a * std::numbers::sqrt2 / 2.0, detail::erf_kind::erfcx);
}

namespace detail {

// Solves phi(z) = p where the caller supplies both p and q = 1 - p; whichever
// is smaller must be exact, the other is only used for the initial guess.
inline double solve_phi(double p, double q) {
    if (q == 0.0) return std::numeric_limits<double>::infinity();
    if (p == 0.0) return 0.0;
    // Upper quantile of the one-sided normal: 1 - Phi(z) = q / 2.
    const double upper = 0.5 * q;
    double z = upper < 0.5 ? -acklam_quantile(upper, -0.5 * p) : 0.0;
    const bool use_tail = q < 0.5;
    for (int iter = 0; iter < 4; ++iter) {
        // e = Phi(z) - target, written through whichever side is exact.
        const double e = use_tail ? 0.5 * (q - phi_c(z)) : 0.5 * (phi(z) - p);
        const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * z * z);
        const double step = u / (1.0 + 0.5 * z * u);
        z -= step;
        if (z < 0.0) z = 0.0;
        if (std::fabs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * std::fabs(z)) break;
    }
    return z;
}

}  // namespace detail

/// Inverse of phi on [0, 1).
inline double phi_inv(double p) {
    if (!(p >= 0.0 && p < 1.0)) {
        throw crossnorm::domain_error("phi_inv: probability must lie in [0, 1)");
    }
    return detail::solve_phi(p, 1.0 - p);
}

/// Inverse of phi_c on (0, 1]: the radius whose two-sided tail mass is q.
/// phi_c_inv(0) is +inf.
inline double phi_c_inv(double q) {
    if (!(q >= 0.0 && q <= 1.0)) {
        throw crossnorm::domain_error("phi_c_inv: tail mass must lie in [0, 1]");
    }
    return detail::solve_phi(1.0 - q, q);
}

/// Standard normal quantile Phi^{-1}(p), p in (0, 1). Wichura's AS241
/// (PPND16), about 1e-16 relative; used where throughput matters.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw crossnorm::domain_error("normal_quantile: probability must lie in (0, 1)");
    }
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                     6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                   1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
                 1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
               (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                     3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                   5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
                 4.2313330701600911252e+1) * r + 1.0);
    }
    double r = std::sqrt(-std::log(q < 0.0 ? p : 1.0 - p));
    double z;
    if (r <= 5.0) {
        r -= 1.6;
        z = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
              4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
              2.05319162663775882187e+0) * r + 1.0);
    } else {
        r -= 5.0;
        z = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
              5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -z : z;
}

/// exp(x^2/2) * int_0^x exp(-t^2/2) dt.
///
/// Power series sum_k x^(2k+1) / (2k+1)!! below x = 2, closed form above.
inline double gauss_scaled_integral(double x) {
    detail::require_nonnegative(x, "gauss_scaled_integral");
    if (x < 2.0) {
        const double x2 = x * x;
        double term = x;
        double sum = x;
        for (int k = 1; k < 200; ++k) {
            term *= x2 / (2.0 * k + 1.0);
            sum += term;
            if (term < 1e-17 * sum) break;
        }
        return sum;
    }
    return sqrt_pi_over_2 * std::exp(0.5 * x * x) * phi(x);
}

/// Abscissa and exponent at which the monotone auxiliary functions are evaluated.
struct EvalPoint {
    double x;
    double q;

    void validate() const {
        if (!(x >= 0.0) || !std::isfinite(x)) {
            throw crossnorm::domain_error("EvalPoint: x must be finite and >= 0");
        }
        if (!(q > 0.0 && q <= 2.0)) {
            throw crossnorm::domain_error("EvalPoint: q must lie in (0, 2]");
        }
    }
};

/// F(x) = exp(x^2/2) x^(1-q) int_0^x exp(-t^2/2) dt, strictly increasing on
/// x > 0 for every 0 < q <= 2.
inline double lemma1_F(const EvalPoint& pt) {
    pt.validate();
    if (pt.x <= 0.0) throw crossnorm::domain_error("lemma1_F: x must be > 0");
    // x^(2-q) * (scaled integral / x) avoids 0 * inf near the origin.
    return std::pow(pt.x, 2.0 - pt.q) * (gauss_scaled_integral(pt.x) / pt.x);
}

/// f(x) = x + (x^2 - q + 1) exp(x^2/2) int_0^x exp(-t^2/2) dt, so that
/// F'(x) = f(x) / x^q.
///
/// For x < 2 the series (2-q) x + sum_{k>=1} (2k+2-q) x^(2k+1) / (2k+1)!!
/// is used; every term is nonnegative when q <= 2.
inline double lemma1_f(const EvalPoint& pt) {
    pt.validate();
    const double x = pt.x;
    if (x < 2.0) {
        const double x2 = x * x;
        double power = x;   // x^(2k+1) / (2k+1)!!
        double sum = (2.0 - pt.q) * x;
        for (int k = 1; k < 200; ++k) {
            power *= x2 / (2.0 * k + 1.0);
            const double term = (2.0 * k + 2.0 - pt.q) * power;
            sum += term;
            if (power == 0.0 || term < 1e-17 * std::fabs(sum)) break;
        }
        return sum;
    }
    return x + (x * x - pt.q + 1.0) * gauss_scaled_integral(x);
}

}  // namespace crossnorm
