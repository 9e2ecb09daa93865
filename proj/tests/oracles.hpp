#pragma once

// Reference computations used only by the tests. Each one avoids the code
// path it is used to check: erf by series/continued fraction in long double,
// integrals by Boost's Gauss-Kronrod, expectations by brute-force sampling
// with the standard library generator.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace oracle {

/// erf(x) for x >= 0 via the Maclaurin series below 3 and the Lentz continued
/// fraction for erfc above.
inline long double erf_reference(long double x) {
    const long double pi = 3.141592653589793238462643383279502884L;
    if (x < 3.0L) {
        // erf(x) = 2/sqrt(pi) exp(-x^2) sum (2x^2)^k x / (1*3*...*(2k+1))
        long double term = x;
        long double sum = x;
        for (int k = 1; k < 400; ++k) {
            term *= 2.0L * x * x / (2.0L * k + 1.0L);
            sum += term;
            if (term < 1e-22L * sum) break;
        }
        return 2.0L / std::sqrt(pi) * std::exp(-x * x) * sum;
    }
    // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    const long double tiny = 1e-300L;
    long double f = x;
    long double c = x;
    long double d = 0.0L;
    for (int k = 1; k < 2000; ++k) {
        const long double a = 0.5L * k;
        d = x + a * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = x + a / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0L / d;
        const long double delta = c * d;
        f *= delta;
        if (std::fabs(delta - 1.0L) < 1e-21L) break;
    }
    return 1.0L - std::exp(-x * x) / std::sqrt(pi) / f;
}

/// phi(a) = erf(a / sqrt 2) through the reference erf.
inline double phi_reference(double a) {
    return static_cast<double>(erf_reference(static_cast<long double>(a) / std::sqrt(2.0L)));
}

/// Root of phi(z) = p by plain bisection on the reference phi.
inline double phi_inv_bisection(double p) {
    double lo = 0.0;
    double hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (phi_reference(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Boost adaptive Gauss-Kronrod (61 points) on [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-14) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, tol);
}

/// Boost exp-sinh over [a, inf).
inline double integrate_to_infinity(const std::function<double(double)>& f, double a) {
    boost::math::quadrature::exp_sinh<double> rule;
    return rule.integrate([&](double t) { return f(t); }, a, std::numeric_limits<double>::infinity());
}

struct SampleMean {
    double mean;
    double std_error;
};

/// E g(xi) for a standard normal vector of dimension n, brute-force sampled.
inline SampleMean sample_mean(std::size_t n, std::size_t samples, std::uint64_t seed,
                              const std::function<double(std::span<const double>)>& g) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal;
    std::vector<double> x(n);
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        for (auto& v : x) v = normal(gen);
        const double y = g(x);
        const double delta = y - mean;
        mean += delta / static_cast<double>(s + 1);
        m2 += delta * (y - mean);
    }
    const double var = m2 / static_cast<double>(samples - 1);
    return {mean, std::sqrt(var / static_cast<double>(samples))};
}

/// E||u . xi||_inf by sampling.
inline SampleMean supnorm_by_sampling(std::span<const double> u, std::size_t samples,
                                      std::uint64_t seed) {
    std::vector<double> w(u.begin(), u.end());
    return sample_mean(w.size(), samples, seed, [&](std::span<const double> x) {
        double m = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) m = std::max(m, std::fabs(w[i] * x[i]));
        return m;
    });
}

/// Central difference with one Richardson step: (4 D(h/2) - D(h)) / 3.
inline double richardson_derivative(const std::function<double(double)>& f, double x, double h) {
    auto central = [&](double step) { return (f(x + step) - f(x - step)) / (2.0 * step); };
    return (4.0 * central(0.5 * h) - central(h)) / 3.0;
}

}  // namespace oracle
