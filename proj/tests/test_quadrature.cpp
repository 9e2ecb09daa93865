#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "crossnorm/quadrature.hpp"
#include "oracles.hpp"

using crossnorm::integrate;
using Catch::Approx;

TEST_CASE("Gauss-Kronrod integrates polynomials exactly", "[quadrature]") {
    // The 15-point Kronrod rule is exact through degree 22.
    auto poly = [](double x) { return 3.0 * std::pow(x, 20) - x * x + 1.0; };
    const auto r = integrate(poly, -1.0, 2.0, 1e-12, 1e-13);
    const double exact = 3.0 * (std::pow(2.0, 21) + 1.0) / 21.0 - (8.0 + 1.0) / 3.0 + 3.0;
    CHECK(r.value == Approx(exact).epsilon(1e-14));
    CHECK(r.converged);
}

TEST_CASE("adaptive refinement handles peaked integrands", "[quadrature]") {
    const double w = 1e-4;
    auto lorentz = [w](double x) { return w / (x * x + w * w); };
    const auto r = integrate(lorentz, -1.0, 1.0, 1e-13, 1e-13);
    CHECK(r.value == Approx(2.0 * std::atan(1.0 / w)).epsilon(1e-12));
    CHECK(r.panels > 1);
}

TEST_CASE("breakpoints and agreement with Boost", "[quadrature]") {
    auto f = [](double x) { return std::fabs(x - 0.3) * std::exp(-x); };
    const double bp[] = {0.3};
    const auto split = integrate(f, 0.0, 4.0, 1e-14, 1e-14, bp);
    const double ref = oracle::integrate(f, 0.0, 0.3) + oracle::integrate(f, 0.3, 4.0);
    CHECK(split.value == Approx(ref).epsilon(1e-13));
}

TEST_CASE("degenerate interval", "[quadrature]") {
    const auto r = integrate([](double) { return 1.0; }, 1.0, 1.0, 1e-12, 1e-12);
    CHECK(r.value == 0.0);
    CHECK(r.converged);
}

TEST_CASE("reported error covers the true error", "[quadrature]") {
    for (double tol : {1e-4, 1e-8, 1e-12}) {
        auto f = [](double x) { return std::sin(30.0 * x) * std::exp(-x); };
        const auto r = integrate(f, 0.0, 3.0, tol, 0.0);
        const double exact = (30.0 - std::exp(-3.0) * (std::sin(90.0) + 30.0 * std::cos(90.0))) / 901.0;
        CHECK(std::fabs(r.value - exact) <= std::max(r.error, 1e-15));
    }
}
