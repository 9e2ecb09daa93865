#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "crossnorm/supnorm_expectation.hpp"
#include "oracles.hpp"

using namespace crossnorm;
using Catch::Approx;

namespace {

double E(std::vector<double> u) { return expected_supnorm(WeightVector(std::move(u))).value; }

}  // namespace

TEST_CASE("WeightVector validation", "[supnorm][weights]") {
    CHECK_THROWS_AS(WeightVector(std::vector<double>{}), crossnorm::domain_error);
    CHECK_THROWS_AS(WeightVector({0.0, 0.0}), crossnorm::domain_error);
    CHECK_THROWS_AS(WeightVector({1.0, std::nan("")}), crossnorm::domain_error);
    CHECK_THROWS_AS(WeightVector({1.0, 1.0}, 2.0), crossnorm::domain_error);
    CHECK_NOTHROW(WeightVector({0.6, -0.8}, 2.0));
    const auto w = WeightVector::normalized({3.0, 4.0}, 2.0);
    CHECK(w[0] == Approx(0.6));
    CHECK(w[1] == Approx(0.8));
    CHECK(WeightVector({-2.0, 0.0, 1.0}).positive_count() == 2);
    CHECK(WeightVector({0.1, 0.5, 0.3}).canonical().entries() == std::vector<double>{0.5, 0.3, 0.1});
}

TEST_CASE("one-dimensional expectation", "[supnorm]") {
    CHECK(E({1.0}) == Approx(std::sqrt(2.0 / std::numbers::pi)).margin(1e-9));
    CHECK(E({0.0, 1.0, 0.0}) == Approx(std::sqrt(2.0 / std::numbers::pi)).margin(1e-9));
}

TEST_CASE("two-dimensional closed form", "[supnorm]") {
    // max(|a x|, |b y|) has mean sqrt(2/pi) * sqrt(a^2 + b^2).
    for (double angle = 0.05; angle < 1.55; angle += 0.1) {
        const double a = std::cos(angle);
        const double b = std::sin(angle);
        CHECK(E({a, b}) == Approx(sqrt_2_over_pi).margin(1e-11));
    }
    CHECK(E({3.0, 4.0}) == Approx(5.0 * sqrt_2_over_pi).epsilon(1e-11));
}

TEST_CASE("error bound and independent quadrature", "[supnorm]") {
    const std::vector<double> u{0.8, 0.5, std::sqrt(0.11)};
    const auto r = expected_supnorm(WeightVector(u));
    CHECK(r.method == Method::quadrature);
    CHECK(r.error_bound <= 1e-9);
    const double ref = oracle::integrate_to_infinity([&](double t) {
        double prod = 1.0;
        for (double s : u) prod *= oracle::phi_reference(t / s);
        return 1.0 - prod;
    }, 0.0);
    CHECK(r.value == Approx(ref).margin(1e-10));
}

TEST_CASE("E_3 against sampling", "[supnorm][mc]") {
    const double e3 = ek(3);
    CHECK(e3 == Approx(0.7657897502).margin(1e-9));
    const double s3 = std::sqrt(1.0 / 3.0);
    const double u[] = {s3, s3, s3};
    const auto mc = oracle::supnorm_by_sampling(u, 400000, 7);
    CHECK(std::fabs(mc.mean - e3) <= 4.0 * mc.std_error);
}

TEST_CASE("homogeneity and permutation invariance", "[supnorm][property]") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<double> u(2 + trial % 7);
        for (auto& v : u) v = unif(gen);
        const double base = E(u);
        for (double c : {0.37, 2.5, 1e3}) {
            std::vector<double> scaled = u;
            for (auto& v : scaled) v *= c;
            REQUIRE(E(scaled) == Approx(c * base).epsilon(1e-10));
        }
        std::vector<double> perm = u;
        std::shuffle(perm.begin(), perm.end(), gen);
        REQUIRE(E(perm) == base);
        REQUIRE(base <= lq_norm(u, 2.0) * sqrt_2_over_pi * (1.0 + 1e-12) + 1e-300);
        REQUIRE(base >= *std::max_element(u.begin(), u.end()) * sqrt_2_over_pi * (1.0 - 1e-12));
    }
}

TEST_CASE("E_k tables", "[supnorm][ek]") {
    const auto table = ek_table(200);
    CHECK(table.rows.size() == 200);
    CHECK(table.rows[0].value == Approx(sqrt_2_over_pi).margin(1e-9));
    CHECK(table.rows[1].value == Approx(sqrt_2_over_pi).margin(1e-9));
    CHECK(table.head_gap <= 1e-9);
    CHECK(table.strictly_decreasing);
    CHECK(table.min_step > 0.0);
    CHECK(std::isnan(table.rows[0].asymptotic_ratio));
    CHECK(table.rows[199].asymptotic_ratio == Approx(table.rows[199].value *
                                                      std::sqrt(400.0 / std::log(200.0))));

    SECTION("large k via grouped weights") {
        const double e = ek(10000);
        CHECK(e * std::sqrt(2.0 * std::numbers::pi * 10000.0 / std::log(10000.0)) == Approx(3.32).margin(0.01));
    }
    SECTION("E_{k,q} for q < 2 decreases from k = 1") {
        for (double q : {0.5, 1.0, 1.5}) {
            const auto t = ekq_table(60, q);
            CHECK(t.strictly_decreasing);
            CHECK(t.rows[0].value == Approx(sqrt_2_over_pi).margin(1e-9));
        }
        CHECK(ekq(7, 2.0) == Approx(ek(7)).epsilon(1e-14));
        CHECK_THROWS_AS(ekq(3, 2.5), crossnorm::domain_error);
    }
}

TEST_CASE("median of the sup-norm", "[supnorm][median]") {
    CHECK(median_supnorm(1) == Approx(0.6744897501960817).margin(1e-12));
    double prev = 0.0;
    for (std::size_t n = 1; n <= 100000; n = n * 3 + 1) {
        const double mu = median_supnorm(n);
        REQUIRE(mu > prev);
        REQUIRE(std::pow(phi(mu), static_cast<double>(n)) == Approx(0.5).epsilon(1e-9));
        prev = mu;
    }
    const double ratio = median_supnorm(10000) / std::sqrt(2.0 * std::log(10000.0));
    CHECK(ratio >= 0.8);
    CHECK(ratio <= 1.05);
    CHECK_THROWS_AS(median_supnorm(0), crossnorm::domain_error);
}

TEST_CASE("partial derivatives agree with finite differences", "[supnorm][derivative]") {
    const std::vector<std::vector<double>> cases{
        {0.8, 0.5, std::sqrt(0.11)}, {1.0, 0.2}, {0.3, 0.3, 0.3, 0.9}, {2.0, 0.01, 0.5}};
    for (const auto& u : cases) {
        double euler = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double analytic = partial_derivative(WeightVector(u), i);
            const double fd = oracle::richardson_derivative([&](double s) {
                std::vector<double> v = u;
                v[i] = s;
                return E(v);
            }, u[i], 1e-3 * u[i]);
            CHECK(analytic == Approx(fd).margin(1e-6));
            euler += u[i] * analytic;
        }
        CHECK(euler == Approx(E(u)).epsilon(1e-10));
    }
    CHECK(partial_derivative(WeightVector({0.0, 1.0}), 1) == Approx(sqrt_2_over_pi));
    CHECK_THROWS_AS(partial_derivative(WeightVector({0.0, 1.0}), 0), crossnorm::domain_error);
}

TEST_CASE("critical point residual", "[supnorm][residual]") {
    const WeightVector u({0.8, 0.5, std::sqrt(0.11)});
    const double r01 = critical_point_residual(u, 0, 1);
    CHECK(r01 == Approx(0.0408).margin(5e-4));
    CHECK(r01 > 0.0);
    CHECK(critical_point_residual(u, 1, 0) == Approx(-r01).margin(1e-14));
    const double direct = partial_derivative(u, 0) / u[0] - partial_derivative(u, 1) / u[1];
    CHECK(r01 == Approx(direct).margin(1e-9));

    CHECK(critical_point_residual(WeightVector({0.5, 0.5, 0.7}), 0, 1) == 0.0);
    CHECK(critical_point_residual(WeightVector({0.9, 0.3}), 0, 1) == 0.0);

    SECTION("sign follows the ordering of u_i and u_j") {
        std::mt19937_64 gen(5);
        std::uniform_real_distribution<double> unif(0.05, 1.0);
        for (int trial = 0; trial < 40; ++trial) {
            std::vector<double> v(3 + trial % 4);
            for (auto& x : v) x = unif(gen);
            const double r = critical_point_residual(WeightVector(v), 0, 1);
            REQUIRE((r > 0.0) == (v[0] > v[1]));
        }
    }
}

TEST_CASE("R(rho) family", "[supnorm][rrho]") {
    for (std::size_t n : {2u, 3u, 10u}) {
        const double rho_max = 1.0 / std::sqrt(static_cast<double>(n + 1));
        CHECK(r_rho(n, 0.0).value == Approx(ek(n)).epsilon(1e-11));
        CHECK(r_rho(n, rho_max).value == Approx(ek(n + 1)).epsilon(1e-11));
        double prev = r_rho(n, 0.0).value;
        for (int k = 1; k <= 20; ++k) {
            const double v = r_rho(n, rho_max * k / 20.0).value;
            REQUIRE(v < prev);
            prev = v;
        }
    }
    CHECK(r_rho(1, 0.3).detail.find("n=1") != std::string::npos);
    CHECK(r_rho(1, 0.3).value == Approx(sqrt_2_over_pi).margin(1e-10));
    CHECK_THROWS_AS(r_rho(3, 0.6), crossnorm::domain_error);
}

TEST_CASE("sign of the R' integrand", "[supnorm][rrho]") {
    const auto one = rder_integrand_sign(1, 0.5, 1.0);
    CHECK(one.integrand == 0.0);
    CHECK(one.sign == 0);
    for (std::size_t n : {2u, 5u, 50u}) {
        const double rho_max = 1.0 / std::sqrt(static_cast<double>(n + 1));
        for (double frac : {0.1, 0.5, 0.9}) {
            for (double t : {0.05, 0.3, 1.0, 2.0}) {
                REQUIRE(rder_integrand_sign(n, frac * rho_max, t).sign <= 0);
            }
        }
    }
    CHECK_THROWS_AS(rder_integrand_sign(2, 0.0, 1.0), crossnorm::domain_error);
}
