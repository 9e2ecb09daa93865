#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "crossnorm/crosspoly_geometry.hpp"
#include "oracles.hpp"

using namespace crossnorm;
using Catch::Approx;

TEST_CASE("unit ball volumes", "[geometry][kappa]") {
    CHECK(kappa(0) == Approx(1.0).epsilon(1e-15));
    CHECK(kappa(1) == Approx(2.0).epsilon(1e-15));
    CHECK(kappa(2) == Approx(std::numbers::pi).epsilon(1e-15));
    CHECK(kappa(3) == Approx(4.0 * std::numbers::pi / 3.0).margin(1e-14));
    // kappa_n = 2 pi / n * kappa_{n-2}
    for (std::size_t n = 2; n < 60; ++n) {
        REQUIRE(kappa(n) == Approx(2.0 * std::numbers::pi / static_cast<double>(n) * kappa(n - 2)).epsilon(1e-13));
    }
}

TEST_CASE("V_1 of cross-polytopes", "[geometry][v1]") {
    CHECK(v1_crosspolytope(CrossPolytope({1.7})).value == Approx(3.4).epsilon(1e-10));
    const std::vector<double> l{0.3, 1.1, 0.7};
    const double base = v1_crosspolytope(CrossPolytope(l)).value;
    CHECK(v1_crosspolytope(CrossPolytope({0.6, 2.2, 1.4})).value == Approx(2.0 * base).epsilon(1e-11));

    const std::size_t n = 1000;
    const std::vector<double> flat(n, 1.0 / std::sqrt(static_cast<double>(n)));
    const double ratio = v1_crosspolytope(CrossPolytope(flat)).value /
                         (std::sqrt(std::numbers::pi) * std::sqrt(std::log(1000.0) / 1000.0));
    CHECK(ratio >= 0.5);
    CHECK(ratio <= 2.5);

    CHECK_THROWS_AS(CrossPolytope({1.0, 0.0}), crossnorm::domain_error);
    CHECK_THROWS_AS(CrossPolytope({}), crossnorm::domain_error);
}

TEST_CASE("V_1 against sampling of the support function", "[geometry][v1]") {
    // V_1 = sqrt(2 pi) E h(xi) and h_{C_n(l)}(y) = max |l_i y_i|.
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> unif(0.1, 2.0);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> l(2 + trial);
        for (auto& v : l) v = unif(gen);
        const auto mc = oracle::supnorm_by_sampling(l, 200000, 100 + trial);
        const double v1 = v1_crosspolytope(CrossPolytope(l)).value;
        CHECK(std::fabs(v1 - std::sqrt(2.0 * std::numbers::pi) * mc.mean) <=
              4.0 * std::sqrt(2.0 * std::numbers::pi) * mc.std_error);
    }
}

TEST_CASE("mean width lower bound", "[geometry][bound]") {
    const auto two = mean_width_lower_bound(RadiiProfile({1.0, 1.0}));
    const double e2 = oracle::integrate_to_infinity([](double t) {
        const double f = oracle::phi_reference(t);
        return 1.0 - f * f;
    }, 0.0) / std::sqrt(2.0);
    CHECK(two.e_n == Approx(e2).epsilon(1e-10));
    CHECK(two.bound_exact == Approx(std::sqrt(2.0 * std::numbers::pi) * e2 * std::sqrt(2.0)).epsilon(1e-10));
    REQUIRE(two.bound_corollary.has_value());
    CHECK(two.bound_exact > *two.bound_corollary);

    const auto simplex = mean_width_lower_bound(RadiiProfile({1.0, 0.5, 1.0 / 3.0}));
    CHECK(simplex.bound_exact >= *simplex.bound_corollary);
    CHECK(simplex.v1_cross_polytope >= simplex.bound_exact);

    const auto scaled = mean_width_lower_bound(RadiiProfile({2.5, 1.25, 2.5 / 3.0}));
    CHECK(scaled.bound_exact == Approx(2.5 * simplex.bound_exact).epsilon(1e-12));
    CHECK(*scaled.bound_corollary == Approx(2.5 * *simplex.bound_corollary).epsilon(1e-12));

    const auto one = mean_width_lower_bound(RadiiProfile({0.4}));
    CHECK_FALSE(one.corollary_defined);
    CHECK_FALSE(one.bound_corollary.has_value());
    CHECK(one.bound_exact == Approx(0.8).epsilon(1e-10));

    CHECK_THROWS_AS(RadiiProfile({0.5, 1.0}), crossnorm::domain_error);
    CHECK_NOTHROW(RadiiProfile({0.5, 1.0}, true));

    SECTION("monotone in each radius") {
        std::vector<double> r{1.0, 0.8, 0.5, 0.2};
        const double base = mean_width_lower_bound(RadiiProfile(r)).bound_exact;
        for (std::size_t i = 0; i < r.size(); ++i) {
            auto bumped = r;
            bumped[i] *= 0.9;
            REQUIRE(mean_width_lower_bound(RadiiProfile(bumped, true)).bound_exact < base);
        }
    }
}

TEST_CASE("constant table", "[geometry][constant]") {
    const std::size_t ns[] = {2, 3, 10, 100, 1000};
    const auto t = constant_c_table(ns);
    CHECK(t.rows[0].c_exact == Approx(2.0 * std::sqrt(2.0 / std::log(2.0))).epsilon(1e-9));
    CHECK(t.below_constant.empty());
    CHECK(t.min_c >= 1.74);
    CHECK(t.largest_n == 1000);
    CHECK(t.c_at_largest_n == t.rows.back().c_exact);
    CHECK(t.argmin == 10);
    for (const auto& r : t.rows) CHECK(r.c_median < r.c_exact);

    const std::size_t big[] = {10000};
    const double c = constant_c_table(big).rows[0].c_exact;
    CHECK(c >= 1.74);
    CHECK(c <= 4.0);
    CHECK_THROWS_AS(constant_c_table(std::vector<std::size_t>{1}), crossnorm::domain_error);
}

TEST_CASE("lemma2_check inequality and identity", "[geometry][lemma2]") {
    const auto zero = lemma2_check(0.0);
    CHECK(zero.rhs == Approx(sqrt_2_over_pi).epsilon(1e-14));
    CHECK(zero.holds);
    const double lhs0 = oracle::integrate_to_infinity([](double t) {
        const double f = oracle::phi_reference(std::sqrt(2.0) * t);
        return 1.0 - f * f;
    }, 0.0);
    CHECK(zero.lhs == Approx(lhs0).margin(1e-10));

    const auto five = lemma2_check(5.0);
    CHECK(five.holds);
    CHECK(five.rhs == Approx(5.0).margin(1e-5));

    int bad = 0;
    for (int i = 0; i <= 100; ++i) {
        const auto r = lemma2_check(0.1 * i);
        if (!r.holds || r.identity_residual > 1e-8) ++bad;
    }
    CHECK(bad == 0);
    CHECK_THROWS_AS(lemma2_check(-1.0), crossnorm::domain_error);
}
