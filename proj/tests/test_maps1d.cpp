#include <doctest.h>

#include <cmath>
#include <random>

#include "polylab/maps1d.hpp"

using namespace polylab;

namespace {
const double kPi = std::acos(-1.0);

// plain iteration count, written independently of transit_count
long long count_by_hand(double delta, double a3, double from, double to) {
    long long n = 0;
    double x = from;
    while (x < to) {
        x = x + delta + x * x + a3 * x * x * x;
        ++n;
    }
    return n;
}
}  // namespace

TEST_CASE("evaluation with chain rule") {
    auto e = Map1D::affine(2, 1).eval(3);
    CHECK(e.value == 7);
    CHECK(e.derivative == 2);

    e = Map1D::power(0.3, 1.5, 2).eval(0.5);
    CHECK(e.value == doctest::Approx(0.36).epsilon(1e-15));
    CHECK(e.derivative == doctest::Approx(0.6).epsilon(1e-15));

    e = compose({Map1D::affine(3, 0), Map1D::power(0, 1, 2)}).eval(2);
    CHECK(e.value == 36);
    CHECK(e.derivative == 36);
}

TEST_CASE("domain errors report the stage") {
    auto m = compose({Map1D::affine(1, -1), Map1D::power(0, 1, 2)});
    try {
        m.eval(0.5);
        FAIL("expected DomainError");
    } catch (const DomainError& e) {
        CHECK(e.stage() == 1);
        CHECK(e.x() == doctest::Approx(-0.5));
    }
    CHECK_THROWS_AS(Map1D::power(0.3, 1, 2).eval(0.2), DomainError);
}

TEST_CASE("invalid nodes are rejected") {
    CHECK_THROWS_AS(Map1D::affine(0, 1), InvalidMap);
    CHECK_THROWS_AS(Map1D::affine(-1, 1), InvalidMap);
    CHECK_THROWS_AS(Map1D::power(0, -1, 2), InvalidMap);
    CHECK_THROWS_AS(Map1D::power(0, 1, 0), InvalidMap);
    CHECK_THROWS_AS(Map1D::piecewise({1, 0}, {Map1D::identity(), Map1D::identity(), Map1D::identity()}, {0, 0}),
                    InvalidMap);
    CHECK_THROWS_AS(Map1D::piecewise({0}, {Map1D::identity()}, {0}), InvalidMap);
    CHECK_THROWS_AS(compose({}), InvalidMap);
}

TEST_CASE("compose") {
    auto id = Map1D::identity();
    auto p = Map1D::power(0.1, 2.0, 1.3);
    CHECK(compose({id, p})(0.7) == p(0.7));

    auto d = compose({Map1D::scale(std::log(0.004)), Map1D::affine(1, -0.0007), Map1D::scale(std::log(1000.0))});
    CHECK(d(0.2) == doctest::Approx(0.1).epsilon(1e-12));

    double a1 = 1.7, b1 = -0.3, a2 = 0.4, b2 = 2.5;
    auto two = compose({Map1D::affine(a1, b1), Map1D::affine(a2, b2)});
    auto one = Map1D::affine(a1 * a2, a2 * b1 + b2);
    for (double x : {-3.0, 0.0, 0.25, 9.0}) {
        CHECK(two(x) == doctest::Approx(one(x)).epsilon(1e-15));
        CHECK(two.eval(x).derivative == doctest::Approx(one.eval(x).derivative).epsilon(1e-15));
    }
    // nested compose nodes flatten
    auto nested = compose({compose({Map1D::affine(2, 0), Map1D::affine(3, 1)}), Map1D::scale(0.5)});
    CHECK(nested.stage_count() == 3);
}

TEST_CASE("scale keeps log-scale factors finite") {
    auto big = Map1D::scale(800.0);
    CHECK(big(1e-300) == doctest::Approx(std::exp(800.0 - 300.0 * std::log(10.0))).epsilon(1e-12));
    CHECK(Map1D::scale(-800.0)(1e300) == doctest::Approx(std::exp(300.0 * std::log(10.0) - 800.0)).epsilon(1e-12));
    CHECK(Map1D::scale(0.0)(4.0) == 4.0);
}

TEST_CASE("piecewise evaluation") {
    auto pw = Map1D::piecewise({0.0, 1.0}, {Map1D::affine(1, -1), Map1D::power(0, 1, 2), Map1D::affine(5, 0)},
                               {0.5, 2.0});
    CHECK(pw(-1.0) == -2.0);
    CHECK(pw(0.0) == 0.5);
    CHECK(pw(0.5) == 0.25);
    CHECK(pw(1.0) == 2.0);
    CHECK(pw(2.0) == 10.0);
    CHECK(pw.eval(0.5).derivative == 1.0);
}

TEST_CASE("polynomial node") {
    auto p = Map1D::polynomial({1.0, 2.0, 0.0, 0.5});
    auto e = p.eval(2.0);
    CHECK(e.value == 1 + 4 + 4);
    CHECK(e.derivative == 2 + 1.5 * 4);
}

TEST_CASE("solve_preimage") {
    CHECK(solve_preimage(Map1D::affine(2, 1), 7, {0, 10}) == doctest::Approx(3).epsilon(1e-12));
    CHECK(solve_preimage(Map1D::power(0, 1, 2), 0.25, {0, 1}) == doctest::Approx(0.5).epsilon(1e-12));
    // closed-form affine inverse (0.1 + 0.7) / 4
    CHECK(solve_preimage(compose({Map1D::affine(4, -0.7)}), 0.1, {0, 1}) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK_THROWS_AS(solve_preimage(Map1D::affine(2, 1), 30, {0, 10}), NoBracket);
    // x + x^2 decreases on [-1, -1/2]
    CHECK_THROWS_AS(solve_preimage(Map1D::parabolic_step(0.0, 0.0), 0.5, {-1, 1}), NonMonotone);
}

TEST_CASE("inverse roundtrip for affine and power nodes") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        double x = U(rng);
        auto a = Map1D::affine(0.1 + 5 * U(rng), U(rng) - 0.5);
        CHECK(solve_preimage(a, a(x), {-1, 2}) == doctest::Approx(x).epsilon(1e-10));
        auto p = Map1D::power(-0.2, 0.2 + U(rng), 0.3 + 3 * U(rng));
        double r = solve_preimage(p, p(x), {-0.2, 1.5});
        CHECK(std::abs(p(r) - p(x)) <= 1e-12 * std::max(1.0, std::abs(p(x))));
        CHECK(r == doctest::Approx(x).epsilon(1e-6));
    }
}

TEST_CASE("composition associativity") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        auto f = Map1D::affine(0.5 + U(rng), U(rng));
        auto g = Map1D::power(0.0, 0.5 + U(rng), 0.5 + 2 * U(rng));
        auto h = Map1D::scale(U(rng) - 0.5);
        double x = U(rng);
        double a = compose({f, g, h})(x);
        double b = compose({compose({f, g}), h})(x);
        CHECK(std::abs(a - b) <= 1e-14 * std::abs(a));
    }
}

TEST_CASE("c1_distance") {
    auto p = Map1D::power(0, 2, 1.5);
    CHECK(c1_distance(p, p, {0, 1}, 10) == 0.0);
    CHECK(c1_distance(Map1D::affine(1, 0), Map1D::affine(1, 0.01), {0, 1}, 10) == doctest::Approx(0.01));
    CHECK_THROWS_AS(c1_distance(p, p, {0, 1}, 1), InvalidMap);
}

TEST_CASE("basin_converges") {
    auto sq = Map1D::power(0, 1, 2);
    auto r = basin_converges(sq, 0.5, 0.0);
    CHECK(r.status == BasinResult::Status::Converged);
    // 0.5^(2^s) <= 1e-12 first at s = 6
    CHECK(r.steps == 6);
    CHECK(basin_converges(sq, 1.5, 0.0).status == BasinResult::Status::Escaped);
    CHECK(basin_converges(sq, 1.0, 0.0).status == BasinResult::Status::MaxIterExceeded);
    auto chart = Interval(0.0, 2.0);
    auto esc = basin_converges(sq, 1.5, 0.0, 1e-12, 100, chart);
    CHECK(esc.status == BasinResult::Status::Escaped);
    CHECK(esc.position == doctest::Approx(2.25));
}

TEST_CASE("power contraction property") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        double z0 = U(rng), C = 0.2 + 2 * U(rng), lam = 1.05 + 2 * U(rng);
        // C u^(lam-1) < 1 inside u < C^(-1/(lam-1))
        double ustar = std::pow(C, -1.0 / (lam - 1.0));
        double x0 = z0 + 0.9 * ustar;
        auto r = basin_converges(Map1D::power(z0, C, lam), x0, z0, 1e-12);
        CHECK(r.converged());
    }
}

TEST_CASE("transit_count examples") {
    CHECK(transit_count({1.0, 0.0}, -1.0, 1.0) == 1);
    CHECK(transit_count({0.01, 0.0}, -1.0, 1.0) == count_by_hand(0.01, 0.0, -1.0, 1.0));
    CHECK(transit_count({0.01, 0.0}, -1.0, 1.0) == 17);
    CHECK_THROWS_AS(transit_count({-0.01, 0.0}, -1.0, 1.0), NotCrossing);
    CHECK_THROWS_AS(transit_count({0.01, -2.0}, -1.0, 1.0), NotCrossing);  // cubic zero near 0.5
    CHECK_THROWS_AS(transit_count({0.01, 0.0}, 1.0, -1.0), NotCrossing);
}

TEST_CASE("from -1 the orbit skips the left half of the bottleneck") {
    // g(-1) = delta, so only the right half of the pi/sqrt(delta) passage is spent
    for (double d : {1e-4, 1e-6, 1e-8}) {
        double r = transit_count({d, 0.0}, -1.0, 1.0) * std::sqrt(d) / kPi;
        CHECK(std::abs(r - 0.5) < 0.02);
    }
}

TEST_CASE("transit law on the monotone chart") {
    struct Row {
        double delta, tol;
    };
    for (auto [d, tol] : {Row{1e-4, 0.05}, Row{1e-6, 0.01}, Row{1e-8, 0.005}}) {
        long long n = transit_count({d, 0.0}, -0.5, 0.5);
        CHECK(n == count_by_hand(d, 0.0, -0.5, 0.5));
        CHECK(std::abs(n * std::sqrt(d) / kPi - 1.0) < tol);
    }
}

TEST_CASE("monotonicity grid") {
    CHECK_FALSE(find_monotonicity_violation(Map1D::parabolic_step(0.1, 0.0), {-0.5, 1.0}).has_value());
    CHECK(find_monotonicity_violation(Map1D::parabolic_step(0.1, 0.0), {-1.0, 1.0}).has_value());
}
