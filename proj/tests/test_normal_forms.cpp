#include <doctest.h>

#include <cmath>

#include "polylab/normal_forms.hpp"

using namespace polylab;

namespace {
const double kPi = std::acos(-1.0);

// d(ln y)/dx = lam(x) / speed(x), classical RK4 in x
double ln_c_by_rk4(const SaddleNodeUnfolding& u, int steps) {
    auto f = [&](double x) { return u.lambda(x) / u.speed(x); };
    double h = 2.0 / steps, z = 0.0;
    for (int i = 0; i < steps; ++i) {
        double x = -1.0 + i * h;
        double k1 = f(x), k2 = f(x + h / 2), k4 = f(x + h);
        z += h / 6.0 * (k1 + 4.0 * k2 + k4);
    }
    return z;
}
}  // namespace

TEST_CASE("transit_time examples") {
    CHECK(transit_time({1.0, 0.0, 1.0, 0.0}) == doctest::Approx(kPi / 2).epsilon(1e-12));
    CHECK(transit_time({0.01, 0.0, 1.0, 0.0}) == doctest::Approx(20 * std::atan(10.0)).epsilon(1e-11));
    CHECK(transit_time({0.01, 0.0, 1.0, 0.0}) == doctest::Approx(29.42255).epsilon(1e-6));
    double t = transit_time({1e-8, 0.0, 1.0, 0.0});
    CHECK(std::abs(t / (kPi * 1e4) - 1.0) < 1e-3);
}

TEST_CASE("closed forms hold on an eps grid") {
    for (double e = 1e-6; e <= 1.0; e *= 3.7) {
        double cf = transit_time_closed_form(e);
        CHECK(std::abs(transit_time({e, 0, 1, 0}) / cf - 1.0) < 1e-8);
        CHECK(std::abs(log_passage_coefficient({e, 0, 2.5, 0}) / (2.5 * cf) - 1.0) < 1e-8);
        // odd part of lam integrates to zero when a3 = 0
        CHECK(std::abs(log_passage_coefficient({e, 0, 1.0, 0.7}) / cf - 1.0) < 1e-8);
    }
}

TEST_CASE("log passage coefficient examples") {
    CHECK(log_passage_coefficient({1, 0, 1, 0}) == doctest::Approx(kPi / 2).epsilon(1e-12));
    double neg = log_passage_coefficient({1, 0, -1, 0});
    CHECK(neg == doctest::Approx(-kPi / 2).epsilon(1e-12));
    CHECK(std::exp(neg) < 1.0);
    double lc = log_passage_coefficient({0.01, 0, 1, 0});
    CHECK(lc == doctest::Approx(29.42255).epsilon(1e-6));
    CHECK(std::exp(lc) == doctest::Approx(6.0e12).epsilon(0.01));
    auto m = passage_map({0.01, 0, 1, 0});
    CHECK(m.kind() == Map1D::Kind::Scale);
    CHECK(m(1e-12) == doctest::Approx(std::exp(lc) * 1e-12).epsilon(1e-12));
}

TEST_CASE("singular transits are rejected") {
    CHECK_THROWS_AS(transit_time({0.0, 0, 1, 0}), SingularTransit);
    CHECK_THROWS_AS(transit_time({-0.1, 0, 1, 0}), SingularTransit);
    CHECK_THROWS_AS(transit_time({1e-11, 0, 1, 0}), SingularTransit);
    CHECK_THROWS_AS(transit_time({0.01, 1.5, 1, 0}), SingularTransit);  // zero at x = -1
    CHECK_THROWS_AS(log_passage_coefficient({0.1, 0, 0.0, 0}), InvalidCharNum);
}

TEST_CASE("quadrature agrees with the flow equation") {
    for (SaddleNodeUnfolding u : {SaddleNodeUnfolding{0.3, 0.4, 1.2, 0.5}, SaddleNodeUnfolding{0.05, -0.5, -0.8, 0.3},
                                  SaddleNodeUnfolding{0.01, 0.2, 1.0, -0.4}}) {
        double q = log_passage_coefficient(u);
        double o = ln_c_by_rk4(u, 400000);
        CHECK(std::abs(q / o - 1.0) < 1e-6);
    }
}

TEST_CASE("ln C decreases in eps for repelling sectors") {
    double prev = INFINITY;
    for (double e = 1e-6; e <= 1.0; e *= 1.5) {
        double v = log_passage_coefficient({e, 0.3, 1.0, 0.2});
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("orientation follows lam0") {
    CHECK(SaddleNodeUnfolding{1, 0, 1, 0}.orientation() == Orientation::RepellingSector);
    CHECK(SaddleNodeUnfolding{1, 0, -1, 0}.orientation() == Orientation::AttractingSector);
}

TEST_CASE("eps_for_log_passage inverts ln C") {
    SaddleNodeUnfolding shape{1.0, 0.0, 1.0, 0.0};
    double e = eps_for_log_passage(shape, 29.42255246);
    CHECK(e == doctest::Approx(0.01).epsilon(1e-6));
    shape.lam0 = -1.0;
    e = eps_for_log_passage(shape, -100.0);
    shape.eps = e;
    CHECK(log_passage_coefficient(shape) == doctest::Approx(-100.0).epsilon(1e-9));
    CHECK_THROWS_AS(eps_for_log_passage(shape, 3.0), NotRealizable);
}

TEST_CASE("dulac corner map") {
    auto sq = dulac_corner_map(2, 1, 0);
    CHECK(sq(0.3) == doctest::Approx(0.09));
    auto lin = dulac_corner_map(1, 2.5, 0.1);
    CHECK(lin.eval(0.4).derivative == doctest::Approx(2.5));
    CHECK(lin.eval(3.0).derivative == doctest::Approx(2.5));
    auto m = dulac_corner_map(1.7, 0.5, 0.3);
    CHECK(m(0.4) == doctest::Approx(0.3 + 0.5 * std::pow(0.1, 1.7)).epsilon(1e-15));
    CHECK(m(0.4) == doctest::Approx(0.309976).epsilon(1e-6));
}

TEST_CASE("chart transitions") {
    RectifyingChart c1{Section::GammaPlus, compose({Map1D::power(0, 1, 1.3), Map1D::affine(2, 0.1)})};
    auto t = chart_transition(c1, c1, {0.5, 1.0});
    auto a = std::get<AffineNode>(t.node().v);
    CHECK(a.slope == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(a.offset) < 1e-12);

    RectifyingChart c2{Section::GammaPlus, compose({c1.coordinate, Map1D::affine(3, -1)})};
    t = chart_transition(c1, c2, {0.5, 1.0});
    a = std::get<AffineNode>(t.node().v);
    CHECK(std::abs(a.slope - 3.0) < 1e-12);
    CHECK(std::abs(a.offset + 1.0) < 1e-12);

    RectifyingChart bent{Section::GammaPlus, compose({c1.coordinate, Map1D::power(0, 1, 1.1)})};
    CHECK_THROWS_AS(chart_transition(c1, bent, {0.5, 1.0}), NotAffine);

    RectifyingChart other{Section::GammaMinus, c1.coordinate};
    CHECK_THROWS_AS(chart_transition(c1, other, {0.5, 1.0}), NotAffine);

    // T(c1->c3) = T(c2->c3) after T(c1->c2)
    RectifyingChart c3{Section::GammaPlus, compose({c1.coordinate, Map1D::affine(0.5, 4)})};
    auto t12 = chart_transition(c1, c2, {0.5, 1.0});
    auto t23 = chart_transition(c2, c3, {0.5, 1.0});
    auto t13 = chart_transition(c1, c3, {0.5, 1.0});
    for (double x : {0.0, 0.7, 2.0})
        CHECK(compose({t12, t23})(x) == doctest::Approx(t13(x)).epsilon(1e-12));
}
