#include <doctest.h>

#include <cmath>
#include <random>

#include "polylab/phase2d.hpp"

using namespace polylab;

namespace {

PlanarField linear_field(double a11, double a22) {
    PlanarField f;
    f.A << a11, 0.0, 0.0, a22;
    f.b = Vec2::Zero();
    return f;
}

CrossSection horizontal(double y, double x0, double x1, int orientation) {
    CrossSection s;
    s.a = {x0, y};
    s.b = {x1, y};
    s.orientation = orientation;
    s.chart = Map1D::affine(x1 - x0, x0);
    return s;
}

PlanarField lone_cherry(double lam, double k) {
    PlanarField f;
    CherryCell c;
    c.lam = lam;
    c.k = k;
    c.source = {0.6, 0.0};
    f.cells.push_back({"L", {0.0, 1.0, -0.5, 0.5}, c, 0.05});
    return f;
}

const LipsAssembly& default_lips() {
    static LipsAssembly a = assemble_lips(construct_Mn(2));
    return a;
}

}  // namespace

TEST_CASE("smoothstep is flat to third order at both ends") {
    CHECK(smoothstep3(0.0) == 0.0);
    CHECK(smoothstep3(1.0) == 1.0);
    CHECK(smoothstep3(0.5) == doctest::Approx(0.5).epsilon(1e-15));
    for (double h : {1e-2, 1e-3}) {
        CHECK(smoothstep3(h) <= 36.0 * std::pow(h, 4));
        CHECK(1.0 - smoothstep3(1.0 - h) <= 36.0 * std::pow(h, 4));
    }
    double prev = 0.0;
    for (int i = 1; i <= 100; ++i) {
        double s = smoothstep3(i / 100.0);
        CHECK(s >= prev);
        prev = s;
    }
}

TEST_CASE("uniform background carries a point straight across") {
    PlanarField f;
    auto s = integrate_to_section(f, Vec2(0.0, 0.3), CrossSection::vertical(1.0, 0.0, 1.0, 1), 1e-12, 10.0);
    REQUIRE(s);
    CHECK(s->point.x() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(s->output == doctest::Approx(0.3).epsilon(1e-13));
    CHECK(s->time == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s->residual <= 1e-12);
}

TEST_CASE("linear saddle flow reaches the exit predicted by the closed form") {
    // x' = x, y' = -2y from (0.01, 1) to y = 0.01: x = 0.01 (1/0.01)^(1/2)
    PlanarField f = linear_field(1.0, -2.0);
    auto s = integrate_to_section(f, Vec2(0.01, 1.0), horizontal(0.01, 0.0, 1.0, 0), 1e-12, 50.0);
    REQUIRE(s);
    CHECK(s->output == doctest::Approx(0.1).epsilon(1e-10));
    CHECK(s->residual <= 1e-12);

    // The same flow as the plateau of a SaddleCell.
    PlanarField g;
    g.cells.push_back({"S", {-5.0, 5.0, -5.0, 5.0}, SaddleCell{2.0, {0.0, 0.0}}, 1.0});
    auto t = integrate_to_section(g, Vec2(0.01, 1.0), horizontal(0.01, 0.0, 1.0, 0), 1e-12, 50.0);
    REQUIRE(t);
    CHECK(t->output == doctest::Approx(0.1).epsilon(1e-10));
}

TEST_CASE("saddle-node cell expands y by exp(pi/2) across the core") {
    SaddleNodeUnfolding u;
    u.eps = 1.0;
    u.lam0 = 1.0;
    PlanarField f = saddle_node_field(u);
    IntegrateOptions opt = with_tol(1e-12, 100.0);
    auto s = integrate_to_section(f, Vec2(-1.0, 0.01), CrossSection::vertical(1.0, -1.0, 1.0, 1), opt);
    REQUIRE(s);
    CHECK(s->output / 0.01 == doctest::Approx(std::exp(M_PI / 2)).epsilon(1e-6));
}

TEST_CASE("integration errors and missing crossings") {
    PlanarField f = linear_field(1.0, -2.0);
    CHECK_THROWS_AS(integrate_to_section(f, Vec2(0.0, 0.0), CrossSection::vertical(1.0, -1.0, 1.0), 1e-10, 5.0),
                    SingularityHit);
    // trajectory on the stable axis runs into the saddle
    CHECK_THROWS_AS(integrate_to_section(f, Vec2(0.0, 1.0), horizontal(-1.0, -1.0, 1.0, 0), 1e-10, 100.0),
                    SingularityHit);
    PlanarField u;
    CHECK_FALSE(integrate_to_section(u, Vec2(0.0, 0.3), CrossSection::vertical(-1.0, 0.0, 1.0), 1e-10, 5.0));
    // crossing outside the span of the segment is not a crossing
    CHECK_FALSE(integrate_to_section(u, Vec2(0.0, 2.0), CrossSection::vertical(1.0, 0.0, 1.0), 1e-10, 5.0));
    CHECK_THROWS_AS(integrate_to_section(u, Vec2(0.0, 0.3), CrossSection::vertical(1.0, 0.0, 1.0), 1e-3, 5.0),
                    DegenerateConfig);
}

TEST_CASE("backward integration reverses the flow") {
    PlanarField f;
    auto s = integrate_to_section(f, Vec2(2.0, 0.4), CrossSection::vertical(1.0, 0.0, 1.0, 1),
                                  with_tol(1e-12, 10.0, -1));
    REQUIRE(s);
    CHECK(s->time == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s->output == doctest::Approx(0.4).epsilon(1e-13));
}

TEST_CASE("pure background gives the identity table") {
    PlanarField f;
    auto src = CrossSection::vertical(0.0, 0.0, 1.0, 1), dst = CrossSection::vertical(3.0, 0.0, 1.0, 1);
    std::vector<double> in;
    for (int i = 1; i < 20; ++i) in.push_back(i / 20.0);
    auto t = poincare_table(f, src, dst, in);
    REQUIRE(t.samples.size() == in.size());
    CHECK(t.failures.empty());
    for (const auto& s : t.samples) CHECK(s.output == doctest::Approx(s.input).epsilon(1e-12));
    CHECK(monotone_increasing(t));
}

TEST_CASE("poincare table records NoCrossing without failing") {
    PlanarField f;
    auto src = CrossSection::vertical(0.0, 0.0, 2.0, 1), dst = CrossSection::vertical(3.0, 0.0, 1.0, 1);
    auto t = poincare_table(f, src, dst, {0.5, 1.5});
    CHECK(t.samples.size() == 1);
    REQUIRE(t.failures.size() == 1);
    CHECK(t.failures[0].first == 1.5);
    CHECK(t.failures[0].second == "NoCrossing");
}

TEST_CASE("dulac fit on exact power law data") {
    std::vector<PoincareSample> s;
    for (int i = 0; i < 12; ++i) {
        PoincareSample p;
        double d = std::pow(10.0, -3.0 + 0.22 * i);
        p.input = 0.2 + d;
        p.output = 0.5 + 0.8 * std::pow(d, 1.7);
        s.push_back(p);
    }
    auto f = fit_dulac_exponent(s, 0.2, 0.5);
    CHECK(std::abs(f.lam - 1.7) < 1e-10);
    CHECK(f.coeff == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(f.used == 12);

    // left side, approaching the base from below
    std::vector<PoincareSample> l;
    for (int i = 0; i < 10; ++i) {
        PoincareSample p;
        double d = std::pow(10.0, -2.5 + 0.25 * i);
        p.input = 0.2 - d;
        p.output = 0.5 - 2.0 * std::pow(d, 2.5);
        l.push_back(p);
    }
    CHECK(std::abs(fit_dulac_exponent(l, 0.2, 0.5).lam - 2.5) < 1e-10);

    std::vector<PoincareSample> few(s.begin(), s.begin() + 5);
    CHECK_THROWS_AS(fit_dulac_exponent(few, 0.2, 0.5), BadSpan);
    std::vector<PoincareSample> narrow;
    for (int i = 0; i < 10; ++i) {
        PoincareSample p;
        p.input = 0.2 + 1e-3 * (1 + i);
        p.output = 0.5 + p.input;
        narrow.push_back(p);
    }
    CHECK_THROWS_AS(fit_dulac_exponent(narrow, 0.2, 0.5), BadSpan);
    s[3].output = 0.4;
    CHECK_THROWS_AS(fit_dulac_exponent(s, 0.2, 0.5), NonPositiveDifferences);
}

TEST_CASE("dulac exponent of an integrated saddle") {
    for (double lam : {1.7, 3.0}) {
        PlanarField f;
        f.cells.push_back({"S", {-5.0, 5.0, -5.0, 5.0}, SaddleCell{lam, {0.0, 0.0}}, 1.0});
        // enter on y = 1 at x = d, leave on x = 1 at height d^lam
        auto src = horizontal(1.0, 0.0, 1.0, -1), dst = CrossSection::vertical(1.0, 0.0, 1.0, 1);
        std::vector<double> in;
        for (int i = 0; i < 12; ++i) in.push_back(std::pow(10.0, -6.0 + 4.0 * i / 11.0));
        IntegrateOptions opt = with_tol(1e-12, 100.0);
        opt.atol = {1e-12, 0.0};
        auto t = poincare_table(f, src, dst, in, opt);
        REQUIRE(t.samples.size() == in.size());
        CHECK(monotone_increasing(t));
        auto fit = fit_dulac_exponent(t.samples, 0.0, 0.0);
        CHECK(std::abs(fit.lam - lam) < 0.02 * lam);
        CHECK(fit.coeff == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("isolated saddle: separatrices follow the eigendirections") {
    PlanarField f;
    f.cells.push_back({"S", {-5.0, 5.0, -5.0, 5.0}, SaddleCell{2.0, {0.0, 0.0}}, 1.0});
    Box sb{-0.5, 0.3, -0.4, 0.4};
    auto right = CrossSection::vertical(2.0, -1.0, 1.0, 1);
    auto shot = shoot_separatrix(f, sb, SepKind::Unstable, 1, 50.0, {right});
    CHECK(shot.eigenvalues[0] == doctest::Approx(-2.0).epsilon(1e-8));
    CHECK(shot.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-8));
    REQUIRE(shot.path.crossings.size() == 1);
    CHECK(std::abs(shot.path.crossings[0].coordinate) < 1e-9);

    auto top = horizontal(2.0, -1.0, 1.0, 0);
    auto st = shoot_separatrix(f, sb, SepKind::Stable, 1, 50.0, {top});
    REQUIRE(st.path.crossings.size() == 1);
    CHECK(std::abs(st.path.crossings[0].point.x()) < 1e-9);

    // four rays
    int rays = 0;
    for (auto which : {SepKind::Stable, SepKind::Unstable})
        for (int b : {-1, 1}) {
            auto r = shoot_separatrix(f, sb, which, b, 20.0);
            CHECK(r.path.p.back().norm() > 1.0);
            ++rays;
        }
    CHECK(rays == 4);
}

TEST_CASE("saddle location rejects non-saddles") {
    PlanarField f;
    f.cells.push_back({"N", {-2.0, 2.0, -2.0, 2.0}, SourceCell{1.0, {0.1, 0.0}}, 0.4});
    CHECK_THROWS_AS(locate_saddle(f, Box{-0.5, 0.5, -0.5, 0.5}), NotASaddle);
    PlanarField u;
    CHECK_THROWS_AS(locate_saddle(u, Box{-0.5, 0.5, -0.5, 0.5}), NewtonDiverged);
}

TEST_CASE("cherry cell meets the four defining properties") {
    for (double lam : {1.3, 2.0, 3.5}) {
        PlanarField f = lone_cherry(lam, 0.06);
        CHECK(validate(f).empty());
        const auto& c = std::get<CherryCell>(f.cells[0].local);
        Vec2 sp = c.saddle();

        // saddle with characteristic number lam
        Eigen::EigenSolver<Eigen::Matrix2d> es(f.jacobian(sp));
        double e0 = es.eigenvalues()[0].real(), e1 = es.eigenvalues()[1].real();
        double st = std::min(e0, e1), un = std::max(e0, e1);
        CHECK(-st / un == doctest::Approx(lam).epsilon(1e-6));

        // the other zero is a repellor
        Vec2 node(c.source.x() - c.k - c.saddle_offset(), 0.0);
        Eigen::EigenSolver<Eigen::Matrix2d> en(f.jacobian(node));
        CHECK(f(node).norm() < 1e-12);
        CHECK(en.eigenvalues()[0].real() > 0.0);
        CHECK(en.eigenvalues()[1].real() > 0.0);

        // no other zeros on a grid: |f| stays away from 0 off small discs around both
        int near_zero = 0;
        for (int i = 0; i <= 100; ++i)
            for (int j = 0; j <= 100; ++j) {
                Vec2 p(0.01 * i, -0.5 + 0.01 * j);
                if ((p - sp).norm() < 0.02 || (p - node).norm() < 0.02) continue;
                if (f(p).norm() < 1e-3) ++near_zero;
            }
        CHECK(near_zero == 0);

        // equal to (1, 0) on the boundary of the square and beyond
        CHECK(f(Vec2(0.0, 0.3)) == Vec2(1.0, 0.0));
        CHECK(f(Vec2(0.5, 0.5)) == Vec2(1.0, 0.0));
        CHECK(f(Vec2(-0.01, 0.3)) == Vec2(1.0, 0.0));
        CHECK(f(Vec2(0.5, 0.51)) == Vec2(1.0, 0.0));

        Box sb{sp.x() - 0.01, sp.x() + 0.01, -0.01, 0.01};
        auto leftside = CrossSection::vertical(0.0, -0.5, 0.5, 1);
        auto rightside = CrossSection::vertical(1.0, -0.5, 0.5, 1);
        auto in = shoot_separatrix(f, sb, SepKind::Stable, -1, 50.0, {leftside});
        REQUIRE(in.path.crossings.size() == 1);
        CHECK(std::abs(in.path.crossings[0].coordinate) < 1e-9);
        auto up = shoot_separatrix(f, sb, SepKind::Unstable, 1, 50.0, {rightside});
        auto dn = shoot_separatrix(f, sb, SepKind::Unstable, -1, 50.0, {rightside});
        REQUIRE(up.path.crossings.size() == 1);
        REQUIRE(dn.path.crossings.size() == 1);
        CHECK(up.path.crossings[0].coordinate > 0.0);
        CHECK(dn.path.crossings[0].coordinate == doctest::Approx(-up.path.crossings[0].coordinate).epsilon(1e-9));
        // the other stable separatrix comes from the repellor
        auto other = shoot_separatrix(f, sb, SepKind::Stable, 1, 30.0, {rightside, leftside});
        CHECK(other.path.crossings.empty());
    }
}

TEST_CASE("field validation") {
    PlanarField f = lone_cherry(2.0, 0.06);
    f.cells.push_back({"S", {0.5, 1.5, 0.0, 1.0}, SaddleCell{1.0, {1.0, 0.5}}, 0.1});
    auto v = validate(f);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("overlaps") != std::string::npos);
    f.cells.pop_back();
    f.cells[0].blend = 0.3;
    CHECK_FALSE(validate(f).empty());
    f = lone_cherry(2.0, 0.06);
    std::get<CherryCell>(f.cells[0].local).drift = 0.1;
    std::get<CherryCell>(f.cells[0].local).drift_lo = 0.1;
    std::get<CherryCell>(f.cells[0].local).drift_hi = 0.9;
    CHECK_FALSE(validate(f).empty());
}

TEST_CASE("transversality check") {
    PlanarField f;
    CHECK(check_transversal(f, CrossSection::vertical(0.0, 0.0, 1.0, 1)).empty());
    CHECK_FALSE(check_transversal(f, CrossSection::vertical(0.0, 0.0, 1.0, -1)).empty());
    CHECK_FALSE(check_transversal(f, horizontal(0.0, 0.0, 1.0, 0)).empty());
    const auto& a = default_lips();
    CHECK(check_transversal(a.field, a.gamma1).empty());
    CHECK(check_transversal(a.field, a.gamma2).empty());
}

TEST_CASE("surgery locality: outside every box the field is the background") {
    const auto& a = default_lips();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> X(0.0, a.field.period), Y(-2.0, 3.0);
    int outside = 0;
    for (int i = 0; i < 20000; ++i) {
        Vec2 p(X(rng), Y(rng));
        bool in = false;
        for (const auto& c : a.field.cells) in = in || c.box.contains(p);
        if (in) continue;
        ++outside;
        Vec2 v = a.field(p);
        CHECK(v.x() == 1.0);
        CHECK(v.y() == 0.0);
    }
    CHECK(outside > 5000);
    // on the box boundary itself
    for (const auto& c : a.field.cells) {
        if (c.box.x0 <= 0.0) continue;
        Vec2 v = a.field(Vec2(c.box.x0, c.box.center().y()));
        CHECK(v == Vec2(1.0, 0.0));
    }
}

TEST_CASE("blended field: third differences stay bounded under refinement") {
    PlanarField f = lone_cherry(2.0, 0.06);
    auto d3max = [&](double h) {
        double m = 0.0;
        // across the left and bottom collars
        for (double t = 0.0; t <= 0.1; t += h) {
            for (int comp = 0; comp < 2; ++comp) {
                auto g = [&](double s) { return f(Vec2(s, 0.2))[comp]; };
                double d = (g(t + 3 * h) - 3 * g(t + 2 * h) + 3 * g(t + h) - g(t)) / (h * h * h);
                m = std::max(m, std::abs(d));
                auto q = [&](double s) { return f(Vec2(0.3, -0.5 + s))[comp]; };
                d = (q(t + 3 * h) - 3 * q(t + 2 * h) + 3 * q(t + h) - q(t)) / (h * h * h);
                m = std::max(m, std::abs(d));
            }
        }
        return m;
    };
    double coarse = d3max(1e-3), fine = d3max(2.5e-4);
    CHECK(std::isfinite(fine));
    CHECK(fine < 1.5 * coarse);
    CHECK(fine > 0.5 * coarse);
}

TEST_CASE("periodic chart identifies x with x + period") {
    const auto& a = default_lips();
    for (double y : {-0.3, 0.2, 0.5, 0.9}) {
        Vec2 p(1.3, y);
        CHECK((a.field(p) - a.field(Vec2(p.x() + a.field.period, y))).norm() < 1e-12);
    }
    // the bridge: the line y = 1/2 leaves S2 to the right and enters S1 from the left
    const auto& s1 = std::get<SaddleNodeCell>(a.field.cells[a.s1].local);
    const auto& s2 = std::get<SaddleNodeCell>(a.field.cells[a.s2].local);
    CHECK(s1.center.y() == s2.center.y());
    CHECK(s1.lam0 > 0.0);
    CHECK(s2.lam0 < 0.0);
    const Box& b1 = a.field.cells[a.s1].box;
    const Box& b2 = a.field.cells[a.s2].box;
    for (double x = b2.x0; x < a.field.period + b1.x1; x += 0.01) {
        Vec2 v = a.field(Vec2(x, 0.5));
        CHECK(v.y() == 0.0);
        CHECK(v.x() >= 0.0);
    }
}

TEST_CASE("lips n = 0: one Cherry cell and the lens land on the blueprint") {
    LEGModel m = construct_Mn(0);
    auto a = assemble_lips(m);
    CHECK(a.cherry.size() == 1);
    auto audit = landing_audit(a);
    CHECK(audit.size() == 4);
    for (const auto& l : audit) {
        INFO(l.name);
        CHECK(l.error < 1e-4);
    }
}

TEST_CASE("lips n = 2: every marked separatrix lands on its blueprint coordinate") {
    const auto& a = default_lips();
    auto audit = landing_audit(a);
    REQUIRE(audit.size() == 10);
    for (const auto& l : audit) {
        INFO(l.name);
        CHECK(l.error < 1e-4);
    }
    CHECK(audit[0].name == "s");
    CHECK(audit[0].error < 1e-6);
}

TEST_CASE("lips n = 2: Poincare table has the blueprint ordering and jumps") {
    const auto& a = default_lips();
    std::vector<double> in;
    for (int i = 1; i < 120; ++i) in.push_back(-0.1 + 1.0 * i / 120.0);
    for (int k = 1; k <= 3; ++k)
        for (double d : {-1e-6, 1e-6}) in.push_back(a.x[k] + d);
    auto t = poincare_table(a.field, a.gamma1, a.gamma2, in);
    CHECK(t.failures.empty());
    CHECK(monotone_increasing(t));
    auto at = [&](double x) {
        for (const auto& s : t.samples)
            if (s.input == x) return s.output;
        return std::nan("");
    };
    for (int k = 1; k <= 3; ++k) {
        double below = at(a.x[k] - 1e-6), above = at(a.x[k] + 1e-6);
        CHECK(below < a.y[k - 1]);
        CHECK(below > a.y[k - 1] - 1e-4);
        CHECK(above > a.z[k - 1]);
        CHECK(above < a.z[k - 1] + 1e-4);
        // the gap (y_k, z_k) is not in the image
        for (const auto& s : t.samples) CHECK_FALSE((s.output > a.y[k - 1] + 1e-4 && s.output < a.z[k - 1] - 1e-4));
    }
}

TEST_CASE("lips n = 2: Dulac exponents at x_k recover lambda_k") {
    const auto& a = default_lips();
    auto fits = lips_dulac_fits(a);
    REQUIRE(fits.size() == 3);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(fits[k].lam - a.lam[k]) < 0.02 * a.lam[k]);
}

TEST_CASE("invalid blueprint is rejected before assembly") {
    LEGModel m = construct_Mn(1);
    std::swap(m.y[0], m.z[0]);
    CHECK_THROWS_AS(assemble_lips(m), ModelInvalid);
    CHECK_THROWS_AS(assemble_lips(construct_Mn(3)), DegenerateConfig);
}

TEST_CASE("assemblies for random seeds") {
    int ok = 0;
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        LEGModel m = construct_Mn(2, LegSeed::random(seed));
        try {
            auto a = assemble_lips(m);
            for (const auto& l : landing_audit(a)) CHECK(l.error < 1e-4);
            ++ok;
        } catch (const PlacementFailed& e) {
            MESSAGE("seed " << seed << ": " << std::string(e.what()));
        }
    }
    CHECK(ok == 6);
}

TEST_CASE("passage through the saddle-node cell matches quadrature") {
    SaddleNodeUnfolding u;
    u.lam0 = 1.0;
    auto r = measure_passage(u, {1.0, 0.04});
    CHECK(std::abs(r[0].log_c - M_PI / 2) < 1e-6 * M_PI / 2);
    CHECK(std::abs(r[1].log_c - 10.0 * std::atan(5.0)) < 1e-6 * 13.734);
    for (const auto& p : r) CHECK(p.rel_error < 1e-6);
    u.lam0 = -1.0;
    auto m = measure_passage(u, {1.0, 0.04});
    CHECK(m[0].log_c == doctest::Approx(-r[0].log_c).epsilon(1e-9));
    CHECK(m[1].log_c == doctest::Approx(-r[1].log_c).epsilon(1e-9));
    u.a3 = 0.3;
    u.lam0 = 1.0;
    for (const auto& p : measure_passage(u, {0.25})) CHECK(p.rel_error < 1e-6);
    CHECK_THROWS_AS(measure_passage(u, {1e-5}), DegenerateConfig);
}

TEST_CASE("assembly round-trips through JSON") {
    const auto& a = default_lips();
    json j = to_json(a);
    LipsAssembly b = lips_from_json(json::parse(j.dump()));
    CHECK(to_json(b).dump() == j.dump());
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> X(0.0, a.field.period), Y(-0.5, 1.5);
    for (int i = 0; i < 2000; ++i) {
        Vec2 p(X(rng), Y(rng));
        CHECK(a.field(p) == b.field(p));
    }
    json bad = j;
    bad["field"]["cells"][2]["kind"] = "vortex";
    CHECK_THROWS_AS(lips_from_json(bad), ConfigError);
}

TEST_CASE("exports: trajectory CSV and deterministic SVG") {
    PlanarField f;
    Trajectory t = flow(f, Vec2(0.0, 0.2), with_tol(1e-10, 1.0));
    std::string csv = trajectory_csv(t);
    CHECK(csv.rfind("t,x,y\n", 0) == 0);

    Box region{0.0, 2.0, 0.0, 1.0};
    PortraitOptions po;
    po.streamlines = 5;
    std::string s1 = portrait_svg(f, region, {}, po), s2 = portrait_svg(f, region, {}, po);
    CHECK(s1 == s2);
    CHECK(s1.find("<svg") != std::string::npos);
    // parallel streamlines: each polyline keeps its height
    std::size_t pos = 0;
    int lines = 0;
    while ((pos = s1.find("class=\"stream\"", pos)) != std::string::npos) {
        std::size_t p0 = s1.find("points=\"", pos) + 8, p1 = s1.find('"', p0);
        std::string pts = s1.substr(p0, p1 - p0);
        std::string first_y = pts.substr(pts.find(',') + 1, pts.find(' ') - pts.find(',') - 1);
        std::size_t c = 0;
        while ((c = pts.find(',', c)) != std::string::npos) {
            std::size_t e = pts.find(' ', c);
            CHECK(pts.substr(c + 1, e == std::string::npos ? std::string::npos : e - c - 1) == first_y);
            ++c;
        }
        ++lines;
        ++pos;
    }
    CHECK(lines == 5);

    const auto& a = default_lips();
    auto seps = lips_separatrices(a);
    CHECK(seps.size() == a.marked.size());
    std::string lips = portrait_svg(a.field, Box{0.0, a.field.period, -0.5, 1.5}, seps);
    std::size_t count = 0;
    for (pos = 0; (pos = lips.find("class=\"separatrix\"", pos)) != std::string::npos; ++pos) ++count;
    CHECK(count == a.marked.size());
}
