#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "polylab/model_io.hpp"

using namespace polylab;

namespace {
bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }
}  // namespace

TEST_CASE("hex floats round-trip bit-exactly") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        double x = U(rng) * std::pow(10.0, 300.0 * U(rng));
        CHECK(same_bits(read_real(hexfloat(x), ""), x));
    }
    for (double x : {0.0, -0.0, 1.0, 5e-324, 1.7976931348623157e308})
        CHECK(same_bits(read_real(hexfloat(x), ""), x));
    CHECK(hexfloat(3.0) == "0x1.8p+1");
    CHECK(read_real(json("0.25"), "") == 0.25);
    CHECK(read_real(json(0.5), "") == 0.5);
    CHECK_THROWS_AS(read_real(json("abc"), "/x"), ConfigError);
}

TEST_CASE("map round-trip") {
    auto m = Map1D::piecewise(
        {0.1, 0.7},
        {Map1D::affine(1.0 / 3.0, 0.1), compose({Map1D::power(0.1, 0.7, 1.9), Map1D::scale(-2.0 / 3.0)}),
         Map1D::polynomial({0.1, 2.0, 0.0, 1.0 / 7.0})},
        {0.2, 0.9});
    auto back = map_from_json(json::parse(to_json(m).dump()));
    for (double x = 0.0; x < 1.0; x += 0.013) CHECK(same_bits(back(x), m(x)));
    CHECK(to_json(back) == to_json(m));
    auto ps = map_from_json(to_json(Map1D::parabolic_step(1e-3, 0.2)));
    CHECK(ps(0.3) == Map1D::parabolic_step(1e-3, 0.2)(0.3));
}

TEST_CASE("malformed maps report a pointer") {
    json j = {{"kind", "piecewise"}, {"breaks", {0.5}}, {"branches", {{{"kind", "affine"}, {"slope", 1}}}}, {"at_break", {0.5}}};
    try {
        map_from_json(j, "/model/P");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.pointer() == "/model/P/branches/0/offset");
    }
    CHECK_THROWS_AS(map_from_json({{"kind", "affine"}, {"slope", -1}, {"offset", 0}}), ConfigError);
    CHECK_THROWS_AS(map_from_json({{"kind", "wavelet"}}), ConfigError);
}

TEST_CASE("LEG model round-trip") {
    auto m = construct_Mn(2);
    m.dep.dx = std::vector<Poly>(4, Poly(4));
    m.dep.dx[2] = Poly::coordinate(4, 1, 1.0 / 3.0);
    m.dep.drho = Poly::coordinate(4, 2, 0.1);
    auto doc = model_document("leg", to_json(m));
    auto parsed = parse_model_document(json::parse(doc.dump(2)));
    CHECK(parsed.kind == "leg");
    auto b = leg_from_json(parsed.model);
    CHECK(b.n == 2);
    for (std::size_t i = 0; i < m.x.size(); ++i) CHECK(same_bits(b.x[i], m.x[i]));
    for (std::size_t i = 0; i < m.y.size(); ++i) CHECK(same_bits(b.z[i], m.z[i]));
    CHECK(to_json(b).dump() == to_json(m).dump());
    CHECK(validate(b).empty());
    CHECK(b.dep.dx[2]({0, 0.3, 0, 0}) == doctest::Approx(0.1));
}

TEST_CASE("WG model round-trip") {
    WGModel w;
    w.M = 2;
    w.N = 1;
    w.left = {{Side::Left, 2.0, -1.0, "I1"}, {Side::Left, 3.1, -0.7, "I2"}};
    w.right = {{Side::Right, 0.3, 1.0, "J1"}};
    w.dep.k = 1;
    w.dep.delta = Poly::coordinate(1, 0);
    w.dep.lam = {Poly::coordinate(1, 0), Poly(1)};
    auto b = wg_from_json(json::parse(to_json(w).dump()));
    CHECK(to_json(b) == to_json(w));
    CHECK(b.left[1].inner_saddle_tag == "I2");
    CHECK(validate(b).empty());
}

TEST_CASE("model documents are checked") {
    CHECK_THROWS_AS(parse_model_document({{"schema", "other"}, {"kind", "wg"}, {"model", {}}}), ConfigError);
    CHECK_THROWS_AS(parse_model_document({{"schema", kModelSchema}, {"kind", "cat"}, {"model", {}}}), ConfigError);
    try {
        parse_model_document({{"schema", kModelSchema}, {"kind", "wg"}});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.pointer() == "/model");
    }
    // decimal inputs are accepted for hand-written files
    auto g = glasses_from_json({{"lam", "2"}, {"rho", 0.25}});
    CHECK(g.lam == 2.0);
    CHECK(g.left_event_scale == 1.0);
}

TEST_CASE("fnv1a") {
    CHECK(fnv1a("") == 14695981039346656037ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}
