#include "polylab/normal_forms.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <functional>
#include <sstream>

namespace polylab {

namespace {

std::string num(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

// Breakpoints that resolve the bottleneck of width sqrt(eps) near x = 0 and
// the second critical point of the cubic.
std::vector<double> seeded_breaks(const SaddleNodeUnfolding& u) {
    std::vector<double> b{-1.0, 1.0, 0.0};
    double w = std::sqrt(u.eps);
    for (double k = 1.0; k * w < 1.0; k *= 4.0) {
        b.push_back(k * w);
        b.push_back(-k * w);
    }
    if (u.a3 != 0.0) {
        double c = -2.0 / (3.0 * u.a3);
        if (c > -1.0 && c < 1.0) b.push_back(c);
    }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
}

double integrate(const SaddleNodeUnfolding& u, const std::function<double(double)>& f) {
    using boost::math::quadrature::gauss_kronrod;
    auto b = seeded_breaks(u);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < b.size(); ++i) {
        double err = 0.0;
        total += gauss_kronrod<double, 21>::integrate(f, b[i], b[i + 1], 12, 1e-13, &err);
    }
    return total;
}

}  // namespace

void check_transit(const SaddleNodeUnfolding& u) {
    if (u.lam0 == 0.0) throw InvalidCharNum("lam0 must be nonzero");
    if (!(u.eps > 0.0))
        throw SingularTransit("eps = " + num(u.eps) + " leaves a zero of the speed on [-1, 1]");
    if (u.eps < kMinEps) throw SingularTransit("eps = " + num(u.eps) + " is below the supported floor 1e-10");
    double mn = parabolic_increment_min(ParabolicStep{u.eps, u.a3}, -1.0, 1.0);
    if (mn <= 0.0)
        throw SingularTransit("eps + x^2 + a3 x^3 reaches " + num(mn) + " on [-1, 1]");
}

double transit_time(const SaddleNodeUnfolding& u) {
    check_transit(u);
    return integrate(u, [&](double x) { return 1.0 / u.speed(x); });
}

double log_passage_coefficient(const SaddleNodeUnfolding& u) {
    check_transit(u);
    return integrate(u, [&](double x) { return u.lambda(x) / u.speed(x); });
}

Map1D passage_map(const SaddleNodeUnfolding& u) { return Map1D::scale(log_passage_coefficient(u)); }

double transit_time_closed_form(double eps) {
    double r = std::sqrt(eps);
    return 2.0 / r * std::atan(1.0 / r);
}

double eps_for_log_passage(SaddleNodeUnfolding shape, double target) {
    if (shape.lam0 == 0.0 || target * shape.lam0 <= 0.0)
        throw NotRealizable("ln C target " + num(target) + " has the wrong sign for lam0 = " + num(shape.lam0));
    auto f = [&](double le) {
        shape.eps = std::max(kMinEps, std::exp(le));
        return std::abs(log_passage_coefficient(shape)) - std::abs(target);
    };
    // |ln C| decreases in eps
    double lo = std::log(kMinEps), hi = std::log(1e8);
    if (f(lo) < 0.0) throw NotRealizable("|ln C| = " + num(std::abs(target)) + " needs eps below 1e-10");
    if (f(hi) > 0.0) throw NotRealizable("|ln C| = " + num(std::abs(target)) + " needs eps above 1e8");
    std::uintmax_t it = 100;
    auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(50), it);
    return std::exp(0.5 * (r.first + r.second));
}

Map1D dulac_corner_map(double lam, double coeff, double anchor) { return Map1D::power(anchor, coeff, lam); }

Map1D chart_transition(const RectifyingChart& c1, const RectifyingChart& c2, Interval probe, int grid_n) {
    if (c1.section != c2.section) throw NotAffine("charts live on different sections");
    if (grid_n < 3) throw NotAffine("need at least 3 probe points");
    std::vector<double> a(grid_n), b(grid_n);
    for (int i = 0; i < grid_n; ++i) {
        double p = probe.lo + probe.length() * i / (grid_n - 1);
        a[i] = c1.coordinate(p);
        b[i] = c2.coordinate(p);
    }
    double ma = 0, mb = 0;
    for (int i = 0; i < grid_n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= grid_n;
    mb /= grid_n;
    double sab = 0, saa = 0;
    for (int i = 0; i < grid_n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
    }
    double slope = sab / saa;
    double offset = mb - slope * ma;
    double dev = 0;
    for (int i = 0; i < grid_n; ++i) dev = std::max(dev, std::abs(b[i] - (slope * a[i] + offset)));
    if (!(slope > 0.0) || dev > 1e-8 * probe.length())
        throw NotAffine("transition deviates from its affine fit by " + num(dev));
    return Map1D::affine(slope, offset);
}

}  // namespace polylab
