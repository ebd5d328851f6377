#include "polylab/maps1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace polylab {

namespace {

std::string num(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Map1D::Eval eval_node(const MapNode& n, double x, int stage);

Map1D::Eval eval_map(const Map1D& m, double x, int stage) { return eval_node(m.node(), x, stage); }

Map1D::Eval eval_node(const MapNode& n, double x, int stage) {
    return std::visit(
        overloaded{
            [&](const AffineNode& a) -> Map1D::Eval { return {a.slope * x + a.offset, a.slope}; },
            [&](const PowerNode& p) -> Map1D::Eval {
                if (!(x >= p.z0))
                    throw DomainError(stage, x, "power map needs x >= " + num(p.z0) + ", got " + num(x));
                double u = x - p.z0;
                if (u == 0.0) {
                    double d = p.lam > 1.0 ? 0.0
                               : p.lam == 1.0 ? p.coeff
                                              : std::numeric_limits<double>::infinity();
                    return {p.z0, d};
                }
                double up = std::pow(u, p.lam);
                return {p.z0 + p.coeff * up, p.coeff * p.lam * up / u};
            },
            [&](const ScaleNode& s) -> Map1D::Eval {
                if (std::abs(s.logc) < 700.0) {
                    double c = std::exp(s.logc);
                    return {c * x, c};
                }
                // keep the product finite when the factor alone would overflow
                double v = x == 0.0 ? 0.0 : std::copysign(std::exp(s.logc + std::log(std::abs(x))), x);
                return {v, std::exp(s.logc)};
            },
            [&](const ParabolicStep& g) -> Map1D::Eval {
                return {g(x), 1.0 + 2.0 * x + 3.0 * g.a3 * x * x};
            },
            [&](const PolynomialNode& p) -> Map1D::Eval {
                double v = 0.0, d = 0.0;
                for (std::size_t i = p.coeffs.size(); i-- > 0;) {
                    d = d * x + v;
                    v = v * x + p.coeffs[i];
                }
                return {v, d};
            },
            [&](const PiecewiseNode& pw) -> Map1D::Eval {
                const auto& b = pw.breaks;
                auto it = std::lower_bound(b.begin(), b.end(), x);
                std::size_t i = static_cast<std::size_t>(it - b.begin());
                if (it != b.end() && *it == x) {
                    // value pinned; slope taken from the right branch when it is defined there
                    double d;
                    try {
                        d = eval_map(pw.branches[i + 1], x, stage).derivative;
                    } catch (const DomainError&) {
                        d = eval_map(pw.branches[i], x, stage).derivative;
                    }
                    return {pw.at_break[i], d};
                }
                return eval_map(pw.branches[i], x, stage);
            },
            [&](const ComposeNode& c) -> Map1D::Eval {
                double v = x, d = 1.0;
                for (std::size_t i = 0; i < c.maps.size(); ++i) {
                    auto e = eval_map(c.maps[i], v, static_cast<int>(i));
                    v = e.value;
                    d *= e.derivative;
                }
                return {v, d};
            },
        },
        n.v);
}

void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidMap(what);
}

}  // namespace

Interval::Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (!(lo < hi)) throw InvalidMap("interval needs lo < hi, got [" + num(lo) + ", " + num(hi) + "]");
}

Map1D Map1D::affine(double slope, double offset) {
    require(slope > 0.0 && std::isfinite(slope), "affine slope must be positive, got " + num(slope));
    require(std::isfinite(offset), "affine offset must be finite");
    return Map1D(std::make_shared<MapNode>(MapNode{AffineNode{slope, offset}}));
}

Map1D Map1D::power(double z0, double coeff, double lam) {
    require(coeff > 0.0 && std::isfinite(coeff), "power coeff must be positive, got " + num(coeff));
    require(lam > 0.0 && std::isfinite(lam), "power exponent must be positive, got " + num(lam));
    require(std::isfinite(z0), "power anchor must be finite");
    return Map1D(std::make_shared<MapNode>(MapNode{PowerNode{z0, coeff, lam}}));
}

Map1D Map1D::scale(double logc) {
    require(std::isfinite(logc), "scale logC must be finite");
    return Map1D(std::make_shared<MapNode>(MapNode{ScaleNode{logc}}));
}

Map1D Map1D::parabolic_step(double delta, double a3) {
    require(std::isfinite(delta) && std::isfinite(a3), "parabolic step fields must be finite");
    return Map1D(std::make_shared<MapNode>(MapNode{ParabolicStep{delta, a3}}));
}

Map1D Map1D::polynomial(std::vector<double> coeffs) {
    require(!coeffs.empty(), "polynomial needs at least one coefficient");
    for (double c : coeffs) require(std::isfinite(c), "polynomial coefficients must be finite");
    return Map1D(std::make_shared<MapNode>(MapNode{PolynomialNode{std::move(coeffs)}}));
}

Map1D Map1D::piecewise(std::vector<double> breaks, std::vector<Map1D> branches,
                       std::vector<double> at_break) {
    require(branches.size() == breaks.size() + 1, "piecewise needs breakpoint count + 1 branches");
    require(at_break.size() == breaks.size(), "piecewise needs one value per breakpoint");
    for (std::size_t i = 1; i < breaks.size(); ++i)
        require(breaks[i - 1] < breaks[i], "piecewise breakpoints must be strictly increasing");
    return Map1D(std::make_shared<MapNode>(
        MapNode{PiecewiseNode{std::move(breaks), std::move(branches), std::move(at_break)}}));
}

Map1D Map1D::compose(const std::vector<Map1D>& maps) {
    require(!maps.empty(), "compose needs a nonempty list");
    std::vector<Map1D> flat;
    for (const auto& m : maps) {
        if (m.kind() == Kind::Compose) {
            const auto& inner = std::get<ComposeNode>(m.node().v).maps;
            flat.insert(flat.end(), inner.begin(), inner.end());
        } else {
            flat.push_back(m);
        }
    }
    return Map1D(std::make_shared<MapNode>(MapNode{ComposeNode{std::move(flat)}}));
}

Map1D::Kind Map1D::kind() const { return static_cast<Kind>(node_->v.index()); }

int Map1D::stage_count() const {
    if (kind() == Kind::Compose) return static_cast<int>(std::get<ComposeNode>(node_->v).maps.size());
    return 1;
}

Map1D::Eval Map1D::eval(double x) const { return eval_node(*node_, x, 0); }

Map1D::Eval evaluate_with_derivative(const Map1D& m, double x) { return m.eval(x); }

Map1D compose(const std::vector<Map1D>& ms) { return Map1D::compose(ms); }

std::optional<double> find_monotonicity_violation(const Map1D& m, Interval iv, int grid_n) {
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid_n; ++i) {
        double x = iv.lo + (iv.hi - iv.lo) * i / (grid_n - 1);
        auto e = m.eval(x);
        if (e.derivative < 0.0 || !(e.value > prev) || std::isnan(e.derivative)) return x;
        prev = e.value;
    }
    return std::nullopt;
}

double solve_preimage(const Map1D& m, double target, Interval bracket, double tol) {
    double lo = bracket.lo, hi = bracket.hi;
    double flo = m(lo) - target, fhi = m(hi) - target;
    if (flo * fhi > 0.0)
        throw NoBracket("m(lo) - target = " + num(flo) + " and m(hi) - target = " + num(fhi) +
                        " have the same sign");
    if (auto bad = find_monotonicity_violation(m, bracket))
        throw NonMonotone("map not increasing near x = " + num(*bad) + " on the bracket grid");
    double ftol = tol * std::max(1.0, std::abs(target));
    if (std::abs(flo) <= ftol) return lo;
    if (std::abs(fhi) <= ftol) return hi;

    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 400; ++it) {
        auto e = m.eval(x);
        double f = e.value - target;
        if (std::abs(f) <= ftol) return x;
        if (f < 0.0) lo = x; else hi = x;
        double xn = (e.derivative > 0.0 && std::isfinite(e.derivative)) ? x - f / e.derivative : lo - 1.0;
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        if (xn == x || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x)))
            return xn;
        x = xn;
    }
    return x;
}

double c1_distance(const Map1D& m1, const Map1D& m2, Interval iv, int grid_n) {
    if (grid_n < 2) throw InvalidMap("c1_distance needs grid_n >= 2");
    double worst = 0.0;
    for (int i = 0; i < grid_n; ++i) {
        double x = iv.lo + (iv.hi - iv.lo) * i / (grid_n - 1);
        auto a = m1.eval(x), b = m2.eval(x);
        worst = std::max(worst, std::abs(a.value - b.value) + std::abs(a.derivative - b.derivative));
    }
    return worst;
}

BasinResult basin_converges(const Map1D& m, double x0, double target, double tol, int max_iter,
                            std::optional<Interval> chart) {
    double x = x0;
    if (std::abs(x - target) <= tol) return {BasinResult::Status::Converged, 0, x};
    for (int s = 1; s <= max_iter; ++s) {
        try {
            x = m(x);
        } catch (const DomainError&) {
            return {BasinResult::Status::Escaped, s, x};
        }
        if (!std::isfinite(x) || std::abs(x) > 1e300 || (chart && !chart->contains(x)))
            return {BasinResult::Status::Escaped, s, x};
        if (std::abs(x - target) <= tol) return {BasinResult::Status::Converged, s, x};
    }
    return {BasinResult::Status::MaxIterExceeded, max_iter, x};
}

double parabolic_increment_min(const ParabolicStep& g, double lo, double hi) {
    double best = std::min(g.increment(lo), g.increment(hi));
    auto consider = [&](double c) {
        if (c > lo && c < hi) best = std::min(best, g.increment(c));
    };
    consider(0.0);
    if (g.a3 != 0.0) consider(-2.0 / (3.0 * g.a3));
    return best;
}

long long transit_count(const ParabolicStep& g, double from, double to, long long max_steps) {
    if (!(from < to)) throw NotCrossing("transit needs from < to");
    if (!(g.delta > 0.0)) throw NotCrossing("delta must be positive, got " + num(g.delta));
    double mn = parabolic_increment_min(g, from, to);
    if (mn <= 0.0)
        throw NotCrossing("delta + x^2 + a3 x^3 reaches " + num(mn) + " on [" + num(from) + ", " + num(to) + "]");
    double x = from;
    long long n = 0;
    while (x < to) {
        x = g(x);
        if (++n > max_steps) throw NotCrossing("transit exceeded the step cap");
    }
    return n;
}

}  // namespace polylab
