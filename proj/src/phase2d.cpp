#include "polylab/phase2d.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <numeric>
#include <cstdio>
#include <limits>
#include <sstream>

#include "polylab/parallel.hpp"

namespace polylab {

namespace {

double side(double t, double lo, double hi, double b) {
    return smoothstep3((t - lo) / b) * smoothstep3((hi - t) / b);
}

double drift_profile(const CherryCell& c, double x) {
    if (c.drift == 0.0 || x <= c.drift_lo || x >= c.drift_hi) return 0.0;
    return side(x, c.drift_lo, c.drift_hi, (c.drift_hi - c.drift_lo) / 3.0);
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string px(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

}  // namespace

double smoothstep3(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    double t2 = t * t;
    return t2 * t2 * (35.0 - 84.0 * t + 70.0 * t2 - 20.0 * t2 * t);
}

double CherryCell::saddle_offset() const { return -k * (1.0 + std::sqrt(1.0 - 4.0 * areg * areg)) / 2.0; }

double CherryCell::gamma() const {
    double xs = saddle_offset(), a = areg * k;
    return (xs * xs - a * a) / (xs * xs + a * a) / lam;
}

Vec2 local_field(const CellKind& kind, const Vec2& p) {
    return std::visit(
        [&](const auto& c) -> Vec2 {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, SaddleCell>) {
                return {p.x() - c.center.x(), -c.lam * (p.y() - c.center.y())};
            } else if constexpr (std::is_same_v<T, SaddleNodeCell>) {
                double xi = p.x() - c.center.x(), eta = p.y() - c.center.y();
                return {c.eps + xi * xi + c.a3 * xi * xi * xi, c.lam0 * eta};
            } else if constexpr (std::is_same_v<T, SourceCell>) {
                return c.rate * (p - c.center);
            } else {
                double X = p.x() - c.source.x(), Y = p.y() - c.source.y();
                double a = c.areg * c.k;
                double d = X * X + Y * Y + a * a;
                return {1.0 + c.k * X / d, c.gamma() * c.k * Y / d + c.drift * drift_profile(c, p.x())};
            }
        },
        kind);
}

Vec2 PlanarField::operator()(const Vec2& p) const {
    Vec2 q = p;
    if (period > 0.0) q.x() -= period * std::floor(q.x() / period);
    Vec2 bg = background(q);
    for (const auto& c : cells) {
        if (!c.box.contains(q)) continue;
        double w = side(q.x(), c.box.x0, c.box.x1, c.blend) * side(q.y(), c.box.y0, c.box.y1, c.blend);
        if (w == 0.0) return bg;
        Vec2 loc = local_field(c.local, q);
        if (w == 1.0) return loc;
        return bg + w * (loc - bg);
    }
    return bg;
}

Eigen::Matrix2d PlanarField::jacobian(const Vec2& p, double h) const {
    Eigen::Matrix2d J;
    for (int i = 0; i < 2; ++i) {
        Vec2 e = Vec2::Zero();
        e[i] = h;
        J.col(i) = ((*this)(p + e) - (*this)(p - e)) / (2.0 * h);
    }
    return J;
}

std::vector<std::string> validate(const PlanarField& f) {
    std::vector<std::string> v;
    for (std::size_t i = 0; i < f.cells.size(); ++i) {
        const Cell& c = f.cells[i];
        std::string tag = "cell " + (c.name.empty() ? std::to_string(i) : c.name);
        if (!(c.box.width() > 0.0 && c.box.height() > 0.0)) v.push_back(tag + ": empty box");
        double lim = std::min(c.box.width(), c.box.height()) / 4.0;
        if (!(c.blend > 0.0 && c.blend < lim)) v.push_back(tag + ": blend not in (0, box size/4)");
        if (f.period > 0.0 && (c.box.x0 < 0.0 || c.box.x1 > f.period)) v.push_back(tag + ": box outside period");
        std::visit(
            [&](const auto& k) {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, SaddleCell>) {
                    if (!(k.lam > 0.0)) v.push_back(tag + ": saddle lam <= 0");
                } else if constexpr (std::is_same_v<T, SaddleNodeCell>) {
                    if (k.lam0 == 0.0) v.push_back(tag + ": saddle-node lam0 = 0");
                } else if constexpr (std::is_same_v<T, SourceCell>) {
                    if (!(k.rate > 0.0)) v.push_back(tag + ": source rate <= 0");
                } else {
                    if (!(k.lam > 0.0)) v.push_back(tag + ": cherry lam <= 0");
                    if (!(k.k > 0.0)) v.push_back(tag + ": cherry k <= 0");
                    if (!(k.areg > 0.0 && k.areg < 0.5)) v.push_back(tag + ": cherry areg not in (0, 1/2)");
                    Box core{c.box.x0 + c.blend, c.box.x1 - c.blend, c.box.y0 + c.blend, c.box.y1 - c.blend};
                    if (!core.contains(k.source) || !core.contains(k.saddle()))
                        v.push_back(tag + ": singular points outside the plateau");
                    if (k.drift != 0.0 && !(k.drift_lo < k.drift_hi && k.drift_hi < k.saddle().x()))
                        v.push_back(tag + ": drift not upstream of the saddle");
                }
            },
            c.local);
        for (std::size_t j = 0; j < i; ++j)
            if (c.box.overlaps(f.cells[j].box))
                v.push_back(tag + ": box overlaps cell " +
                            (f.cells[j].name.empty() ? std::to_string(j) : f.cells[j].name));
    }
    return v;
}

Vec2 CrossSection::normal() const {
    Vec2 d = b - a;
    return Vec2(d.y(), -d.x()) / d.norm();
}

double CrossSection::parameter(const Vec2& p) const {
    Vec2 d = b - a;
    return (p - a).dot(d) / d.squaredNorm();
}

Vec2 CrossSection::point(double coordinate) const {
    double s;
    if (chart.kind() == Map1D::Kind::Affine) {
        const auto& af = std::get<AffineNode>(chart.node().v);
        s = (coordinate - af.offset) / af.slope;
    } else {
        s = solve_preimage(chart, coordinate, Interval(0.0, 1.0));
    }
    return a + s * (b - a);
}

CrossSection CrossSection::vertical(double x, double y0, double y1, int orientation) {
    CrossSection s;
    s.a = {x, y0};
    s.b = {x, y1};
    s.orientation = orientation;
    s.chart = Map1D::affine(y1 - y0, y0);
    return s;
}

std::vector<std::string> check_transversal(const PlanarField& f, const CrossSection& s, int grid,
                                           double min_normal) {
    std::vector<std::string> v;
    int sign = 0;
    for (int i = 0; i <= grid; ++i) {
        Vec2 p = s.a + (static_cast<double>(i) / grid) * (s.b - s.a);
        double fn = f(p).dot(s.normal());
        if (std::abs(fn) < min_normal) {
            v.push_back("field tangent to section at s = " + fmt(static_cast<double>(i) / grid));
            continue;
        }
        int sg = fn > 0 ? 1 : -1;
        if (s.orientation != 0 && sg != s.orientation) {
            v.push_back("field crosses against orientation at s = " + fmt(static_cast<double>(i) / grid));
        }
        if (sign != 0 && sg != sign) v.push_back("crossing direction changes along section");
        sign = sg;
    }
    return v;
}

IntegrateOptions with_tol(double tol, double t_max, int direction) {
    IntegrateOptions o;
    o.rtol = tol;
    o.atol = {tol, tol};
    o.t_max = t_max;
    o.direction = direction;
    return o;
}

namespace {

// Dormand-Prince 5(4) with the standard continuous extension.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

constexpr double kSingular = 1e-13;

struct Dense {
    Vec2 r1, r2, r3, r4, r5;
    Vec2 at(double th) const {
        double th1 = 1.0 - th;
        return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
    }
};

}  // namespace

Trajectory flow(const PlanarField& f, const Vec2& p0, const IntegrateOptions& opt,
                const std::vector<CrossSection>& sections, const std::optional<Box>& region, bool record) {
    const double dir = opt.direction < 0 ? -1.0 : 1.0;
    auto F = [&](const Vec2& p) -> Vec2 { return dir * f(p); };

    Trajectory tr;
    Vec2 y = p0;
    Vec2 k1 = F(y);
    if (k1.norm() < kSingular) throw SingularityHit("start point is singular");
    double t = 0.0;
    double h = std::min(opt.h0, opt.h_max);
    if (record) {
        tr.t.push_back(0.0);
        tr.p.push_back(y);
    }
    std::vector<double> g_prev(sections.size());
    for (std::size_t i = 0; i < sections.size(); ++i) g_prev[i] = sections[i].signed_distance(y);

    bool last_rejected = false;
    while (t < opt.t_max) {
        if (tr.steps + tr.rejected >= opt.max_steps) throw StepFailed("step budget exhausted");
        if (h < 1e-14 * std::max(1.0, std::abs(t))) throw StepUnderflow("step size underflow at t = " + fmt(t));
        if (t + h > opt.t_max) h = opt.t_max - t;

        Vec2 k2 = F(y + h * a21 * k1);
        Vec2 k3 = F(y + h * (a31 * k1 + a32 * k2));
        Vec2 k4 = F(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        Vec2 k5 = F(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        Vec2 k6 = F(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        Vec2 y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        Vec2 k7 = F(y1);
        Vec2 err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double en = 0.0;
        for (int i = 0; i < 2; ++i) {
            double sc = opt.atol[i] + opt.rtol * std::max(std::abs(y[i]), std::abs(y1[i]));
            sc = std::max(sc, std::numeric_limits<double>::min());
            en += (err[i] / sc) * (err[i] / sc);
        }
        en = std::sqrt(en / 2.0);
        if (!std::isfinite(en)) {
            ++tr.rejected;
            h *= 0.2;
            last_rejected = true;
            continue;
        }
        double fac = 0.9 * std::pow(std::max(en, 1e-10), -0.2);
        if (en > 1.0) {
            ++tr.rejected;
            h *= std::max(0.2, fac);
            last_rejected = true;
            continue;
        }
        ++tr.steps;
        Dense dn;
        dn.r1 = y;
        dn.r2 = y1 - y;
        dn.r3 = h * k1 - dn.r2;
        dn.r4 = dn.r2 - h * k7 - dn.r3;
        dn.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

        for (std::size_t i = 0; i < sections.size(); ++i) {
            const CrossSection& s = sections[i];
            double g1 = s.signed_distance(y1);
            double g0 = g_prev[i];
            g_prev[i] = g1;
            if (!((g0 < 0.0 && g1 >= 0.0) || (g0 > 0.0 && g1 <= 0.0))) continue;
            double lo = 0.0, hi = 1.0, glo = g0, th = 1.0, gm = g1;
            for (int it = 0; it < 200 && gm != 0.0; ++it) {
                th = 0.5 * (lo + hi);
                gm = s.signed_distance(dn.at(th));
                if (std::abs(gm) <= 1e-14 || hi - lo < 1e-17) break;
                if ((gm < 0.0) == (glo < 0.0)) {
                    lo = th;
                    glo = gm;
                } else {
                    hi = th;
                }
            }
            Vec2 q = dn.at(th);
            double sp = s.parameter(q);
            if (sp < 0.0 || sp > 1.0) continue;
            if (s.orientation != 0) {
                double fn = f(q).dot(s.normal());
                if ((fn > 0 ? 1 : -1) != s.orientation) continue;
            }
            Crossing c;
            c.section = static_cast<int>(i);
            c.time = t + th * h;
            c.point = q;
            c.coordinate = s.chart(sp);
            c.residual = std::abs(s.signed_distance(q));
            tr.crossings.push_back(c);
        }
        t += h;
        y = y1;
        k1 = k7;
        if (record) {
            if (!tr.crossings.empty()) {
                tr.t.push_back(tr.crossings.back().time);
                tr.p.push_back(tr.crossings.back().point);
            } else {
                tr.t.push_back(t);
                tr.p.push_back(y);
            }
        }
        if (!tr.crossings.empty()) break;
        if (k7.norm() < kSingular) throw SingularityHit("trajectory reached an equilibrium near (" + fmt(y.x()) +
                                                        ", " + fmt(y.y()) + ")");
        if (region && !region->contains(y)) {
            tr.left_region = true;
            break;
        }
        double hn = h * std::min(5.0, fac);
        if (last_rejected) hn = std::min(hn, h);
        last_rejected = false;
        h = std::min(hn, opt.h_max);
    }
    return tr;
}

std::optional<PoincareSample> integrate_to_section(const PlanarField& f, const Vec2& p0,
                                                   const CrossSection& target, const IntegrateOptions& opt) {
    Trajectory tr = flow(f, p0, opt, {target}, {}, false);
    if (tr.crossings.empty()) return std::nullopt;
    const Crossing& c = tr.crossings.front();
    PoincareSample s;
    s.output = c.coordinate;
    s.time = c.time;
    s.point = c.point;
    s.steps = tr.steps;
    s.rejected = tr.rejected;
    s.residual = c.residual;
    return s;
}

std::optional<PoincareSample> integrate_to_section(const PlanarField& f, const Vec2& p0,
                                                   const CrossSection& target, double tol, double t_max) {
    if (!(tol >= 1e-14 && tol <= 1e-6)) throw DegenerateConfig("tol must lie in [1e-14, 1e-6]");
    return integrate_to_section(f, p0, target, with_tol(tol, t_max));
}

PoincareTable poincare_table(const PlanarField& f, const CrossSection& src, const CrossSection& dst,
                             const std::vector<double>& inputs, const IntegrateOptions& opt, int threads) {
    int n = static_cast<int>(inputs.size());
    std::vector<std::optional<PoincareSample>> out(n);
    std::vector<std::string> why(n);
    parallel_for(
        n,
        [&](int i) {
            try {
                out[i] = integrate_to_section(f, src.point(inputs[i]), dst, opt);
                if (!out[i]) why[i] = "NoCrossing";
                else out[i]->input = inputs[i];
            } catch (const Error& e) {
                why[i] = e.what();
            }
        },
        threads);
    PoincareTable t;
    for (int i = 0; i < n; ++i) {
        if (out[i]) t.samples.push_back(*out[i]);
        else t.failures.emplace_back(inputs[i], why[i]);
    }
    return t;
}

bool monotone_increasing(const PoincareTable& t) {
    std::vector<PoincareSample> s = t.samples;
    std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.input < b.input; });
    for (std::size_t i = 1; i < s.size(); ++i)
        if (!(s[i].output > s[i - 1].output)) return false;
    return true;
}

DulacFit fit_dulac_exponent(const std::vector<PoincareSample>& samples, double anchor, double base) {
    int right = 0, left = 0;
    for (const auto& s : samples) {
        if (s.input > anchor) ++right;
        else if (s.input < anchor) ++left;
    }
    int sg = right >= left ? 1 : -1;
    std::vector<double> lx, ly;
    for (const auto& s : samples) {
        double din = sg * (s.input - anchor);
        if (din <= 0.0) continue;
        double dout = sg * (s.output - base);
        if (!(dout > 0.0)) throw NonPositiveDifferences("P(x) - base has the wrong sign at x = " + fmt(s.input));
        lx.push_back(std::log(din));
        ly.push_back(std::log(dout));
    }
    int m = static_cast<int>(lx.size());
    if (m < 8) throw BadSpan("need 8 samples on one side of the anchor, have " + std::to_string(m));
    double span = *std::max_element(lx.begin(), lx.end()) - *std::min_element(lx.begin(), lx.end());
    if (span < 2.0 * std::log(10.0) - 1e-6) throw BadSpan("samples span less than two decades");
    double mx = 0, my = 0;
    for (int i = 0; i < m; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= m;
    my /= m;
    double sxy = 0, sxx = 0;
    for (int i = 0; i < m; ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    DulacFit r;
    r.lam = sxy / sxx;
    double lc = my - r.lam * mx;
    r.coeff = std::exp(lc);
    for (int i = 0; i < m; ++i) r.residual = std::max(r.residual, std::abs(ly[i] - lc - r.lam * lx[i]));
    r.used = m;
    return r;
}

Vec2 locate_saddle(const PlanarField& f, const Box& box) {
    Vec2 p = box.center();
    std::vector<double> trace;
    for (int it = 0; it < 60; ++it) {
        Vec2 v = f(p);
        trace.push_back(v.norm());
        if (v.norm() < 1e-15) break;
        Eigen::Matrix2d J = f.jacobian(p);
        Vec2 dp = J.fullPivLu().solve(-v);
        if (!dp.allFinite()) throw NewtonDiverged("singular Jacobian", trace);
        p += dp;
        if (!box.contains(p)) throw NewtonDiverged("iterate left the saddle box", trace);
        if (dp.norm() < 1e-15 * std::max(1.0, p.norm())) break;
    }
    if (f(p).norm() > 1e-11) throw NewtonDiverged("no zero found in the saddle box", trace);
    Eigen::EigenSolver<Eigen::Matrix2d> es(f.jacobian(p));
    auto ev = es.eigenvalues();
    if (std::abs(ev[0].imag()) > 0.0 || ev[0].real() * ev[1].real() >= 0.0)
        throw NotASaddle("eigenvalues " + fmt(ev[0].real()) + ", " + fmt(ev[1].real()));
    return p;
}

SeparatrixShot shoot_separatrix(const PlanarField& f, const Box& saddle_box, SepKind which, int branch,
                                double horizon, const std::vector<CrossSection>& sections, double tol) {
    SeparatrixShot s;
    s.saddle = locate_saddle(f, saddle_box);
    Eigen::EigenSolver<Eigen::Matrix2d> es(f.jacobian(s.saddle));
    int is = es.eigenvalues()[0].real() < 0.0 ? 0 : 1;
    int iu = 1 - is;
    s.eigenvalues = {es.eigenvalues()[is].real(), es.eigenvalues()[iu].real()};
    Vec2 v = es.eigenvectors().col(which == SepKind::Stable ? is : iu).real();
    v.normalize();
    int big = std::abs(v.x()) >= std::abs(v.y()) ? 0 : 1;
    if (v[big] < 0.0) v = -v;
    s.direction = (branch >= 0 ? 1.0 : -1.0) * v;
    IntegrateOptions opt = with_tol(tol, horizon, which == SepKind::Stable ? -1 : 1);
    s.path = flow(f, s.saddle + 1e-8 * s.direction, opt, sections);
    return s;
}

Box LipsAssembly::saddle_box(int cell) const {
    const auto& c = std::get<CherryCell>(field.cells.at(cell).local);
    Vec2 p = c.saddle();
    double r = 0.3 * c.k;
    return {p.x() - r, p.x() + r, p.y() - r, p.y() + r};
}

namespace {

// Lineup of the lips: S1 | Gamma_1 | lens | L_1 .. L_{n+1} | Gamma_2 | S2, bridge at y = 1/2.
constexpr double kBridge = 0.5;
constexpr double kChartLo = -0.25, kChartHi = 1.25;

struct Band {
    double lo, hi, blend;
};

Band fit_band(const std::string& name, double r_lo, double r_hi, const std::vector<double>& excluded,
              double max_blend) {
    double lo = kChartLo, hi = kChartHi;
    for (double e : excluded) {
        if (e < r_lo) lo = std::max(lo, e);
        else if (e > r_hi) hi = std::min(hi, e);
        else throw PlacementFailed(name, e, r_lo);
    }
    double gl = r_lo - lo, gh = hi - r_hi;
    if (gl < 2e-3) throw PlacementFailed(name + " (no room below)", lo, r_lo);
    if (gh < 2e-3) throw PlacementFailed(name + " (no room above)", hi, r_hi);
    Band b;
    b.lo = lo + 0.25 * gl;
    b.hi = hi - 0.25 * gh;
    b.blend = std::min({max_blend, 0.3 * gl, 0.3 * gh, 0.24 * (b.hi - b.lo)});
    return b;
}

// smallest room left around [r_lo, r_hi], negative if an excluded height falls inside
double band_margin(double r_lo, double r_hi, const std::vector<double>& excluded) {
    double lo = kChartLo, hi = kChartHi;
    for (double e : excluded) {
        if (e < r_lo) lo = std::max(lo, e);
        else if (e > r_hi) hi = std::min(hi, e);
        else return -1.0;
    }
    return std::min(r_lo - lo, hi - r_hi);
}

double landing(const PlanarField& f, const Vec2& saddle, const Vec2& dir, int time_dir, const CrossSection& s,
               double tol) {
    Trajectory tr = flow(f, saddle + 1e-8 * dir, with_tol(tol, 80.0, time_dir), {s}, {}, false);
    if (tr.crossings.empty()) return std::numeric_limits<double>::quiet_NaN();
    return tr.crossings.front().coordinate;
}

template <class F>
double solve_monotone(F&& g, double lo, double hi, const std::string& name, double wanted) {
    double glo = g(lo), ghi = g(hi);
    for (int i = 0; i < 8 && std::isfinite(glo) && std::isfinite(ghi) && glo * ghi > 0.0; ++i) {
        double w = hi - lo;
        if (std::abs(glo) < std::abs(ghi)) {
            lo -= w;
            glo = g(lo);
        } else {
            hi += w;
            ghi = g(hi);
        }
    }
    if (!(std::isfinite(glo) && std::isfinite(ghi)) || glo * ghi > 0.0)
        throw PlacementFailed(name, std::isfinite(glo) ? glo + wanted : ghi + wanted, wanted);
    if (glo == 0.0) return lo;
    if (ghi == 0.0) return hi;
    std::uintmax_t it = 80;
    auto r = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, boost::math::tools::eps_tolerance<double>(46),
                                               it);
    return 0.5 * (r.first + r.second);
}

}  // namespace

LipsAssembly assemble_lips(const LEGModel& m, const LipsOptions& o) {
    auto viol = validate(m);
    if (!viol.empty()) throw ModelInvalid(viol);
    if (m.n < 0 || m.n > 2) throw DegenerateConfig("assemble_lips supports n = 0, 1, 2");

    LipsAssembly a;
    a.n = m.n;
    a.lam = m.lam;
    a.x = m.x;
    a.y = m.y;
    a.z = m.z;
    const int N = m.n + 1;
    const double W = o.column_width, G = o.column_gap;

    double g1x = 2.05, col0 = 2.1;
    double last_right = col0 + (N + 1) * (W + G) - G;
    double g2x = last_right + 0.05;
    double s2c = g2x + 1.05;
    a.gamma1 = CrossSection::vertical(g1x, kChartLo, kChartHi, 1);
    a.gamma2 = CrossSection::vertical(g2x, kChartLo, kChartHi, 1);

    PlanarField& F = a.field;
    F.period = s2c + 1.1;
    F.cells.push_back({"S1", {0.0, 2.0, kBridge - 1.0, kBridge + 1.0}, SaddleNodeCell{0.0, 0.0, 1.0, {1.0, kBridge}},
                       0.2});
    F.cells.push_back({"S2", {s2c - 1.0, s2c + 1.0, kBridge - 1.0, kBridge + 1.0},
                       SaddleNodeCell{0.0, 0.0, -1.0, {s2c, kBridge}}, 0.2});
    a.s1 = 0;
    a.s2 = 1;

    auto column = [&](int j) { return col0 + j * (W + G); };
    const Vec2 up(0.0, 1.0), down(0.0, -1.0), back(-1.0, 0.0);

    // lens: saddle R with incoming separatrix s at x_0
    {
        std::vector<double> excl(m.x.begin() + 1, m.x.end());
        double x0 = m.x[0];
        double lo = kChartLo, hi = kChartHi;
        for (double e : excl) {
            if (e < x0) lo = std::max(lo, e);
            else hi = std::min(hi, e);
        }
        double kl = std::min(0.01, 0.05 * std::min(x0 - lo, hi - x0));
        Band b = fit_band("lens", x0 - 2.5 * kl, x0 + 2.5 * kl, excl, o.max_blend);
        CherryCell c;
        c.lam = o.lens_lam;
        c.k = kl;
        c.source = {column(0) + 0.6 * W, x0};
        F.cells.push_back({"lens", {column(0), column(0) + W, b.lo, b.hi}, c, b.blend});
        a.lens = static_cast<int>(F.cells.size()) - 1;
        a.marked.push_back({"s", a.lens, SepKind::Stable, -1, 0, x0});
    }

    // Column order of L_1 .. L_N: a cell's box must miss the incoming heights of
    // the cells to its right and the exit heights of the cells to its left.
    auto excluded = [&](const std::vector<int>& order, int pos) {
        std::vector<double> e;
        for (int q = pos + 1; q < N; ++q) e.push_back(m.x[order[q]]);
        for (int q = 0; q < pos; ++q) {
            e.push_back(m.yk(order[q]));
            e.push_back(m.zk(order[q]));
        }
        return e;
    };
    std::vector<int> order(N), perm(N);
    std::iota(perm.begin(), perm.end(), 1);
    order = perm;
    double best = -std::numeric_limits<double>::infinity();
    do {
        double margin = std::numeric_limits<double>::infinity();
        for (int pos = 0; pos < N; ++pos) {
            int k = perm[pos];
            margin = std::min(margin, band_margin(std::min(m.x[k], m.yk(k)), std::max(m.x[k], m.zk(k)),
                                                  excluded(perm, pos)));
        }
        if (margin > best + 1e-12) {
            best = margin;
            order = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    a.cherry.assign(N, -1);
    for (int pos = 0; pos < N; ++pos) {
        int k = order[pos];
        std::string name = "L_" + std::to_string(k);
        double xk = m.x[k], yk = m.yk(k), zk = m.zk(k);
        Band b = fit_band(name, std::min(xk, yk), std::max(xk, zk), excluded(order, pos), o.max_blend);
        double cl = column(pos + 1);
        Cell cell{name, {cl, cl + W, b.lo, b.hi}, CherryCell{}, b.blend};
        CherryCell c;
        c.lam = m.lamk(k);
        c.source = {cl + 0.6 * W, 0.5 * (yk + zk)};

        PlanarField trial = F;
        trial.cells.push_back(cell);
        auto with = [&](const CherryCell& cc) -> const PlanarField& {
            std::get<CherryCell>(trial.cells.back().local) = cc;
            return trial;
        };
        auto exits = [&](const CherryCell& cc) {
            const PlanarField& f = with(cc);
            return std::pair{landing(f, cc.saddle(), down, 1, a.gamma2, o.tol),
                             landing(f, cc.saddle(), up, 1, a.gamma2, o.tol)};
        };

        for (int round = 0; round < 4; ++round) {
            double gap = zk - yk;
            c.drift = 0.0;
            c.k = solve_monotone(
                [&](double kk) {
                    CherryCell cc = c;
                    cc.k = kk;
                    auto [lo, hi] = exits(cc);
                    return (hi - lo) - gap;
                },
                0.05 * gap, std::min(0.6 * gap, 0.25 * W), name + " gap", gap);

            c.drift_lo = cl + b.blend;
            c.drift_hi = c.saddle().x() - std::max(0.05, 0.5 * c.k);
            if (c.drift_hi - c.drift_lo < 0.1) throw PlacementFailed(name + " drift region", c.drift_hi, c.drift_lo);
            double shift = c.source.y() - xk;
            double dm = 2.0 * std::abs(shift) / (c.drift_hi - c.drift_lo) + 0.02;
            if (std::abs(shift) > 1e-15) {
                c.drift = solve_monotone(
                    [&](double d) {
                        CherryCell cc = c;
                        cc.drift = d;
                        return landing(with(cc), cc.saddle(), back, -1, a.gamma1, o.tol) - xk;
                    },
                    -dm, dm, name + " incoming", xk);
            }
            auto [lo, hi] = exits(c);
            double e_mid = 0.5 * (yk + zk) - 0.5 * (lo + hi);
            double e_gap = (zk - yk) - (hi - lo);
            if (std::abs(e_mid) < o.solve_tol && std::abs(e_gap) < o.solve_tol) break;
            c.source.y() += e_mid;
        }
        cell.local = c;
        F.cells.push_back(cell);
        int idx = static_cast<int>(F.cells.size()) - 1;
        a.cherry[k - 1] = idx;
        a.marked.push_back({"l^s_" + std::to_string(k), idx, SepKind::Stable, -1, 0, xk});
        a.marked.push_back({"u_" + std::to_string(k), idx, SepKind::Unstable, -1, 1, yk});
        a.marked.push_back({"l^u_" + std::to_string(k), idx, SepKind::Unstable, 1, 1, zk});
    }

    auto fv = validate(F);
    if (!fv.empty()) throw ModelInvalid(fv);
    for (const auto& mk : a.marked) {
        const auto& c = std::get<CherryCell>(F.cells[mk.cell].local);
        Vec2 dir = mk.which == SepKind::Stable ? back : (mk.branch > 0 ? up : down);
        double got = landing(F, c.saddle(), dir, mk.which == SepKind::Stable ? -1 : 1,
                             mk.section == 0 ? a.gamma1 : a.gamma2, o.tol);
        if (!(std::abs(got - mk.blueprint) <= o.placement_tol))
            throw PlacementFailed(F.cells[mk.cell].name + " " + mk.name, got, mk.blueprint);
    }
    return a;
}

std::vector<Landing> landing_audit(const LipsAssembly& a, int threads) {
    std::vector<Landing> out(a.marked.size());
    parallel_for(
        static_cast<int>(a.marked.size()),
        [&](int i) {
            const auto& mk = a.marked[i];
            const CrossSection& s = mk.section == 0 ? a.gamma1 : a.gamma2;
            auto shot = shoot_separatrix(a.field, a.saddle_box(mk.cell), mk.which, mk.branch, 80.0, {s});
            Landing l;
            l.name = mk.name;
            l.blueprint = mk.blueprint;
            l.achieved = shot.path.crossings.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                     : shot.path.crossings.front().coordinate;
            l.error = std::isfinite(l.achieved) ? std::abs(l.achieved - l.blueprint)
                                                : std::numeric_limits<double>::infinity();
            out[i] = l;
        },
        threads);
    return out;
}

std::vector<DulacFit> lips_dulac_fits(const LipsAssembly& a, double d_lo, double d_hi, int samples, int threads) {
    auto audit = landing_audit(a, threads);
    auto find = [&](const std::string& name) {
        for (const auto& l : audit)
            if (l.name == name) return l.achieved;
        throw DegenerateConfig("no marked separatrix " + name);
    };
    std::vector<DulacFit> fits;
    for (int k = 1; k <= a.n + 1; ++k) {
        double xk = find("l^s_" + std::to_string(k));
        double zk = find("l^u_" + std::to_string(k));
        std::vector<double> in;
        for (int i = 0; i < samples; ++i)
            in.push_back(xk + d_lo * std::pow(d_hi / d_lo, static_cast<double>(i) / (samples - 1)));
        auto table = poincare_table(a.field, a.gamma1, a.gamma2, in, with_tol(1e-13, 80.0), threads);
        fits.push_back(fit_dulac_exponent(table.samples, xk, zk));
    }
    return fits;
}

PlanarField saddle_node_field(const SaddleNodeUnfolding& u) {
    PlanarField f;
    f.cells.push_back({"S", {-1.4, 1.4, -1.4, 1.4}, SaddleNodeCell{u.eps, u.a3, u.lam0, {0.0, 0.0}}, 0.3});
    return f;
}

std::vector<PassageEstimate> measure_passage(const SaddleNodeUnfolding& shape, const std::vector<double>& eps,
                                             int threads) {
    for (double e : eps)
        if (!(e >= 1e-4 && e <= 1.0)) throw DegenerateConfig("passage eps must lie in [1e-4, 1]");
    if (shape.lam1 != 0.0) throw DegenerateConfig("the planar cell has constant lambda");
    std::vector<PassageEstimate> out(eps.size());
    parallel_for(
        static_cast<int>(eps.size()),
        [&](int i) {
            SaddleNodeUnfolding u = shape;
            u.eps = eps[i];
            PlanarField f = saddle_node_field(u);
            CrossSection dst = CrossSection::vertical(1.0, -1.0, 1.0, 1);
            double ref = log_passage_coefficient(u);
            // keep both ends inside the linear core |eta| < 1.1
            double scale = 0.5 * std::min(1.0, std::exp(-ref));
            IntegrateOptions opt;
            opt.rtol = 1e-13;
            opt.atol = {1e-13, 0.0};
            opt.t_max = 1e4;
            opt.h_max = 0.05;
            std::vector<double> xs, ys;
            for (int j = 1; j <= 4; ++j) {
                double yin = 0.25 * j * scale;
                auto s = integrate_to_section(f, Vec2(-1.0, yin), dst, opt);
                if (!s) throw SingularTransit("no passage at eps = " + fmt(u.eps));
                xs.push_back(yin);
                ys.push_back(s->output);
            }
            double sxy = 0, sxx = 0, mx = 0, my = 0;
            for (std::size_t j = 0; j < xs.size(); ++j) {
                mx += xs[j];
                my += ys[j];
            }
            mx /= xs.size();
            my /= xs.size();
            for (std::size_t j = 0; j < xs.size(); ++j) {
                sxy += (xs[j] - mx) * (ys[j] - my);
                sxx += (xs[j] - mx) * (xs[j] - mx);
            }
            PassageEstimate p;
            p.eps = u.eps;
            p.log_c = std::log(sxy / sxx);
            p.reference = ref;
            p.rel_error = std::abs(p.log_c - ref) / std::abs(ref);
            out[i] = p;
        },
        threads);
    return out;
}

// ---- serialization ----

namespace {

json vec_json(const Vec2& v) { return json::array({hexfloat(v.x()), hexfloat(v.y())}); }

Vec2 vec_from(const json& j, const std::string& key, const std::string& ptr) {
    auto v = real_list(j, key, ptr);
    if (v.size() != 2) throw ConfigError(ptr + "/" + key, "expected two reals");
    return {v[0], v[1]};
}

json cell_json(const Cell& c) {
    json j;
    j["name"] = c.name;
    j["box"] = json::array({hexfloat(c.box.x0), hexfloat(c.box.x1), hexfloat(c.box.y0), hexfloat(c.box.y1)});
    j["blend"] = hexfloat(c.blend);
    std::visit(
        [&](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, SaddleCell>) {
                j["kind"] = "saddle";
                j["lam"] = hexfloat(k.lam);
                j["center"] = vec_json(k.center);
            } else if constexpr (std::is_same_v<T, SaddleNodeCell>) {
                j["kind"] = "saddle-node";
                j["eps"] = hexfloat(k.eps);
                j["a3"] = hexfloat(k.a3);
                j["lam0"] = hexfloat(k.lam0);
                j["center"] = vec_json(k.center);
            } else if constexpr (std::is_same_v<T, SourceCell>) {
                j["kind"] = "source";
                j["rate"] = hexfloat(k.rate);
                j["center"] = vec_json(k.center);
            } else {
                j["kind"] = "cherry";
                j["lam"] = hexfloat(k.lam);
                j["source"] = vec_json(k.source);
                j["k"] = hexfloat(k.k);
                j["areg"] = hexfloat(k.areg);
                j["drift"] = hexfloat(k.drift);
                j["drift_range"] = json::array({hexfloat(k.drift_lo), hexfloat(k.drift_hi)});
            }
        },
        c.local);
    return j;
}

Cell cell_from(const json& j, const std::string& ptr) {
    Cell c;
    c.name = j.value("name", "");
    auto bx = real_list(j, "box", ptr);
    if (bx.size() != 4) throw ConfigError(ptr + "/box", "expected [x0, x1, y0, y1]");
    c.box = {bx[0], bx[1], bx[2], bx[3]};
    c.blend = real_field(j, "blend", ptr);
    const json& kj = field(j, "kind", ptr);
    if (!kj.is_string()) throw ConfigError(ptr + "/kind", "expected a string");
    std::string kind = kj.get<std::string>();
    if (kind == "saddle") {
        c.local = SaddleCell{real_field(j, "lam", ptr), vec_from(j, "center", ptr)};
    } else if (kind == "saddle-node") {
        c.local = SaddleNodeCell{real_field(j, "eps", ptr), real_field(j, "a3", ptr), real_field(j, "lam0", ptr),
                                 vec_from(j, "center", ptr)};
    } else if (kind == "source") {
        c.local = SourceCell{real_field(j, "rate", ptr), vec_from(j, "center", ptr)};
    } else if (kind == "cherry") {
        CherryCell k;
        k.lam = real_field(j, "lam", ptr);
        k.source = vec_from(j, "source", ptr);
        k.k = real_field(j, "k", ptr);
        k.areg = real_field(j, "areg", ptr);
        k.drift = real_field(j, "drift", ptr);
        Vec2 dr = vec_from(j, "drift_range", ptr);
        k.drift_lo = dr.x();
        k.drift_hi = dr.y();
        c.local = k;
    } else {
        throw ConfigError(ptr + "/kind", "unknown cell kind '" + kind + "'");
    }
    return c;
}

json section_json(const CrossSection& s) {
    json j;
    j["a"] = vec_json(s.a);
    j["b"] = vec_json(s.b);
    j["orientation"] = s.orientation;
    j["chart"] = to_json(s.chart);
    return j;
}

CrossSection section_from(const json& j, const std::string& ptr) {
    CrossSection s;
    s.a = vec_from(j, "a", ptr);
    s.b = vec_from(j, "b", ptr);
    s.orientation = int_field(j, "orientation", ptr);
    s.chart = map_from_json(field(j, "chart", ptr), ptr + "/chart");
    return s;
}

}  // namespace

json to_json(const PlanarField& f) {
    json j;
    j["A"] = json::array({json::array({hexfloat(f.A(0, 0)), hexfloat(f.A(0, 1))}),
                          json::array({hexfloat(f.A(1, 0)), hexfloat(f.A(1, 1))})});
    j["b"] = vec_json(f.b);
    j["period"] = hexfloat(f.period);
    j["cells"] = json::array();
    for (const auto& c : f.cells) j["cells"].push_back(cell_json(c));
    return j;
}

PlanarField planar_field_from_json(const json& j, const std::string& ptr) {
    PlanarField f;
    const json& A = field(j, "A", ptr);
    if (!A.is_array() || A.size() != 2) throw ConfigError(ptr + "/A", "expected a 2x2 matrix");
    for (int r = 0; r < 2; ++r) {
        if (!A[r].is_array() || A[r].size() != 2) throw ConfigError(ptr + "/A/" + std::to_string(r), "expected 2 reals");
        for (int c = 0; c < 2; ++c) f.A(r, c) = read_real(A[r][c], ptr + "/A/" + std::to_string(r) + "/" + std::to_string(c));
    }
    f.b = vec_from(j, "b", ptr);
    f.period = real_field(j, "period", ptr);
    const json& cs = field(j, "cells", ptr);
    if (!cs.is_array()) throw ConfigError(ptr + "/cells", "expected an array");
    for (std::size_t i = 0; i < cs.size(); ++i) f.cells.push_back(cell_from(cs[i], ptr + "/cells/" + std::to_string(i)));
    return f;
}

json to_json(const LipsAssembly& a) {
    json j;
    j["n"] = a.n;
    j["field"] = to_json(a.field);
    j["gamma1"] = section_json(a.gamma1);
    j["gamma2"] = section_json(a.gamma2);
    j["s1"] = a.s1;
    j["s2"] = a.s2;
    j["lens"] = a.lens;
    j["cherry"] = a.cherry;
    auto reals = [](const std::vector<double>& v) {
        json r = json::array();
        for (double x : v) r.push_back(hexfloat(x));
        return r;
    };
    j["lam"] = reals(a.lam);
    j["x"] = reals(a.x);
    j["y"] = reals(a.y);
    j["z"] = reals(a.z);
    j["marked"] = json::array();
    for (const auto& m : a.marked)
        j["marked"].push_back({{"name", m.name},
                               {"cell", m.cell},
                               {"which", m.which == SepKind::Stable ? "stable" : "unstable"},
                               {"branch", m.branch},
                               {"section", m.section},
                               {"blueprint", hexfloat(m.blueprint)}});
    return j;
}

LipsAssembly lips_from_json(const json& j, const std::string& ptr) {
    LipsAssembly a;
    a.n = int_field(j, "n", ptr);
    a.field = planar_field_from_json(field(j, "field", ptr), ptr + "/field");
    a.gamma1 = section_from(field(j, "gamma1", ptr), ptr + "/gamma1");
    a.gamma2 = section_from(field(j, "gamma2", ptr), ptr + "/gamma2");
    a.s1 = int_field(j, "s1", ptr);
    a.s2 = int_field(j, "s2", ptr);
    a.lens = int_field(j, "lens", ptr);
    const json& ch = field(j, "cherry", ptr);
    for (const auto& c : ch) a.cherry.push_back(c.get<int>());
    a.lam = real_list(j, "lam", ptr);
    a.x = real_list(j, "x", ptr);
    a.y = real_list(j, "y", ptr);
    a.z = real_list(j, "z", ptr);
    const json& mk = field(j, "marked", ptr);
    int ncell = static_cast<int>(a.field.cells.size());
    for (std::size_t i = 0; i < mk.size(); ++i) {
        std::string p = ptr + "/marked/" + std::to_string(i);
        MarkedSeparatrix m;
        m.name = field(mk[i], "name", p).get<std::string>();
        m.cell = int_field(mk[i], "cell", p);
        if (m.cell < 0 || m.cell >= ncell || !std::holds_alternative<CherryCell>(a.field.cells[m.cell].local))
            throw ConfigError(p + "/cell", "not a saddle-carrying cell");
        m.which = field(mk[i], "which", p).get<std::string>() == "stable" ? SepKind::Stable : SepKind::Unstable;
        m.branch = int_field(mk[i], "branch", p);
        m.section = int_field(mk[i], "section", p);
        m.blueprint = real_field(mk[i], "blueprint", p);
        a.marked.push_back(m);
    }
    return a;
}

std::string trajectory_csv(const Trajectory& t) {
    std::ostringstream os;
    os << "t,x,y\n";
    for (std::size_t i = 0; i < t.p.size(); ++i)
        os << fmt(t.t[i]) << ',' << fmt(t.p[i].x()) << ',' << fmt(t.p[i].y()) << '\n';
    return os.str();
}

std::vector<MarkedPath> lips_separatrices(const LipsAssembly& a) {
    std::vector<MarkedPath> out;
    for (const auto& mk : a.marked) {
        const CrossSection& s = mk.section == 0 ? a.gamma1 : a.gamma2;
        auto shot = shoot_separatrix(a.field, a.saddle_box(mk.cell), mk.which, mk.branch, 80.0, {s});
        out.push_back({mk.name, shot.path.p});
    }
    return out;
}

std::string portrait_svg(const PlanarField& f, const Box& region, const std::vector<MarkedPath>& marked,
                         const PortraitOptions& opt) {
    int W = opt.width;
    int H = std::max(1, static_cast<int>(std::lround(W * region.height() / region.width())));
    auto X = [&](double x) { return px((x - region.x0) / region.width() * W); };
    auto Y = [&](double y) { return px((region.y1 - y) / region.height() * H); };
    auto poly = [&](const std::vector<Vec2>& pts) {
        std::string s;
        for (const auto& p : pts) {
            if (!s.empty()) s += ' ';
            s += X(p.x()) + "," + Y(p.y());
        }
        return s;
    };

    std::ostringstream os;
    os << "<!-- " << opt.version << " -->\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
       << W << ' ' << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (const auto& c : f.cells) {
        os << "<rect class=\"cell\" x=\"" << X(c.box.x0) << "\" y=\"" << Y(c.box.y1) << "\" width=\""
           << px(c.box.width() / region.width() * W) << "\" height=\"" << px(c.box.height() / region.height() * H)
           << "\" fill=\"none\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n";
    }
    IntegrateOptions io = with_tol(1e-8, opt.t_max);
    io.h_max = 0.02;
    for (int i = 0; i < opt.streamlines; ++i) {
        double y = region.y0 + region.height() * (i + 0.5) / opt.streamlines;
        try {
            Trajectory t = flow(f, Vec2(region.x0 + 1e-9, y), io, {}, region);
            os << "<polyline class=\"stream\" fill=\"none\" stroke=\"#4a7ab0\" stroke-width=\"0.8\" points=\""
               << poly(t.p) << "\"/>\n";
        } catch (const Error&) {
        }
    }
    for (const auto& c : f.cells) {
        std::vector<Vec2> pts;
        std::visit(
            [&](const auto& k) {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, CherryCell>) {
                    pts = {k.saddle(), k.source};
                } else {
                    pts = {k.center};
                }
            },
            c.local);
        for (const auto& p : pts)
            os << "<circle class=\"singular\" cx=\"" << X(p.x()) << "\" cy=\"" << Y(p.y())
               << "\" r=\"2.5\" fill=\"#c03020\"/>\n";
    }
    for (const auto& m : marked)
        os << "<polyline class=\"separatrix\" data-name=\"" << m.name
           << "\" fill=\"none\" stroke=\"#c03020\" stroke-width=\"1.6\" points=\"" << poly(m.points) << "\"/>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace polylab
