#include "polylab/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace polylab {

namespace {

std::string num(double x) {
    std::ostringstream os;
    os.precision(10);
    os << x;
    return os.str();
}

double inc(const std::vector<Poly>& v, std::size_t i, const std::vector<double>& a) {
    if (i >= v.size() || v[i].empty()) return 0.0;
    return v[i](a);
}

double inc(const Poly& p, const std::vector<double>& a) { return p.empty() ? 0.0 : p(a); }

void check_polys(const std::vector<Poly>& v, std::size_t expect, int k, const std::string& name,
                 std::vector<std::string>& out) {
    if (!v.empty() && v.size() != expect)
        out.push_back(name + " dependence has " + std::to_string(v.size()) + " entries, expected " +
                      std::to_string(expect));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i].empty()) continue;
        if (v[i].dim() != k) out.push_back(name + "[" + std::to_string(i) + "] dependence has wrong dimension");
        if (v[i].degree() > 3) out.push_back(name + "[" + std::to_string(i) + "] dependence degree above 3");
    }
}

// z + C (x - x0)^lam as a Map1D
Map1D germ(double x0, double z, double C, double lam) {
    return compose({Map1D::power(x0, C, lam), Map1D::affine(1.0, z - x0)});
}

// Germ on (xk, e], then the C^1 affine tail.
Map1D germ_with_tail(double xk, double zk, double C, double lam, double w) {
    double e = xk + w;
    double pe = zk + C * std::pow(w, lam);
    double de = C * lam * std::pow(w, lam - 1.0);
    return Map1D::piecewise({e}, {germ(xk, zk, C, lam), Map1D::affine(de, pe - de * e)}, {pe});
}

}  // namespace

WGState WGModel::at(const std::vector<double>& a) const {
    WGState s;
    s.germ = {germ.delta + inc(dep.delta, a), germ.a3};
    for (int i = 0; i < M; ++i) {
        s.lam.push_back(left.at(i).char_num + inc(dep.lam, i, a));
        s.u.push_back(left.at(i).entry_coord + inc(dep.u, i, a));
    }
    for (int j = 0; j < N; ++j) {
        s.rho.push_back(right.at(j).char_num + inc(dep.rho, j, a));
        s.s.push_back(right.at(j).entry_coord + inc(dep.s, j, a));
    }
    return s;
}

double phi(double lam, double rho) {
    if (!(lam > 1.0)) throw InvalidCharNum("lam = " + num(lam) + " must exceed 1");
    if (!(rho > 0.0 && rho < 1.0)) throw InvalidCharNum("rho = " + num(rho) + " must lie in (0, 1)");
    return -std::log(lam) / std::log(rho);
}

PhiMatrix phi_matrix(const WGModel& w, const std::vector<double>& alpha) {
    auto s = w.at(alpha);
    PhiMatrix r{Eigen::MatrixXd(w.M, w.N), Eigen::MatrixXd(w.M, w.N)};
    for (int i = 0; i < w.M; ++i)
        for (int j = 0; j < w.N; ++j) {
            r.phi(i, j) = phi(s.lam[i], s.rho[j]);
            r.raw(i, j) = -r.phi(i, j);
        }
    return r;
}

InvariantVector projective_invariant(const WGModel& w, const std::vector<double>& alpha) {
    auto s = w.at(alpha);
    // range checks
    for (int i = 0; i < w.M; ++i)
        for (int j = 0; j < w.N; ++j) phi(s.lam[i], s.rho[j]);
    InvariantVector v;
    double l0 = std::log(s.lam[0]);
    for (double l : s.lam) v.values.push_back(std::log(l) / l0);
    for (double r : s.rho) v.values.push_back(std::log(r) / l0);
    return v;
}

InvariantVector leg_invariants(const LEGModel& m) {
    InvariantVector v;
    for (double l : m.lam) v.values.push_back(phi(l, m.rho));
    return v;
}

Map1D build_affine_Ak(const LEGModel& m, int k) {
    if (k < 1 || k > m.n + 1) throw DegenerateConfig("k = " + std::to_string(k) + " outside 1.." + std::to_string(m.n + 1));
    double yk = m.yk(k), zk = m.zk(k), x0 = m.x.at(0), xk = m.x.at(k);
    if (yk == zk) throw DegenerateConfig("y_k = z_k");
    if (x0 == xk) throw DegenerateConfig("x_0 = x_k");
    double slope = (xk - x0) / (zk - yk);
    if (!(slope > 0.0)) throw DegenerateConfig("A_k would reverse orientation");
    return Map1D::affine(slope, x0 - slope * yk);
}

TechnicalResult check_technical(const LEGModel& m, int k) {
    if (k < 1 || k > m.n) throw DegenerateConfig("k = " + std::to_string(k) + " outside 1.." + std::to_string(m.n));
    auto f = compose({build_affine_Ak(m, k), m.P});
    auto r = basin_converges(f, m.yk(k + 1), m.zk(k), kDefaultTol, kDefaultMaxIter);
    TechnicalResult t;
    t.steps = r.steps;
    t.holds = r.converged();
    if (r.status == BasinResult::Status::Escaped)
        t.reason = "orbit of y_" + std::to_string(k + 1) + " escaped at " + num(r.position);
    else if (r.status == BasinResult::Status::MaxIterExceeded)
        t.reason = "no convergence to z_" + std::to_string(k) + " within " + std::to_string(r.steps) + " steps";
    return t;
}

Map1D build_first_return(const std::vector<double>& x, const std::vector<double>& y,
                         const std::vector<double>& z, const std::vector<double>& lam,
                         const std::vector<double>& coeff, const std::vector<double>& width) {
    std::size_t n1 = y.size();  // n + 1
    if (n1 == 0 || x.size() != n1 + 1 || z.size() != n1 || lam.size() != n1 || coeff.size() != n1 ||
        width.size() != n1)
        throw DegenerateConfig("inconsistent LEG array sizes");
    if (!(x[1] > x[0] && x[1] > 0.0 && y[0] > 0.0)) throw DegenerateConfig("first branch needs 0 < x_1, 0 < y_1");
    std::vector<double> breaks(x.begin() + 1, x.end());
    std::vector<Map1D> branches;
    branches.push_back(Map1D::affine(y[0] / x[1], 0.0));
    for (std::size_t k = 1; k <= n1; ++k) {
        double xk = x[k], zk = z[k - 1], C = coeff[k - 1], l = lam[k - 1], w = width[k - 1];
        if (!(w > 0.0 && C > 0.0 && l > 0.0)) throw DegenerateConfig("bad germ data at k = " + std::to_string(k));
        auto open = germ_with_tail(xk, zk, C, l, w);
        if (k == n1) {
            branches.push_back(open);
            break;
        }
        double xn = x[k + 1], yn = y[k];
        double s = (xk - x[0]) / (zk - y[k - 1]);
        double a = x[0] + s * (yn - y[k - 1]);
        if (!(a > xk && a < xn))
            throw DegenerateConfig("A_" + std::to_string(k) + "(y_" + std::to_string(k + 1) + ") = " + num(a) +
                                   " is not inside (x_k, x_{k+1})");
        double pa = open(a);
        if (!(pa < yn))
            throw DegenerateConfig("P(A_" + std::to_string(k) + "(y_" + std::to_string(k + 1) + ")) = " + num(pa) +
                                   " is not below y_" + std::to_string(k + 1));
        double sl = (yn - pa) / (xn - a);
        branches.push_back(Map1D::piecewise({a}, {open, Map1D::affine(sl, pa - sl * a)}, {pa}));
    }
    return Map1D::piecewise(breaks, branches, z);
}

LegSeed LegSeed::random(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    LegSeed s;
    s.x0 = 0.02 + 0.06 * U(rng);
    s.x1 = s.x0 + 0.05 + 0.1 * U(rng);
    s.y1 = 0.02 + 0.06 * U(rng);
    s.z1 = s.y1 + 0.1 + 0.15 * U(rng);
    for (auto& l : s.lam) l = 1.5 + 1.5 * U(rng);
    for (auto& c : s.coeff) c = 0.5 + U(rng);
    s.rho = 0.1 + 0.8 * U(rng);
    s.gap = 0.1 + 0.2 * U(rng);
    s.dz = 0.2 + 0.2 * U(rng);
    return s;
}

LEGModel construct_Mn(int n, const LegSeed& seed, double margin) {
    if (n < 0) throw DegenerateConfig("n must be nonnegative");
    if (!(margin > 0.0 && margin < 1.0)) throw DegenerateConfig("margin must lie in (0, 1)");
    if (seed.lam.empty() || seed.coeff.empty()) throw DegenerateConfig("seed needs lam and coeff lists");
    auto cyc = [](const std::vector<double>& v, int i) { return v[i % v.size()]; };

    LEGModel m;
    m.rho = seed.rho;
    m.x = {seed.x0, seed.x1};
    m.y = {seed.y1};
    m.z = {seed.z1};
    m.lam = {cyc(seed.lam, 0)};
    m.coeff = {cyc(seed.coeff, 0)};
    m.germ_width = {seed.germ_width * (1.0 - seed.x1)};

    // Induction: LEG_0 is in M_0; each step adds one Cherry cell.
    for (int k = 1; k <= n; ++k) {
        double xk = m.x[k], yk = m.y[k - 1], zk = m.z[k - 1];
        double s = (xk - m.x[0]) / (zk - yk);
        auto local = compose({Map1D::affine(s, m.x[0] - s * yk),
                              germ_with_tail(xk, zk, m.coeff[k - 1], m.lam[k - 1], m.germ_width[k - 1])});
        double cap = seed.room * std::min(1.0 - zk, (1.0 - xk) / s);
        double umax = 0.0;
        for (int i = 0; i < seed.basin_samples; ++i) {
            double u = cap * std::pow(1e-8, 1.0 - double(i) / (seed.basin_samples - 1));
            if (!basin_converges(local, zk + u, zk).converged()) break;
            umax = u;
        }
        if (umax <= 0.0)
            throw ConstructionFailed("basin right of z_" + std::to_string(k) + " is numerically empty", zk);
        double ynew = zk + margin * umax;
        double a = m.x[0] + s * (ynew - yk);
        double xnew = a + seed.gap * (1.0 - a);
        double znew = ynew + seed.dz * (1.0 - ynew);
        if (!(ynew > zk && a > xk && xnew > a && znew > ynew))
            throw ConstructionFailed("step " + std::to_string(k) + " ran out of chart resolution", zk + umax);
        m.x.push_back(xnew);
        m.y.push_back(ynew);
        m.z.push_back(znew);
        m.lam.push_back(cyc(seed.lam, k));
        m.coeff.push_back(cyc(seed.coeff, k));
        m.germ_width.push_back(seed.germ_width * (1.0 - xnew));
        m.n = k;
    }
    m.P = build_first_return(m.x, m.y, m.z, m.lam, m.coeff, m.germ_width);
    return m;
}

LEGModel leg_at(const LEGModel& m, const std::vector<double>& a) {
    if (static_cast<int>(a.size()) != m.dep.k)
        throw DegenerateConfig("alpha has " + std::to_string(a.size()) + " entries, family has k = " +
                               std::to_string(m.dep.k));
    LEGModel r = m;
    bool moved = false;
    auto shift = [&](std::vector<double>& v, const std::vector<Poly>& d) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            double e = inc(d, i, a);
            moved = moved || e != 0.0;
            v[i] += e;
        }
    };
    shift(r.x, m.dep.dx);
    shift(r.y, m.dep.dy);
    shift(r.z, m.dep.dz);
    shift(r.lam, m.dep.dlam);
    r.rho += inc(m.dep.drho, a);
    if (moved) r.P = build_first_return(r.x, r.y, r.z, r.lam, r.coeff, r.germ_width);
    return r;
}

double leg_eps1(const LEGModel& m, const std::vector<double>& a) { return a.at(m.dep.eps1); }
double leg_eps2(const LEGModel& m, const std::vector<double>& a) { return a.at(m.dep.eps2); }

Map1D leg_delta(const LEGModel& m, const std::vector<double>& a) {
    auto s1 = m.handles.s1, s2 = m.handles.s2;
    s1.eps = leg_eps1(m, a);
    s2.eps = leg_eps2(m, a);
    double l2 = log_passage_coefficient(s1);
    double l1 = log_passage_coefficient(s2);
    return compose({Map1D::scale(l1), Map1D::polynomial({a.at(m.dep.b0), m.handles.bridge_slope, 0.0, m.handles.bridge_cubic}),
                    Map1D::scale(l2)});
}

std::vector<std::string> validate(const GlassesModel& g) {
    std::vector<std::string> v;
    if (!(g.lam > 1.0)) v.push_back("char_num lam ≤ 1");
    if (!(g.rho > 0.0 && g.rho < 1.0)) v.push_back("char_num rho not in (0, 1)");
    if (!(g.left_event_scale > 0.0)) v.push_back("left event scale not positive");
    if (!(g.right_event_scale > 0.0)) v.push_back("right event scale not positive");
    return v;
}

std::vector<std::string> validate(const WGModel& w) {
    std::vector<std::string> v;
    if (w.M < 1 || w.N < 1) v.push_back("M and N must be at least 1");
    if (static_cast<int>(w.left.size()) != w.M) v.push_back("left lens count differs from M");
    if (static_cast<int>(w.right.size()) != w.N) v.push_back("right lens count differs from N");
    if (!v.empty()) return v;
    std::vector<double> pts;
    for (int i = 0; i < w.M; ++i) {
        const auto& l = w.left[i];
        std::string id = std::to_string(i + 1);
        if (l.side != Side::Left) v.push_back("left lens " + id + " has side right");
        if (!(l.char_num > 1.0)) v.push_back("char_num λ_" + id + " ≤ 1");
        if (!(l.entry_coord < 0.0)) v.push_back(i == 0 ? "left lens entry not exterior" : "left lens " + id + " entry not exterior");
        pts.push_back(l.entry_coord);
    }
    for (int j = 0; j < w.N; ++j) {
        const auto& r = w.right[j];
        std::string id = std::to_string(j + 1);
        if (r.side != Side::Right) v.push_back("right lens " + id + " has side left");
        if (!(r.char_num > 0.0 && r.char_num < 1.0)) v.push_back("char_num ρ_" + id + " not in (0, 1)");
        if (!(r.entry_coord > 0.0)) v.push_back(j == 0 ? "right lens exit not interior" : "right lens " + id + " exit not interior");
        pts.push_back(r.entry_coord);
    }
    auto sorted = pts;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        v.push_back("entry and exit points not distinct");
    const auto& d = w.dep;
    if (d.k < 1) v.push_back("parameter dimension k must be at least 1");
    if (!d.delta.empty() && (d.delta.dim() != d.k || d.delta.degree() > 3)) v.push_back("delta dependence malformed");
    check_polys(d.lam, w.M, d.k, "lam", v);
    check_polys(d.u, w.M, d.k, "u", v);
    check_polys(d.rho, w.N, d.k, "rho", v);
    check_polys(d.s, w.N, d.k, "s", v);
    return v;
}

std::vector<std::string> validate(const LEGModel& m) {
    std::vector<std::string> v;
    std::size_t n1 = static_cast<std::size_t>(m.n) + 1;
    if (m.n < 0) return {"n must be nonnegative"};
    if (m.x.size() != n1 + 1) v.push_back("x has " + std::to_string(m.x.size()) + " entries, expected n+2");
    if (m.y.size() != n1) v.push_back("y has " + std::to_string(m.y.size()) + " entries, expected n+1");
    if (m.z.size() != n1) v.push_back("z has " + std::to_string(m.z.size()) + " entries, expected n+1");
    if (m.lam.size() != n1) v.push_back("lam has " + std::to_string(m.lam.size()) + " entries, expected n+1");
    if (!v.empty()) return v;
    for (std::size_t k = 0; k + 1 < m.x.size(); ++k)
        if (!(m.x[k] < m.x[k + 1]))
            v.push_back("ordering x_" + std::to_string(k) + " < x_" + std::to_string(k + 1) + " violated");
    for (std::size_t k = 1; k <= n1; ++k) {
        std::string a = std::to_string(k);
        if (!(m.y[k - 1] < m.z[k - 1])) v.push_back("ordering y_" + a + " < z_" + a + " violated");
        if (k < n1 && !(m.z[k - 1] < m.y[k]))
            v.push_back("ordering z_" + a + " < y_" + std::to_string(k + 1) + " violated");
        if (!(m.lam[k - 1] > 1.0)) v.push_back("char_num λ_" + a + " ≤ 1");
    }
    if (!(m.rho > 0.0 && m.rho < 1.0)) v.push_back("char_num ρ not in (0, 1)");
    if (v.empty()) {
        for (std::size_t k = 1; k <= n1; ++k) {
            double xk = m.x[k];
            double hi = k < n1 ? m.x[k + 1] : xk + (xk - m.x[k - 1]);
            double pad = 1e-9 * (hi - xk);
            try {
                if (m.P(xk) != m.z[k - 1]) v.push_back("P(x_" + std::to_string(k) + ") ≠ z_" + std::to_string(k));
                if (find_monotonicity_violation(m.P, {xk + pad, hi - pad}))
                    v.push_back("P not strictly increasing on branch " + std::to_string(k));
            } catch (const Error& e) {
                v.push_back("P undefined on branch " + std::to_string(k) + ": " + e.what());
            }
        }
        try {
            double pad = 1e-9 * (m.x[1] - m.x[0]);
            if (find_monotonicity_violation(m.P, {m.x[0], m.x[1] - pad}))
                v.push_back("P not strictly increasing on branch 0");
        } catch (const Error& e) {
            v.push_back(std::string("P undefined on branch 0: ") + e.what());
        }
    }
    const auto& d = m.dep;
    std::vector<int> idx{d.lens, d.eps1, d.eps2, d.b0};
    for (int i : idx)
        if (i < 0 || i >= d.k) v.push_back("degeneracy handle index outside 0..k-1");
    std::sort(idx.begin(), idx.end());
    if (std::adjacent_find(idx.begin(), idx.end()) != idx.end()) v.push_back("degeneracy handles not distinct");
    check_polys(d.dx, n1 + 1, d.k, "x", v);
    check_polys(d.dy, n1, d.k, "y", v);
    check_polys(d.dz, n1, d.k, "z", v);
    check_polys(d.dlam, n1, d.k, "lam", v);
    if (!d.drho.empty() && d.drho.dim() != d.k) v.push_back("rho dependence has wrong dimension");
    if (m.handles.s1.lam0 <= 0.0) v.push_back("S1 must repel (lam0 > 0)");
    if (m.handles.s2.lam0 >= 0.0) v.push_back("S2 must attract (lam0 < 0)");
    if (!(m.handles.bridge_slope > 0.0)) v.push_back("bridge slope not positive");
    return v;
}

}  // namespace polylab
