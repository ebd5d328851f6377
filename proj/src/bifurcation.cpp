#include "polylab/bifurcation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "polylab/parallel.hpp"

namespace polylab {

namespace {

std::string num(double x) {
    std::ostringstream os;
    os.precision(10);
    os << x;
    return os.str();
}

std::string csv_real(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

// g^n(u) - s along the curve
double reach_gap(const WGCurve& c, int i, int j, int n, double t) {
    auto s = c.model.at(c.alpha(t));
    double x = s.u.at(i);
    for (int k = 0; k < n; ++k) {
        x = s.germ(x);
        if (!std::isfinite(x) || x > 1e150) return std::numeric_limits<double>::infinity();
    }
    return x - s.s.at(j);
}

ConnectionEvent find_event(const WGCurve& c, int i, int j, int n, double sgn, double tol) {
    auto F = [&](double tau) { return reach_gap(c, i, j, n, sgn * tau); };
    double hi = c.t_max;
    if (F(hi) < 0.0) throw NoEvent(n);
    double lo = hi / 2;
    while (F(lo) >= 0.0) {
        hi = lo;
        lo /= 2;
        if (lo < 1e-300) throw NoEvent(n);
    }
    // a single sign change across the initial bracket
    bool seen_pos = false;
    for (int q = 1; q < 16; ++q) {
        double f = F(lo + (hi - lo) * q / 16.0);
        if (f >= 0.0) seen_pos = true;
        else if (seen_pos) throw NonMonotone("transit gap changes sign twice for winding " + std::to_string(n));
    }
    while (hi - lo > tol * hi) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (F(mid) >= 0.0) hi = mid; else lo = mid;
    }
    double fl = std::abs(F(lo)), fh = std::abs(F(hi));
    double tau = fh <= fl ? hi : lo;
    ConnectionEvent e;
    e.t = sgn * tau;
    e.param = c.alpha(e.t);
    e.winding = n;
    e.i = i;
    e.j = j;
    e.residual = std::min(fl, fh);
    return e;
}

}  // namespace

WGCurve coordinate_curve(const WGModel& w, int axis, double t_max) {
    int k = w.dep.k;
    if (axis < 0 || axis >= k) throw DegenerateConfig("curve axis outside 0..k-1");
    return {w, [k, axis](double t) {
                std::vector<double> a(k, 0.0);
                a[axis] = t;
                return a;
            },
            t_max};
}

EventSequence sparkling_sequence(const WGCurve& c, int i, int j, int n_lo, int n_hi, const SparklingOptions& opt) {
    if (i < 0 || i >= c.model.M || j < 0 || j >= c.model.N) throw DegenerateConfig("lens pair out of range");
    if (n_lo < 1 || n_hi < n_lo) throw DegenerateConfig("winding range must satisfy 1 <= n_lo <= n_hi");
    auto v = validate(c.model);
    if (!v.empty()) throw ModelInvalid(v);
    double d0 = c.model.at(c.alpha(0.0)).germ.delta;
    if (std::abs(d0) > 1e-15) throw DegenerateConfig("delta(0) = " + num(d0) + ", the cycle is not semi-stable at 0");
    double sgn;
    if (c.model.at(c.alpha(c.t_max)).germ.delta > 0.0) sgn = 1.0;
    else if (c.model.at(c.alpha(-c.t_max)).germ.delta > 0.0) sgn = -1.0;
    else throw DegenerateConfig("delta does not become positive on either side of 0");

    int count = n_hi - n_lo + 1;
    std::vector<std::optional<ConnectionEvent>> found(count);
    parallel_for(
        count,
        [&](int q) {
            try {
                found[q] = find_event(c, i, j, n_lo + q, sgn, opt.t_tol);
            } catch (const NoEvent&) {
            }
        },
        opt.threads);
    EventSequence ev;
    for (int q = 0; q < count; ++q) {
        if (found[q]) ev.events.push_back(*found[q]);
        else ev.missing.push_back(n_lo + q);
    }
    for (std::size_t q = 1; q < ev.events.size(); ++q)
        if (!(std::abs(ev.events[q].t) < std::abs(ev.events[q - 1].t)))
            throw NonMonotone("event parameters not strictly decreasing at winding " +
                              std::to_string(ev.events[q].winding));
    return ev;
}

std::vector<double> phi_sequence(const WGCurve& c, const EventSequence& ev) {
    std::vector<double> out;
    for (const auto& e : ev.events) {
        auto s = c.model.at(e.param);
        out.push_back(phi(s.lam.at(e.i), s.rho.at(e.j)));
    }
    return out;
}

TailMatch tails_equal(const std::vector<double>& s1, const std::vector<double>& s2, double tol, int settle,
                      int min_overlap) {
    TailMatch r;
    int n1 = static_cast<int>(s1.size()), n2 = static_cast<int>(s2.size());
    if (n1 < 10 || n2 < 10) return r;
    std::vector<int> matches;
    for (int a = -n1; a <= n2; ++a) {
        int overlap = 0;
        bool ok = true;
        for (int n = settle; n < n1 && ok; ++n) {
            int m = a + n;
            if (m < settle || m >= n2) continue;
            ++overlap;
            ok = std::abs(s2[m] - s1[n]) <= tol;
        }
        if (ok && overlap >= min_overlap) matches.push_back(a);
    }
    if (matches.empty()) return r;
    int best = matches[0];
    for (int a : matches)
        if (std::abs(a) < std::abs(best)) best = a;
    r.shift = best;
    r.ambiguous = matches.size() > 1;
    return r;
}

std::pair<EventSequence, EventSequence> glasses_events(const GlassesModel& g, double t_min) {
    auto v = validate(g);
    if (!v.empty()) throw ModelInvalid(v);
    EventSequence l, r;
    for (int n = 1;; ++n) {
        double t = g.left_event_scale * std::pow(g.lam, -n);
        if (t < t_min) break;
        l.events.push_back({{t}, t, n, 0, 0, 0.0});
    }
    for (int m = 1;; ++m) {
        double t = g.right_event_scale * std::pow(g.rho, m);
        if (t < t_min) break;
        r.events.push_back({{t}, t, m, 0, 0, 0.0});
    }
    return {l, r};
}

std::vector<double> log_thresholds(double t_hi, double t_lo, int count) {
    std::vector<double> t;
    double a = std::log(t_hi), b = std::log(t_lo);
    for (int q = 0; q < count; ++q) t.push_back(std::exp(a + (b - a) * q / (count - 1)));
    return t;
}

DensityResult relative_density(const EventSequence& left, const EventSequence& right,
                               const std::vector<double>& thresholds) {
    if (left.events.size() < 10 || right.events.size() < 10)
        throw InsufficientEvents("need at least 10 events per side, got " + std::to_string(left.events.size()) +
                                 " and " + std::to_string(right.events.size()));
    auto mags = [](const EventSequence& s) {
        std::vector<double> v;
        for (const auto& e : s.events) v.push_back(std::abs(e.t));
        std::sort(v.begin(), v.end());
        return v;
    };
    auto L = mags(left), R = mags(right);
    auto count = [](const std::vector<double>& v, double T) {
        return static_cast<double>(v.end() - std::lower_bound(v.begin(), v.end(), T));
    };
    DensityResult d;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (double T : thresholds) {
        if (!(T > 0.0 && T < 1.0)) continue;
        double nl = count(L, T), nr = count(R, T);
        if (nl == 0.0) continue;
        double est = nr / nl, x = 1.0 / std::log(1.0 / T);
        d.thresholds.push_back(T);
        d.estimates.push_back(est);
        sx += x;
        sy += est;
        sxx += x * x;
        sxy += x * est;
        ++m;
    }
    if (m == 0) throw InsufficientEvents("no usable threshold");
    double den = m * sxx - sx * sx;
    if (m == 1 || den <= 0.0) {
        d.limit = sy / m;
    } else {
        double slope = (m * sxy - sx * sy) / den;
        d.limit = (sy - slope * sx) / m;
    }
    return d;
}

Interleaving event_interleaving(const std::vector<EventSequence>& by_pair) {
    Interleaving r;
    int base = -1;
    for (std::size_t q = 0; q < by_pair.size(); ++q)
        if (!by_pair[q].events.empty() && by_pair[q].events[0].i == 0 && by_pair[q].events[0].j == 0) base = static_cast<int>(q);
    if (base < 0 || by_pair[base].events.size() < 2) throw InsufficientEvents("need at least two (1,1) events");
    r.order.push_back({0, 0});
    if (by_pair.size() == 1) {
        r.cyclic = true;
        r.windows = static_cast<int>(by_pair[0].events.size()) - 1;
        return r;
    }
    struct Item {
        double t;
        int seq;
    };
    std::vector<Item> all;
    std::vector<std::pair<double, double>> range(by_pair.size());
    for (std::size_t q = 0; q < by_pair.size(); ++q) {
        if (by_pair[q].events.empty()) throw InsufficientEvents("empty event sequence for pair " + std::to_string(q));
        range[q] = {INFINITY, 0.0};
        for (const auto& e : by_pair[q].events) {
            double t = std::abs(e.t);
            all.push_back({t, static_cast<int>(q)});
            range[q].first = std::min(range[q].first, t);
            range[q].second = std::max(range[q].second, t);
        }
    }
    std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.t > b.t; });
    for (std::size_t q = 1; q < all.size(); ++q)
        if (all[q].seq != all[q - 1].seq && all[q - 1].t - all[q].t <= 1e-13 * all[q].t) {
            r.reason = "coincident events at t = " + num(all[q].t);
            return r;
        }
    std::vector<std::size_t> marks;
    for (std::size_t q = 0; q < all.size(); ++q)
        if (all[q].seq == base) marks.push_back(q);
    std::vector<int> reference;
    for (std::size_t w = 0; w + 1 < marks.size(); ++w) {
        double hi = all[marks[w]].t, lo = all[marks[w + 1]].t;
        bool covered = true;
        for (std::size_t q = 0; q < by_pair.size(); ++q)
            if (static_cast<int>(q) != base && !(range[q].second > hi && range[q].first < lo)) covered = false;
        if (!covered) continue;
        std::vector<int> inside;
        for (std::size_t q = marks[w] + 1; q < marks[w + 1]; ++q) inside.push_back(all[q].seq);
        std::vector<int> sorted = inside;
        std::sort(sorted.begin(), sorted.end());
        bool once = sorted.size() + 1 == by_pair.size() &&
                    std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
        if (!once) {
            r.first_bad_window = r.windows;
            r.reason = "window " + std::to_string(r.windows) + " holds " + std::to_string(inside.size()) +
                       " events instead of one per other pair";
            return r;
        }
        if (reference.empty()) reference = inside;
        else if (inside != reference) {
            r.first_bad_window = r.windows;
            r.reason = "window " + std::to_string(r.windows) + " changes the cyclic order";
            return r;
        }
        ++r.windows;
    }
    if (r.windows == 0) throw InsufficientEvents("no window between (1,1) events is covered by every pair");
    for (int q : reference) r.order.push_back({by_pair[q].events[0].i, by_pair[q].events[0].j});
    r.cyclic = true;
    return r;
}

std::vector<AffineApproxParams> affine_approx_sequence(double slope, double offset, const BridgeHandles& h,
                                                       const std::vector<double>& ns, double p1, double p2) {
    if (!(slope > 0.0)) throw NotRealizable("target slope " + num(slope) + " is not positive");
    if (!(h.slope > 0.0)) throw NotRealizable("bridge slope " + num(h.slope) + " is not positive");
    if (!(p2 > p1)) throw NotRealizable("probe points must satisfy p1 < p2");
    std::vector<AffineApproxParams> out;
    double dp = p2 - p1, dp3 = p2 * p2 * p2 - p1 * p1 * p1;
    for (double n : ns) {
        double q = h.cubic * std::exp(-2.0 * n);  // cubic weight after scaling out C2
        auto f = [&](double G) { return h.slope * G * dp + q * G * G * G * dp3 - slope * dp; };
        auto df = [&](double G) { return h.slope * dp + 3.0 * q * G * G * dp3; };
        double G = slope / h.slope;
        for (int it = 0; it < 100 && q != 0.0; ++it) {
            double step = f(G) / df(G);
            G -= step;
            if (std::abs(step) <= 1e-16 * std::abs(G)) break;
        }
        if (!(G > 0.0) || !(df(G) > 0.0) || std::abs(f(G)) > 1e-12 * slope * dp)
            throw NotRealizable("no orientation-preserving C1 C2 at ln C2 = " + num(n));
        double beta = slope * p1 + offset - h.slope * G * p1 - q * G * G * G * p1 * p1 * p1;
        AffineApproxParams p;
        p.n = n;
        p.C2 = std::exp(n);
        p.C1 = G * std::exp(-n);
        p.b0 = beta * std::exp(-n);
        out.push_back(p);
    }
    return out;
}

Map1D affine_approx_map(const AffineApproxParams& p, const BridgeHandles& h) {
    return compose({Map1D::scale(std::log(p.C1)), Map1D::polynomial({p.b0, h.slope, 0.0, h.cubic}), Map1D::scale(p.n)});
}

PerturbationResult find_perturbation(const LEGModel& m, int k, double region) {
    auto v = validate(m);
    if (!v.empty()) throw ModelInvalid(v);
    if (k < 1 || k > m.n) throw DegenerateConfig("k = " + std::to_string(k) + " outside 1.." + std::to_string(m.n));
    if (!(region > 0.0)) throw DegenerateConfig("search region must be positive");
    auto tech = check_technical(m, k);
    if (!tech.holds) throw BasinFailed("technical assumption fails at alpha = 0: " + tech.reason);

    const auto& d = m.dep;
    std::vector<double> a(d.k, 0.0);
    a[d.eps1] = region;
    auto s1 = m.handles.s1;
    s1.eps = region;
    double l2 = log_passage_coefficient(s1);

    // unknowns: ln eps2 and beta = C2 b0
    auto alpha_of = [&](const Eigen::Vector2d& u) {
        auto r = a;
        r[d.eps2] = std::exp(u(0));
        r[d.b0] = u(1) * std::exp(-l2);
        return r;
    };
    auto residual = [&](const Eigen::Vector2d& u) {
        auto al = alpha_of(u);
        auto ma = leg_at(m, al);
        auto D = leg_delta(m, al);
        return Eigen::Vector2d(D(ma.yk(k)) - ma.x[0], D(ma.zk(k)) - ma.x[k]);
    };

    auto m0 = leg_at(m, a);
    double sk = (m0.x[k] - m0.x[0]) / (m0.zk(k) - m0.yk(k));
    double l1 = std::log(sk / m.handles.bridge_slope) - l2;
    if (!(l1 < 0.0))
        throw NotRealizable("region " + num(region) + " is too large: S2 would have to expand (ln C1 = " + num(l1) + ")");
    Eigen::Vector2d u(std::log(eps_for_log_passage(m.handles.s2, l1)), m0.x[0] - sk * m0.yk(k));

    PerturbationResult res;
    Eigen::Vector2d F = residual(u);
    double norm = F.cwiseAbs().maxCoeff();
    res.trace.push_back(norm);
    for (int it = 0; it < 60 && norm > 1e-14; ++it) {
        Eigen::Matrix2d J;
        for (int c = 0; c < 2; ++c) {
            double h = c == 0 ? 1e-6 : 1e-7 * (1.0 + std::abs(u(1)));
            Eigen::Vector2d up = u, dn = u;
            up(c) += h;
            dn(c) -= h;
            J.col(c) = (residual(up) - residual(dn)) / (2 * h);
        }
        double det = J.determinant();
        if (!(std::abs(det) > 1e-14 * J.cwiseAbs().maxCoeff() * J.cwiseAbs().maxCoeff()))
            throw RankDeficient("constraint Jacobian in (eps2, b0) is singular at iteration " + std::to_string(it));
        Eigen::Vector2d step = J.partialPivLu().solve(F);
        double damp = 1.0;
        bool better = false;
        for (int h = 0; h < 40; ++h, damp *= 0.5) {
            Eigen::Vector2d trial = u - damp * step;
            Eigen::Vector2d Ft;
            try {
                Ft = residual(trial);
            } catch (const Error&) {
                continue;
            }
            double nt = Ft.cwiseAbs().maxCoeff();
            if (nt < norm) {
                u = trial;
                F = Ft;
                norm = nt;
                better = true;
                break;
            }
        }
        res.trace.push_back(norm);
        if (!better) break;
    }
    if (!(norm <= 1e-10)) throw NewtonDiverged("residual stalled at " + num(norm), res.trace);

    res.alpha = alpha_of(u);
    res.eps1 = leg_eps1(m, res.alpha);
    res.eps2 = leg_eps2(m, res.alpha);
    res.residual_y = F(0);
    res.residual_z = F(1);
    auto ma = leg_at(m, res.alpha);
    auto loop = compose({leg_delta(m, res.alpha), ma.P});
    res.basin = basin_converges(loop, ma.yk(k + 1), ma.zk(k), 1e-9, kDefaultMaxIter);
    if (!res.basin.converged())
        throw BasinFailed("orbit of y_" + std::to_string(k + 1) + " does not wind onto the cycle through z_" +
                          std::to_string(k) + " (last iterate " + num(res.basin.position) + ")");
    return res;
}

std::vector<double> FamilySpec::map(const std::vector<double>& a) const {
    if (reparam.empty()) return a;
    std::vector<double> b;
    for (const auto& p : reparam) b.push_back(p(a));
    return b;
}

Eigen::MatrixXd FamilySpec::map_jacobian(const std::vector<double>& a) const {
    if (reparam.empty()) return Eigen::MatrixXd::Identity(k, k);
    Eigen::MatrixXd J(k, k);
    for (int r = 0; r < k; ++r) {
        auto g = reparam[r].gradient(a);
        for (int c = 0; c < k; ++c) J(r, c) = g[c];
    }
    return J;
}

Eigen::VectorXd FamilySpec::constraint_values(const std::vector<double>& a) const {
    auto b = map(a);
    Eigen::VectorXd c(constraints.size());
    for (std::size_t r = 0; r < constraints.size(); ++r) c(r) = constraints[r](b);
    return c;
}

Eigen::MatrixXd FamilySpec::constraint_jacobian(const std::vector<double>& a) const {
    auto b = map(a);
    Eigen::MatrixXd Jc(constraints.size(), k);
    for (std::size_t r = 0; r < constraints.size(); ++r) {
        auto g = constraints[r].gradient(b);
        for (int c = 0; c < k; ++c) Jc(r, c) = g[c];
    }
    return Jc * map_jacobian(a);
}

std::vector<double> FamilySpec::invariants(const std::vector<double>& a) const {
    auto b = map(a);
    if (kind == ModelKind::LEG) return leg_invariants(leg_at(leg, b)).values;
    auto s = wg.at(b);
    std::vector<double> out;
    for (int j = 0; j < wg.N; ++j) out.push_back(phi(s.lam[0], s.rho[j]));
    for (int i = 1; i < wg.M; ++i) out.push_back(phi(s.lam[i], s.rho[0]));
    return out;
}

int FamilySpec::codim() const { return kind == ModelKind::WG ? wg.M + wg.N + 1 : 4; }

std::vector<std::string> validate(const FamilySpec& f) {
    std::vector<std::string> v = f.kind == ModelKind::WG ? validate(f.wg) : validate(f.leg);
    int mk = f.kind == ModelKind::WG ? f.wg.dep.k : f.leg.dep.k;
    if (mk != f.k) v.push_back("model parameter dimension differs from k");
    if (static_cast<int>(f.constraints.size()) != f.codim())
        v.push_back(std::to_string(f.constraints.size()) + " degeneracy conditions, class codimension is " +
                    std::to_string(f.codim()));
    for (const auto& c : f.constraints)
        if (c.dim() != f.k) v.push_back("constraint dimension differs from k");
    if (!f.reparam.empty() && static_cast<int>(f.reparam.size()) != f.k) v.push_back("reparameterization needs k components");
    for (const auto& p : f.reparam)
        if (p.dim() != f.k) v.push_back("reparameterization dimension differs from k");
    return v;
}

namespace {

std::vector<double> to_std(const Eigen::VectorXd& x) { return std::vector<double>(x.data(), x.data() + x.size()); }

Eigen::VectorXd to_eig(const std::vector<double>& x) { return Eigen::Map<const Eigen::VectorXd>(x.data(), x.size()); }

// minimal-norm Gauss-Newton projection onto the constraint set
bool project(const FamilySpec& f, Eigen::VectorXd& x, double tol) {
    for (int it = 0; it < 30; ++it) {
        auto a = to_std(x);
        Eigen::VectorXd c = f.constraint_values(a);
        if (c.cwiseAbs().maxCoeff() <= tol) return true;
        Eigen::MatrixXd J = f.constraint_jacobian(a);
        Eigen::VectorXd dx = J.transpose() * (J * J.transpose()).ldlt().solve(c);
        x -= dx;
        if (!x.allFinite()) return false;
    }
    return f.constraint_values(to_std(x)).cwiseAbs().maxCoeff() <= 1e3 * tol;
}

Eigen::MatrixXd null_basis(const Eigen::MatrixXd& J, int d) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeFullV);
    auto sv = svd.singularValues();
    int r = static_cast<int>(J.rows());
    if (sv.size() < r || sv(r - 1) <= 1e-10 * sv(0)) throw RankDeficient("constraint Jacobian is rank deficient");
    return svd.matrixV().rightCols(d);
}

}  // namespace

LocusMesh trace_invariant_locus(const FamilySpec& f, int d, const LocusOptions& opt) {
    auto v = validate(f);
    if (!v.empty()) throw ModelInvalid(v);
    if (d != f.k - f.codim()) throw DegenerateConfig("d must equal k - codim = " + std::to_string(f.k - f.codim()));
    if (d < 1) throw DegenerateConfig("locus dimension must be at least 1");
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(f.k);
    if (!project(f, x0, opt.newton_tol)) throw StepFailed("alpha = 0 does not project onto S_V");
    Eigen::MatrixXd J0 = f.constraint_jacobian(to_std(x0));
    if (J0.rows() > 0) null_basis(J0, d);

    LocusMesh mesh;
    mesh.d = d;
    if (d == 1) {
        auto tangent = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& prev) {
            Eigen::VectorXd t = null_basis(f.constraint_jacobian(to_std(x)), 1).col(0);
            if (prev.size() == 0) {
                Eigen::Index i;
                t.cwiseAbs().maxCoeff(&i);
                if (t(i) < 0) t = -t;
            } else if (t.dot(prev) < 0) {
                t = -t;
            }
            return t;
        };
        Eigen::VectorXd t0 = tangent(x0, Eigen::VectorXd());
        // branch[0] goes along -t0, branch[1] along +t0
        std::vector<std::vector<Eigen::VectorXd>> branch(2);
        for (int b = 0; b < 2; ++b) {
            Eigen::VectorXd x = x0, t = b == 0 ? Eigen::VectorXd(-t0) : t0;
            branch[b].push_back(x);
            double arc = 0.0, h = opt.step;
            while (arc < opt.extent + 2 * opt.spacing) {
                Eigen::VectorXd y = x + h * t;
                bool ok = false;
                for (int it = 0; it < 30; ++it) {
                    auto a = to_std(y);
                    Eigen::VectorXd G(f.k);
                    G.head(f.k - 1) = f.constraint_values(a);
                    G(f.k - 1) = t.dot(y - x) - h;
                    if (G.cwiseAbs().maxCoeff() <= opt.newton_tol) {
                        ok = true;
                        break;
                    }
                    Eigen::MatrixXd A(f.k, f.k);
                    A.topRows(f.k - 1) = f.constraint_jacobian(a);
                    A.row(f.k - 1) = t.transpose();
                    y -= A.partialPivLu().solve(G);
                    if (!y.allFinite()) break;
                }
                if (!ok) {
                    h *= 0.5;
                    if (h < opt.min_step) throw StepFailed("continuation step fell below " + num(opt.min_step));
                    continue;
                }
                arc += (y - x).norm();
                t = tangent(y, t);
                x = y;
                branch[b].push_back(x);
                h = std::min(opt.step, 2 * h);
            }
        }
        std::vector<Eigen::VectorXd> line(branch[0].rbegin(), branch[0].rend());
        line.insert(line.end(), branch[1].begin() + 1, branch[1].end());
        std::vector<double> s(line.size(), 0.0);
        for (std::size_t q = 1; q < line.size(); ++q) s[q] = s[q - 1] + (line[q] - line[q - 1]).norm();
        double s0 = s[branch[0].size() - 1];
        for (auto& e : s) e -= s0;
        int half = static_cast<int>(std::floor(opt.extent / opt.spacing + 1e-9));
        std::size_t seg = 0;
        for (int q = -half; q <= half; ++q) {
            double sq = q * opt.spacing;
            while (seg + 2 < s.size() && s[seg + 1] < sq) ++seg;
            double w = (sq - s[seg]) / (s[seg + 1] - s[seg]);
            Eigen::VectorXd x = (1 - w) * line[seg] + w * line[seg + 1];
            if (!project(f, x, opt.newton_tol)) throw StepFailed("mesh projection failed at s = " + num(sq));
            mesh.s.push_back({sq});
            mesh.alpha.push_back(to_std(x));
            mesh.phi.push_back(f.invariants(mesh.alpha.back()));
        }
        return mesh;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J0, Eigen::ComputeFullV);
    Eigen::MatrixXd T = svd.matrixV().rightCols(d), Nb = svd.matrixV().leftCols(f.k - d);
    int half = static_cast<int>(std::floor(opt.extent / opt.spacing + 1e-9));
    int side = 2 * half + 1;
    long total = 1;
    for (int q = 0; q < d; ++q) total *= side;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(f.k - d);
    for (long idx = 0; idx < total; ++idx) {
        Eigen::VectorXd u(d);
        long r = idx;
        for (int q = 0; q < d; ++q) {
            u(q) = (static_cast<int>(r % side) - half) * opt.spacing;
            r /= side;
        }
        if (idx % side == 0) w.setZero();
        bool ok = false;
        for (int it = 0; it < 30; ++it) {
            Eigen::VectorXd x = x0 + T * u + Nb * w;
            auto a = to_std(x);
            Eigen::VectorXd c = f.constraint_values(a);
            if (c.cwiseAbs().maxCoeff() <= opt.newton_tol) {
                ok = true;
                break;
            }
            w -= (f.constraint_jacobian(a) * Nb).partialPivLu().solve(c);
        }
        if (!ok) throw StepFailed("graph solve failed at tangent point " + std::to_string(idx));
        Eigen::VectorXd x = x0 + T * u + Nb * w;
        mesh.s.push_back(to_std(u));
        mesh.alpha.push_back(to_std(x));
        mesh.phi.push_back(f.invariants(mesh.alpha.back()));
    }
    return mesh;
}

namespace {

double point_segment(const Eigen::VectorXd& p, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    Eigen::VectorXd ab = b - a;
    double L = ab.squaredNorm();
    double t = L > 0 ? std::clamp((p - a).dot(ab) / L, 0.0, 1.0) : 0.0;
    return (p - (a + t * ab)).norm();
}

double directed(const LocusMesh& a, const LocusMesh& b, const Eigen::VectorXd& c, double radius) {
    double worst = 0.0;
    for (const auto& pv : a.phi) {
        Eigen::VectorXd p = to_eig(pv);
        if ((p - c).norm() > radius) continue;
        double best = INFINITY;
        if (b.d == 1 && b.phi.size() > 1) {
            for (std::size_t q = 0; q + 1 < b.phi.size(); ++q)
                best = std::min(best, point_segment(p, to_eig(b.phi[q]), to_eig(b.phi[q + 1])));
        } else {
            for (const auto& qv : b.phi) best = std::min(best, (p - to_eig(qv)).norm());
        }
        worst = std::max(worst, best);
    }
    return worst;
}

}  // namespace

double image_hausdorff(const LocusMesh& a, const LocusMesh& b, const std::vector<double>& center, double radius) {
    Eigen::VectorXd c = to_eig(center);
    return std::max(directed(a, b, c, radius), directed(b, a, c, radius));
}

std::string events_csv(const EventSequence& ev) {
    std::ostringstream os;
    os << "index,pair_i,pair_j,winding,param,residual\n";
    for (std::size_t q = 0; q < ev.events.size(); ++q) {
        const auto& e = ev.events[q];
        os << q << ',' << e.i + 1 << ',' << e.j + 1 << ',' << e.winding << ',' << csv_real(e.t) << ','
           << csv_real(e.residual) << '\n';
    }
    return os.str();
}

std::string locus_csv(const LocusMesh& m) {
    std::ostringstream os;
    if (m.d == 1) os << "s";
    else
        for (int q = 0; q < m.d; ++q) os << (q ? "," : "") << "s_" << q + 1;
    std::size_t k = m.alpha.empty() ? 0 : m.alpha[0].size(), D = m.phi.empty() ? 0 : m.phi[0].size();
    for (std::size_t q = 0; q < k; ++q) os << ",alpha_" << q + 1;
    for (std::size_t q = 0; q < D; ++q) os << ",phi_" << q + 1;
    os << '\n';
    for (std::size_t r = 0; r < m.alpha.size(); ++r) {
        for (std::size_t q = 0; q < m.s[r].size(); ++q) os << (q ? "," : "") << csv_real(m.s[r][q]);
        for (double x : m.alpha[r]) os << ',' << csv_real(x);
        for (double x : m.phi[r]) os << ',' << csv_real(x);
        os << '\n';
    }
    return os.str();
}

json to_json(const FamilySpec& f) {
    json c = json::array(), r = json::array();
    for (const auto& p : f.constraints) c.push_back(to_json(p));
    for (const auto& p : f.reparam) r.push_back(to_json(p));
    json j = {{"k", f.k}, {"kind", f.kind == ModelKind::WG ? "wg" : "leg"}, {"constraints", c}, {"reparam", r}};
    if (f.kind == ModelKind::WG) j["wg"] = to_json(f.wg);
    else j["leg"] = to_json(f.leg);
    return j;
}

FamilySpec family_from_json(const json& j, const std::string& ptr) {
    FamilySpec f;
    f.k = int_field(j, "k", ptr);
    const auto& kind = field(j, "kind", ptr);
    if (kind == "wg") {
        f.kind = ModelKind::WG;
        f.wg = wg_from_json(field(j, "wg", ptr), ptr + "/wg");
    } else if (kind == "leg") {
        f.kind = ModelKind::LEG;
        f.leg = leg_from_json(field(j, "leg", ptr), ptr + "/leg");
    } else {
        throw ConfigError(ptr + "/kind", "expected \"wg\" or \"leg\"");
    }
    auto polys = [&](const std::string& key) {
        std::vector<Poly> out;
        if (!j.contains(key)) return out;
        const auto& a = j.at(key);
        if (!a.is_array()) throw ConfigError(ptr + "/" + key, "expected an array");
        for (std::size_t i = 0; i < a.size(); ++i)
            out.push_back(poly_from_json(a[i], ptr + "/" + key + "/" + std::to_string(i)));
        return out;
    };
    f.constraints = polys("constraints");
    f.reparam = polys("reparam");
    return f;
}

}  // namespace polylab
