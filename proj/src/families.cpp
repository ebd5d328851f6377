#include "polylab/families.hpp"

#include <cmath>

namespace polylab {

namespace {
std::vector<int> e5(int a0, int a1, int a2, int a3, int a4) { return {a0, a1, a2, a3, a4}; }
}  // namespace

WGModel wg11(const WG11Params& p) {
    WGModel w;
    w.left = {{Side::Left, p.lam0, p.u0, "I_L"}};
    w.right = {{Side::Right, p.rho0, p.s0, "I_R"}};
    w.dep.k = 1;
    w.dep.delta = Poly(1, {{{1}, 1.0}, {{2}, p.delta2}});
    w.dep.lam = {Poly(1, {{{1}, p.lam1}, {{2}, p.lam2}})};
    w.dep.rho = {Poly(1, {{{1}, p.rho1}})};
    return w;
}

WGModel wg_constant(const std::vector<double>& lam, const std::vector<double>& rho, const std::vector<double>& u,
                    const std::vector<double>& s) {
    WGModel w;
    w.M = static_cast<int>(lam.size());
    w.N = static_cast<int>(rho.size());
    for (std::size_t i = 0; i < lam.size(); ++i)
        w.left.push_back({Side::Left, lam[i], u.at(i), "I_L" + std::to_string(i + 1)});
    for (std::size_t j = 0; j < rho.size(); ++j)
        w.right.push_back({Side::Right, rho[j], s.at(j), "I_R" + std::to_string(j + 1)});
    w.dep.k = 1;
    w.dep.delta = Poly::coordinate(1, 0);
    return w;
}

WGCurve polynomial_curve(const WGModel& w, const std::vector<double>& h, double t_max) {
    int k = w.dep.k;
    return {w, [k, h](double t) {
                std::vector<double> a(k, 0.0);
                double v = 0.0, p = 1.0;
                for (double c : h) {
                    v += c * p;
                    p *= t;
                }
                a[0] = v;
                return a;
            },
            t_max};
}

FamilySpec synthetic_wg12_family() {
    FamilySpec f;
    f.k = 5;
    f.kind = ModelKind::WG;
    Poly c0(5, {{e5(1, 0, 0, 0, 0), 1.0}, {e5(0, 0, 0, 0, 2), -1.0}});
    Poly c1(5, {{e5(0, 1, 0, 0, 0), 1.0}, {e5(1, 0, 0, 0, 1), 1.0}});
    Poly c2(5, {{e5(0, 0, 1, 0, 0), 1.0}, {e5(0, 0, 0, 0, 3), -1.0}, {e5(0, 1, 0, 0, 0), 0.5}});
    Poly c3(5, {{e5(0, 0, 0, 1, 0), 1.0}, {e5(0, 0, 0, 0, 2), -0.3}, {e5(1, 1, 0, 0, 0), 1.0}});
    f.constraints = {c0, c1, c2, c3};

    WGModel& w = f.wg;
    w.M = 1;
    w.N = 2;
    w.left = {{Side::Left, 2.0, -0.5, "I_L"}};
    w.right = {{Side::Right, 0.25, 0.3, "I_R1"}, {Side::Right, 0.1, 0.5, "I_R2"}};
    w.dep.k = 5;
    w.dep.delta = c3;
    w.dep.lam = {Poly::coordinate(5, 4)};
    w.dep.rho = {Poly(5), Poly(5, {{e5(0, 0, 0, 0, 2), 1.0}})};
    return f;
}

std::vector<double> synthetic_wg12_phi(double a4) {
    double l = std::log(2.0 + a4);
    return {-l / std::log(0.25), -l / std::log(0.1 + a4 * a4)};
}

std::vector<Poly> synthetic_reparam(double scale) {
    double c = scale;
    return {Poly(5, {{e5(1, 0, 0, 0, 0), 1.0}, {e5(0, 0, 0, 0, 2), 0.3 * c}}),
            Poly(5, {{e5(0, 1, 0, 0, 0), 1.0}, {e5(1, 0, 0, 0, 1), -0.2 * c}}),
            Poly(5, {{e5(0, 0, 1, 0, 0), 1.0}, {e5(0, 0, 0, 0, 3), 0.1 * c}}),
            Poly(5, {{e5(0, 0, 0, 1, 0), 1.0}, {e5(0, 1, 1, 0, 0), 0.5 * c}}),
            Poly(5, {{e5(0, 0, 0, 0, 1), 1.0}, {e5(0, 0, 0, 0, 2), 0.4 * c}, {e5(0, 0, 0, 0, 3), -0.2 * c}})};
}

}  // namespace polylab
