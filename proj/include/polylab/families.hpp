#pragma once

#include <vector>

#include "polylab/bifurcation.hpp"

namespace polylab {

// One left and one right lens over a single parameter t:
// lam = lam0 + lam1 t + lam2 t^2, rho = rho0 + rho1 t, delta = t + delta2 t^2.
struct WG11Params {
    double lam0 = 2.0, lam1 = 0.0, lam2 = 0.0;
    double rho0 = 0.25, rho1 = 0.0;
    double delta2 = 0.0;
    double u0 = -0.5, s0 = 0.5;
};
WGModel wg11(const WG11Params& p);

// M left and N right lenses with constant characteristic numbers, delta = t.
WGModel wg_constant(const std::vector<double>& lam, const std::vector<double>& rho, const std::vector<double>& u,
                    const std::vector<double>& s);

// alpha(t) = h(t) e_0 with h(t) = sum h[i] t^i
WGCurve polynomial_curve(const WGModel& w, const std::vector<double>& h, double t_max);

// WG_{1,2} over R^5 with curved degeneracy conditions; S_V is the curve
// a0 = a4^2, a1 = -a4^3, a2 = 1.5 a4^3, a3 = 0.3 a4^2 + a4^5.
// lam = 2 + a4, rho_1 = 0.25, rho_2 = 0.1 + a4^2.
FamilySpec synthetic_wg12_family();
// Analytic invariants along S_V as a function of a4.
std::vector<double> synthetic_wg12_phi(double a4);

// A near-identity polynomial change of parameters for the synthetic family.
std::vector<Poly> synthetic_reparam(double scale = 1.0);

}  // namespace polylab
