#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "polylab/maps1d.hpp"
#include "polylab/normal_forms.hpp"
#include "polylab/poly.hpp"

namespace polylab {

enum class Side { Left, Right };

struct LensSpec {
    Side side = Side::Left;
    double char_num = 2.0;
    double entry_coord = 0.0;
    std::string inner_saddle_tag;
};

// Two event sequences a_n = A lam^-n (left) and b_m = B rho^m (right).
struct GlassesModel {
    double lam = 2.0;
    double rho = 0.5;
    double left_event_scale = 1.0;
    double right_event_scale = 1.0;
};

// Increments over the base values; an empty Poly means no dependence.
struct WGDependence {
    int k = 1;
    Poly delta;
    std::vector<Poly> lam, rho, u, s;
};

struct WGState {
    ParabolicStep germ{0.0, 0.0};
    std::vector<double> lam, rho, u, s;
};

struct WGModel {
    int M = 1;
    int N = 1;
    std::vector<LensSpec> left;
    std::vector<LensSpec> right;
    ParabolicStep germ{0.0, 0.0};
    WGDependence dep;

    WGState at(const std::vector<double>& alpha) const;
};

// Saddle-node and bridge data of the lips. The bridge correspondence is
// b0 + d w + r3 w^3 between the outgoing side of S2 and the incoming side of S1.
struct LEGHandles {
    SaddleNodeUnfolding s1{1.0, 0.0, 0.2, 0.0};
    SaddleNodeUnfolding s2{1.0, 0.0, -0.2, 0.0};
    double bridge_slope = 2.0;
    double bridge_cubic = 0.1;
};

// Which parameter coordinates drive the four degeneracies, plus position
// increments (x: n+2, y, z, lam: n+1 entries; empty entries mean none).
struct LEGDependence {
    int k = 4;
    int lens = 0;
    int eps1 = 1;
    int eps2 = 2;
    int b0 = 3;
    std::vector<Poly> dx, dy, dz, dlam;
    Poly drho;
};

struct LEGModel {
    int n = 0;
    std::vector<double> x;    // x_0 .. x_{n+1} on Gamma_1
    std::vector<double> y;    // y_1 .. y_{n+1} on Gamma_2, stored 0-based
    std::vector<double> z;    // z_1 .. z_{n+1}
    std::vector<double> lam;  // lambda_1 .. lambda_{n+1}
    double rho = 0.5;
    std::vector<double> coeff;       // germ coefficients C_k
    std::vector<double> germ_width;  // extent of each Power germ
    Map1D P = Map1D::identity();
    LEGHandles handles;
    LEGDependence dep;

    double yk(int k) const { return y.at(k - 1); }
    double zk(int k) const { return z.at(k - 1); }
    double lamk(int k) const { return lam.at(k - 1); }
};

struct InvariantVector {
    std::vector<double> values;
};

double phi(double lam, double rho);

struct PhiMatrix {
    Eigen::MatrixXd raw;    // ln lam_i / ln rho_j
    Eigen::MatrixXd phi;    // -ln lam_i / ln rho_j
};

PhiMatrix phi_matrix(const WGModel& w, const std::vector<double>& alpha);
InvariantVector projective_invariant(const WGModel& w, const std::vector<double>& alpha);
// phi_k = -ln lam_k / ln rho for k = 1..n+1
InvariantVector leg_invariants(const LEGModel& m);

// A_k(y_k) = x_0, A_k(z_k) = x_k
Map1D build_affine_Ak(const LEGModel& m, int k);

struct TechnicalResult {
    bool holds = false;
    int steps = 0;
    std::string reason;
};

TechnicalResult check_technical(const LEGModel& m, int k);

struct LegSeed {
    double x0 = 0.05;
    double x1 = 0.15;
    double y1 = 0.05;
    double z1 = 0.2;
    std::vector<double> lam{2.0, 1.7, 2.4, 1.9, 2.8, 1.6};  // cycled
    std::vector<double> coeff{1.0, 0.8, 1.2, 0.9, 1.1, 0.7};
    double rho = 0.3;
    double gap = 0.2;         // x_{k+1} - A_k(y_{k+1}) as a fraction of what is left of Gamma_1
    double dz = 0.3;          // z_k - y_k as a fraction of what is left of Gamma_2
    double room = 0.3;        // basin sampling stops at this fraction of the remaining chart
    double germ_width = 0.1;  // fraction of the remaining chart
    int basin_samples = 160;

    static LegSeed random(std::uint64_t seed);
};

LEGModel construct_Mn(int n, const LegSeed& seed = {}, double margin = 0.5);

// P from the positions, germ coefficients and widths. Throws DegenerateConfig
// when an ordering or slope condition fails.
Map1D build_first_return(const std::vector<double>& x, const std::vector<double>& y,
                         const std::vector<double>& z, const std::vector<double>& lam,
                         const std::vector<double>& coeff, const std::vector<double>& width);

// Model at parameter alpha: positions shifted by the dependence, P rebuilt.
LEGModel leg_at(const LEGModel& m, const std::vector<double>& alpha);
// Gamma_2 -> Gamma_1 return through the vanished saddle-nodes and the bridge.
Map1D leg_delta(const LEGModel& m, const std::vector<double>& alpha);
double leg_eps1(const LEGModel& m, const std::vector<double>& alpha);
double leg_eps2(const LEGModel& m, const std::vector<double>& alpha);

std::vector<std::string> validate(const GlassesModel& g);
std::vector<std::string> validate(const WGModel& w);
std::vector<std::string> validate(const LEGModel& m);

}  // namespace polylab
