#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "polylab/ensembles.hpp"
#include "polylab/model_io.hpp"
#include "polylab/normal_forms.hpp"

namespace polylab {

using Vec2 = Eigen::Vector2d;

struct Box {
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    bool contains(const Vec2& p) const { return p.x() > x0 && p.x() < x1 && p.y() > y0 && p.y() < y1; }
    bool overlaps(const Box& b) const { return x0 < b.x1 && b.x0 < x1 && y0 < b.y1 && b.y0 < y1; }
    Vec2 center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
};

// x' = x - cx, y' = -lam (y - cy)
struct SaddleCell {
    double lam = 1.0;
    Vec2 center{0.0, 0.0};
};

// x' = eps + xi^2 + a3 xi^3, y' = lam0 eta around center
struct SaddleNodeCell {
    double eps = 0.0;
    double a3 = 0.0;
    double lam0 = 1.0;
    Vec2 center{0.0, 0.0};
};

// p' = rate (p - center)
struct SourceCell {
    double rate = 1.0;
    Vec2 center{0.0, 0.0};
};

// Uniform flow plus a regularized anisotropic source at `source`:
//   u = 1 + k X / (r^2 + a^2),  v = gamma k Y / (r^2 + a^2) + drift g(x),
// a = areg k. The saddle sits on the axis upstream of the source and gamma
// is chosen so that its characteristic number is exactly lam. g is a bump
// on [drift_lo, drift_hi], which must end upstream of the saddle.
struct CherryCell {
    double lam = 2.0;
    Vec2 source{0.0, 0.0};
    double k = 0.05;
    double areg = 0.25;
    double drift = 0.0;
    double drift_lo = 0.0, drift_hi = 0.0;

    double saddle_offset() const;  // saddle x minus source x
    Vec2 saddle() const { return {source.x() + saddle_offset(), source.y()}; }
    double gamma() const;
};

using CellKind = std::variant<SaddleCell, SaddleNodeCell, SourceCell, CherryCell>;

struct Cell {
    std::string name;
    Box box;
    CellKind local;
    double blend = 0.05;  // collar width, < min(width, height) / 4
};

// Affine background A p + b, default (1, 0). period > 0 identifies x with x + period.
struct PlanarField {
    Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
    Vec2 b{1.0, 0.0};
    std::vector<Cell> cells;
    double period = 0.0;

    Vec2 background(const Vec2& p) const { return A * p + b; }
    Vec2 operator()(const Vec2& p) const;
    Eigen::Matrix2d jacobian(const Vec2& p, double h = 1e-7) const;
};

// C^3 septic smoothstep, 0 at t <= 0, 1 at t >= 1.
double smoothstep3(double t);
Vec2 local_field(const CellKind& k, const Vec2& p);

std::vector<std::string> validate(const PlanarField& f);

// Points a + s (b - a), s in [0, 1]; chart maps s to the section coordinate.
struct CrossSection {
    Vec2 a{0.0, 0.0};
    Vec2 b{0.0, 1.0};
    int orientation = 0;  // required sign of f . normal at crossings, 0 for either
    Map1D chart = Map1D::identity();

    Vec2 normal() const;  // unit, (b - a) rotated clockwise
    double signed_distance(const Vec2& p) const { return normal().dot(p - a); }
    double parameter(const Vec2& p) const;
    double coordinate(const Vec2& p) const { return chart(parameter(p)); }
    Vec2 point(double coordinate) const;

    // x = const, chart is the height y
    static CrossSection vertical(double x, double y0, double y1, int orientation = 0);
};

std::vector<std::string> check_transversal(const PlanarField& f, const CrossSection& s, int grid = 64,
                                           double min_normal = 1e-6);

struct IntegrateOptions {
    double rtol = 1e-12;
    Vec2 atol{1e-12, 1e-12};
    double t_max = 100.0;
    double h0 = 1e-3;
    double h_max = 0.05;
    long max_steps = 4000000;
    int direction = 1;  // -1 integrates backward in time
};

IntegrateOptions with_tol(double tol, double t_max, int direction = 1);

struct PoincareSample {
    double input = 0.0;
    double output = 0.0;
    double time = 0.0;
    Vec2 point{0.0, 0.0};
    long steps = 0;
    long rejected = 0;
    double residual = 0.0;  // distance of the reported crossing from the section line
};

struct Crossing {
    int section = 0;
    double time = 0.0;
    Vec2 point{0.0, 0.0};
    double coordinate = 0.0;
    double residual = 0.0;
};

struct Trajectory {
    std::vector<double> t;
    std::vector<Vec2> p;
    std::vector<Crossing> crossings;
    long steps = 0;
    long rejected = 0;
    bool left_region = false;
};

// Stops at the first valid crossing of any section, on leaving `region` or at t_max.
Trajectory flow(const PlanarField& f, const Vec2& p0, const IntegrateOptions& opt,
                const std::vector<CrossSection>& sections = {}, const std::optional<Box>& region = {},
                bool record = true);

std::optional<PoincareSample> integrate_to_section(const PlanarField& f, const Vec2& p0,
                                                   const CrossSection& target, double tol, double t_max);
std::optional<PoincareSample> integrate_to_section(const PlanarField& f, const Vec2& p0,
                                                   const CrossSection& target, const IntegrateOptions& opt);

struct PoincareTable {
    std::vector<PoincareSample> samples;           // in input order
    std::vector<std::pair<double, std::string>> failures;
};

PoincareTable poincare_table(const PlanarField& f, const CrossSection& src, const CrossSection& dst,
                             const std::vector<double>& inputs, const IntegrateOptions& opt = {},
                             int threads = 0);

// Inputs are contiguous runs of samples without a jump larger than jump_tol.
bool monotone_increasing(const PoincareTable& t);

struct DulacFit {
    double lam = 0.0;
    double coeff = 0.0;
    double residual = 0.0;  // max |log residual|
    int used = 0;
};

// Least squares of ln|P - base| against ln|x - anchor| over the samples on
// the better-populated side of anchor.
DulacFit fit_dulac_exponent(const std::vector<PoincareSample>& samples, double anchor, double base);

enum class SepKind { Stable, Unstable };

struct SeparatrixShot {
    Vec2 saddle{0.0, 0.0};
    Eigen::Vector2d eigenvalues{0.0, 0.0};  // stable, unstable
    Vec2 direction{0.0, 0.0};               // launch direction
    Trajectory path;
};

// branch +1 launches along the eigenvector whose largest component is positive.
SeparatrixShot shoot_separatrix(const PlanarField& f, const Box& saddle_box, SepKind which, int branch,
                                double horizon, const std::vector<CrossSection>& sections = {},
                                double tol = 1e-12);

// Newton from the box center; throws NewtonDiverged or NotASaddle.
Vec2 locate_saddle(const PlanarField& f, const Box& box);

struct LipsOptions {
    double column_width = 0.9;
    double column_gap = 0.1;
    double lens_lam = 2.0;
    double max_blend = 0.03;
    double solve_tol = 1e-9;       // landing error targeted by the placement loop
    double placement_tol = 1e-4;   // accepted landing error
    double tol = 1e-12;            // integration tolerance
};

struct MarkedSeparatrix {
    std::string name;
    int cell = 0;  // index into field.cells
    SepKind which = SepKind::Stable;
    int branch = -1;
    int section = 0;  // 0 = Gamma_1, 1 = Gamma_2
    double blueprint = 0.0;
};

struct LipsAssembly {
    int n = 0;
    PlanarField field;
    CrossSection gamma1, gamma2;
    int s1 = 0, s2 = 0, lens = 0;  // cell indices
    std::vector<int> cherry;       // cells of L_1 .. L_{n+1}
    std::vector<MarkedSeparatrix> marked;
    std::vector<double> lam;       // blueprint lambda_k
    std::vector<double> x, y, z;   // blueprint coordinates

    Box saddle_box(int cell) const;
};

LipsAssembly assemble_lips(const LEGModel& blueprint, const LipsOptions& opt = {});

struct Landing {
    std::string name;
    double blueprint = 0.0;
    double achieved = 0.0;
    double error = 0.0;
};

std::vector<Landing> landing_audit(const LipsAssembly& a, int threads = 0);

// Fitted lambda_k at each x_k from inputs x_k + d, d log-spaced over [d_lo, d_hi].
std::vector<DulacFit> lips_dulac_fits(const LipsAssembly& a, double d_lo = 1e-5, double d_hi = 1e-3,
                                      int samples = 12, int threads = 0);

struct PassageEstimate {
    double eps = 0.0;
    double log_c = 0.0;      // from integration
    double reference = 0.0;  // log_passage_coefficient
    double rel_error = 0.0;
};

// One SaddleNodeCell with the shape (a3, lam0) of `shape`; sections xi = -1 and xi = +1.
std::vector<PassageEstimate> measure_passage(const SaddleNodeUnfolding& shape, const std::vector<double>& eps,
                                             int threads = 0);
PlanarField saddle_node_field(const SaddleNodeUnfolding& u);

json to_json(const PlanarField& f);
PlanarField planar_field_from_json(const json& j, const std::string& ptr = "");
json to_json(const LipsAssembly& a);
LipsAssembly lips_from_json(const json& j, const std::string& ptr = "");

std::string trajectory_csv(const Trajectory& t);

struct PortraitOptions {
    int width = 800;
    int streamlines = 24;
    double t_max = 40.0;
    std::string version = "polylab";
};

struct MarkedPath {
    std::string name;
    std::vector<Vec2> points;
};

std::string portrait_svg(const PlanarField& f, const Box& region, const std::vector<MarkedPath>& marked,
                         const PortraitOptions& opt = {});
// Marked separatrices of every saddle of the assembly.
std::vector<MarkedPath> lips_separatrices(const LipsAssembly& a);

}  // namespace polylab
