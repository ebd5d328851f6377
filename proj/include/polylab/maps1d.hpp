#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "polylab/errors.hpp"

namespace polylab {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    Interval() = default;
    Interval(double lo_, double hi_);
    double length() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
};

struct MapNode;

// Orientation-preserving one-dimensional map, stored as an immutable
// expression tree. Compose nodes apply their stages left to right, so
// compose({f, g, h}) is h∘g∘f in functional notation.
class Map1D {
public:
    enum class Kind { Affine, Power, Scale, ParabolicStep, Polynomial, Piecewise, Compose };

    struct Eval {
        double value;
        double derivative;
    };

    static Map1D affine(double slope, double offset);
    static Map1D identity() { return affine(1.0, 0.0); }
    // x -> z0 + C (x - z0)^lam, x >= z0
    static Map1D power(double z0, double coeff, double lam);
    static Map1D scale(double logc);
    // x -> x + delta + x^2 + a3 x^3
    static Map1D parabolic_step(double delta, double a3);
    // x -> sum c_i x^i
    static Map1D polynomial(std::vector<double> coeffs);
    static Map1D piecewise(std::vector<double> breaks, std::vector<Map1D> branches,
                           std::vector<double> at_break);
    static Map1D compose(const std::vector<Map1D>& maps);

    Kind kind() const;
    const MapNode& node() const { return *node_; }

    Eval eval(double x) const;
    double operator()(double x) const { return eval(x).value; }

    // Number of top-level stages (1 unless a Compose node).
    int stage_count() const;

private:
    explicit Map1D(std::shared_ptr<const MapNode> n) : node_(std::move(n)) {}
    std::shared_ptr<const MapNode> node_;
};

struct AffineNode {
    double slope;
    double offset;
};
struct PowerNode {
    double z0;
    double coeff;
    double lam;
};
struct ScaleNode {
    double logc;
};
struct ParabolicStep {
    double delta;
    double a3;

    double operator()(double x) const { return x + delta + x * x + a3 * x * x * x; }
    double increment(double x) const { return delta + x * x + a3 * x * x * x; }
};
struct PolynomialNode {
    std::vector<double> coeffs;
};
struct PiecewiseNode {
    std::vector<double> breaks;
    std::vector<Map1D> branches;
    std::vector<double> at_break;
};
struct ComposeNode {
    std::vector<Map1D> maps;
};

struct MapNode {
    std::variant<AffineNode, PowerNode, ScaleNode, ParabolicStep, PolynomialNode, PiecewiseNode,
                 ComposeNode>
        v;
};

Map1D::Eval evaluate_with_derivative(const Map1D& m, double x);
Map1D compose(const std::vector<Map1D>& ms);

inline constexpr double kDefaultTol = 1e-12;
inline constexpr int kDefaultMaxIter = 10000;
inline constexpr int kMonotoneGrid = 128;

double solve_preimage(const Map1D& m, double target, Interval bracket, double tol = kDefaultTol);

double c1_distance(const Map1D& m1, const Map1D& m2, Interval iv, int grid_n);

struct BasinResult {
    enum class Status { Converged, Escaped, MaxIterExceeded };
    Status status;
    int steps;        // iterations performed
    double position;  // last iterate (escape position for Escaped)

    bool converged() const { return status == Status::Converged; }
};

// Iterates m from x0. When `chart` is given, leaving it counts as escape.
BasinResult basin_converges(const Map1D& m, double x0, double target, double tol = kDefaultTol,
                            int max_iter = kDefaultMaxIter,
                            std::optional<Interval> chart = std::nullopt);

// Smallest n with g^n(from) >= to.
long long transit_count(const ParabolicStep& g, double from, double to,
                        long long max_steps = 4'000'000'000LL);

// min of delta + x^2 + a3 x^3 over [lo, hi], exact through critical points.
double parabolic_increment_min(const ParabolicStep& g, double lo, double hi);

// Derivative-positivity and value-increase check on a uniform grid.
// Returns the first offending grid abscissa, if any.
std::optional<double> find_monotonicity_violation(const Map1D& m, Interval iv,
                                                  int grid_n = kMonotoneGrid);

}  // namespace polylab
