#pragma once

#include "polylab/maps1d.hpp"

namespace polylab {

enum class Orientation { RepellingSector, AttractingSector };

// x' = eps + x^2 + a3 x^3, y' = (lam0 + lam1 x) y, sections x = -1 and x = +1.
struct SaddleNodeUnfolding {
    double eps = 1.0;
    double a3 = 0.0;
    double lam0 = 1.0;
    double lam1 = 0.0;

    Orientation orientation() const {
        return lam0 > 0.0 ? Orientation::RepellingSector : Orientation::AttractingSector;
    }
    double speed(double x) const { return eps + x * x + a3 * x * x * x; }
    double lambda(double x) const { return lam0 + lam1 * x; }
};

inline constexpr double kMinEps = 1e-10;

// Throws SingularTransit / InvalidCharNum style errors when the unfolding is unusable.
void check_transit(const SaddleNodeUnfolding& u);

double transit_time(const SaddleNodeUnfolding& u);
double log_passage_coefficient(const SaddleNodeUnfolding& u);
Map1D passage_map(const SaddleNodeUnfolding& u);  // Scale{ln C}

// Closed forms for a3 = 0, lam1 = 0.
double transit_time_closed_form(double eps);

// Inverse of eps -> ln C(eps) for a3 = 0 style unfoldings, any lam0 sign.
// Returns eps with log_passage_coefficient(u with eps) = target.
double eps_for_log_passage(SaddleNodeUnfolding shape, double target);

Map1D dulac_corner_map(double lam, double coeff, double anchor);

enum class Section { GammaMinus, GammaPlus };

struct RectifyingChart {
    Section section = Section::GammaPlus;
    Map1D coordinate = Map1D::identity();
};

// Least-squares affine fit of c2∘c1^{-1} on the probe; throws NotAffine when the
// sampled transition deviates from it by more than 1e-8 * probe length.
Map1D chart_transition(const RectifyingChart& c1, const RectifyingChart& c2, Interval probe,
                       int grid_n = 64);

}  // namespace polylab
