#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "polylab/ensembles.hpp"
#include "polylab/model_io.hpp"

namespace polylab {

struct ConnectionEvent {
    std::vector<double> param;  // alpha
    double t = 0.0;             // coordinate on the curve
    int winding = 0;
    int i = 0;                  // left lens, 0-based
    int j = 0;                  // right lens, 0-based
    double residual = 0.0;
};

struct EventSequence {
    std::vector<ConnectionEvent> events;  // |t| strictly decreasing
    std::vector<int> missing;             // windings whose window was empty
};

// A curve through alpha = 0 along which every lens survives.
struct WGCurve {
    WGModel model;
    std::function<std::vector<double>(double)> alpha;
    double t_max = 2.0;
};

// alpha = t e_axis
WGCurve coordinate_curve(const WGModel& w, int axis, double t_max = 2.0);

struct SparklingOptions {
    double t_tol = 1e-14;  // relative bracket width
    int threads = 0;
};

EventSequence sparkling_sequence(const WGCurve& c, int i, int j, int n_lo, int n_hi,
                                 const SparklingOptions& opt = {});

std::vector<double> phi_sequence(const WGCurve& c, const EventSequence& ev);

struct TailMatch {
    std::optional<int> shift;
    bool ambiguous = false;
};

// s2[a + n] = s1[n] within tol for every overlapping n >= settle.
TailMatch tails_equal(const std::vector<double>& s1, const std::vector<double>& s2, double tol = 1e-9,
                      int settle = 10, int min_overlap = 10);

// a_n = A lam^-n and b_m = B rho^m down to t_min.
std::pair<EventSequence, EventSequence> glasses_events(const GlassesModel& g, double t_min);

struct DensityResult {
    std::vector<double> thresholds;
    std::vector<double> estimates;  // N_right(T) / N_left(T)
    double limit = 0.0;             // intercept of the fit against 1 / ln(1/T)
};

DensityResult relative_density(const EventSequence& left, const EventSequence& right,
                               const std::vector<double>& thresholds);
// 400 log-spaced thresholds from t_hi down to t_lo
std::vector<double> log_thresholds(double t_hi, double t_lo, int count = 400);

struct Interleaving {
    bool cyclic = false;
    std::vector<std::pair<int, int>> order;  // starts with the (1,1) pair
    int windows = 0;
    int first_bad_window = -1;
    std::string reason;
};

Interleaving event_interleaving(const std::vector<EventSequence>& by_pair);

// Delta_b(w) = b0 + d w + r3 w^3
struct BridgeHandles {
    double slope = 1.0;
    double cubic = 0.0;
};

struct AffineApproxParams {
    double n = 0.0;  // ln C2
    double C1 = 0.0;
    double C2 = 0.0;
    double b0 = 0.0;
};

std::vector<AffineApproxParams> affine_approx_sequence(double slope, double offset, const BridgeHandles& h,
                                                       const std::vector<double>& ns, double p1 = 0.2,
                                                       double p2 = 0.3);
Map1D affine_approx_map(const AffineApproxParams& p, const BridgeHandles& h);

struct PerturbationResult {
    std::vector<double> alpha;
    double eps1 = 0.0;
    double eps2 = 0.0;
    double residual_y = 0.0;  // Delta(y_k) - x_0
    double residual_z = 0.0;  // Delta(z_k) - x_k
    BasinResult basin{BasinResult::Status::MaxIterExceeded, 0, 0.0};
    std::vector<double> trace;  // residual norm per Newton iteration
};

// region fixes eps1; the remaining unknowns are eps2 and the bridge offset.
PerturbationResult find_perturbation(const LEGModel& m, int k, double region);

enum class ModelKind { WG, LEG };

struct FamilySpec {
    int k = 1;
    ModelKind kind = ModelKind::WG;
    WGModel wg;
    LEGModel leg;
    std::vector<Poly> constraints;  // zero set is S_V
    std::vector<Poly> reparam;      // optional alpha -> h(alpha), applied first

    std::vector<double> map(const std::vector<double>& a) const;
    Eigen::MatrixXd map_jacobian(const std::vector<double>& a) const;
    Eigen::VectorXd constraint_values(const std::vector<double>& a) const;
    Eigen::MatrixXd constraint_jacobian(const std::vector<double>& a) const;
    std::vector<double> invariants(const std::vector<double>& a) const;
    int codim() const;
};

std::vector<std::string> validate(const FamilySpec& f);

json to_json(const FamilySpec& f);
FamilySpec family_from_json(const json& j, const std::string& ptr = "");

struct LocusOptions {
    double extent = 0.2;     // arclength (d = 1) or half-width (d >= 2) on each side
    double spacing = 2e-3;   // mesh spacing
    double step = 5e-4;      // continuation step
    double min_step = 1e-8;
    double newton_tol = 1e-14;
};

struct LocusMesh {
    int d = 1;
    std::vector<std::vector<double>> s;      // arclength (d = 1) or tangent coordinates
    std::vector<std::vector<double>> alpha;
    std::vector<std::vector<double>> phi;
};

LocusMesh trace_invariant_locus(const FamilySpec& f, int d, const LocusOptions& opt = {});

// Hausdorff distance between the phi images, as polylines, inside the ball of
// the given radius around center.
double image_hausdorff(const LocusMesh& a, const LocusMesh& b, const std::vector<double>& center, double radius);

std::string events_csv(const EventSequence& ev);
std::string locus_csv(const LocusMesh& m);

}  // namespace polylab
