#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "polylab/bifurcation.hpp"
#include "polylab/families.hpp"
#include "polylab/parallel.hpp"
#include "polylab/phase2d.hpp"

#ifndef POLYLAB_VERSION
#define POLYLAB_VERSION "dev"
#endif

using namespace polylab;
namespace fs = std::filesystem;

namespace {

const double kPi = std::acos(-1.0);

// Scenario parameters: every lookup records its default and effective value.
class Params {
public:
    explicit Params(json user) : user_(std::move(user)) {
        if (!user_.is_object()) throw ConfigError("/params", "expected an object");
    }

    double real(const std::string& key, double def, bool positive = false) {
        defaults_[key] = def;
        double v = def;
        if (user_.contains(key)) v = read_real(user_.at(key), "/params/" + key);
        if (positive && !(v > 0.0)) throw ConfigError("/params/" + key, "must be positive");
        effective_[key] = v;
        used_.insert(key);
        return v;
    }

    int integer(const std::string& key, int def, int min = std::numeric_limits<int>::min()) {
        defaults_[key] = def;
        int v = def;
        if (user_.contains(key)) {
            const auto& j = user_.at(key);
            if (!j.is_number_integer()) throw ConfigError("/params/" + key, "expected an integer");
            v = j.get<int>();
        }
        if (v < min) throw ConfigError("/params/" + key, "must be at least " + std::to_string(min));
        effective_[key] = v;
        used_.insert(key);
        return v;
    }

    std::vector<double> reals(const std::string& key, std::vector<double> def, bool positive = false) {
        defaults_[key] = def;
        std::vector<double> v = def;
        if (user_.contains(key)) {
            const auto& j = user_.at(key);
            if (!j.is_array()) throw ConfigError("/params/" + key, "expected an array");
            v.clear();
            for (std::size_t i = 0; i < j.size(); ++i)
                v.push_back(read_real(j[i], "/params/" + key + "/" + std::to_string(i)));
        }
        for (std::size_t i = 0; i < v.size(); ++i)
            if (positive && !(v[i] > 0.0))
                throw ConfigError("/params/" + key + "/" + std::to_string(i), "must be positive");
        effective_[key] = v;
        used_.insert(key);
        return v;
    }

    std::vector<int> integers(const std::string& key, std::vector<int> def) {
        defaults_[key] = def;
        std::vector<int> v = def;
        if (user_.contains(key)) {
            const auto& j = user_.at(key);
            if (!j.is_array()) throw ConfigError("/params/" + key, "expected an array");
            v.clear();
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (!j[i].is_number_integer())
                    throw ConfigError("/params/" + key + "/" + std::to_string(i), "expected an integer");
                v.push_back(j[i].get<int>());
            }
        }
        effective_[key] = v;
        used_.insert(key);
        return v;
    }

    void check_unused() const {
        for (auto it = user_.begin(); it != user_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError("/params/" + it.key(), "unknown parameter");
    }

    const json& defaults() const { return defaults_; }
    const json& effective() const { return effective_; }

private:
    json user_;
    json defaults_ = json::object();
    json effective_ = json::object();
    std::set<std::string> used_;
};

struct Config {
    std::string scenario;
    fs::path model_path;
    ModelDocument model;
    std::string model_hash;
    json params = json::object();
    std::string out = "polylab-out";
    std::uint64_t seed = 1;
    int threads = 0;
    json raw;
};

const std::map<std::string, std::vector<std::string>> kScenarioKinds = {
    {"density", {"glasses"}},   {"sparkling", {"wg"}},      {"tails", {"wg"}},
    {"leg-perturb", {"leg"}},   {"locus", {"family"}},      {"lips-2d", {"leg", "assembly"}},
    {"passage", {"saddle-node"}},
};

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Config load_config(const std::string& path, bool need_scenario) {
    Config c;
    c.raw = read_json_file(path);
    if (!c.raw.is_object()) throw ConfigError("/", "config must be an object");
    static const std::set<std::string> known = {"scenario", "model", "params", "out", "seed", "threads"};
    for (auto it = c.raw.begin(); it != c.raw.end(); ++it)
        if (!known.count(it.key())) throw ConfigError("/" + it.key(), "unknown field");

    if (need_scenario || c.raw.contains("scenario")) {
        const auto& s = field(c.raw, "scenario", "");
        if (!s.is_string() || !kScenarioKinds.count(s.get<std::string>()))
            throw ConfigError("/scenario", "expected one of density, sparkling, tails, leg-perturb, locus, lips-2d, passage");
        c.scenario = s.get<std::string>();
    }
    const auto& m = field(c.raw, "model", "");
    if (!m.is_string()) throw ConfigError("/model", "expected a file path");
    c.model_path = fs::path(m.get<std::string>());
    if (c.model_path.is_relative()) c.model_path = fs::path(path).parent_path() / c.model_path;
    json doc = read_json_file(c.model_path.string());
    c.model = parse_model_document(doc);
    c.model_hash = hex64(fnv1a(doc.dump()));
    if (!c.scenario.empty()) {
        const auto& kinds = kScenarioKinds.at(c.scenario);
        if (std::find(kinds.begin(), kinds.end(), c.model.kind) == kinds.end())
            throw ConfigError("/model", "scenario " + c.scenario + " does not accept a " + c.model.kind + " model");
    }
    if (c.raw.contains("params")) c.params = c.raw.at("params");
    if (c.raw.contains("out")) {
        if (!c.raw.at("out").is_string()) throw ConfigError("/out", "expected a directory path");
        c.out = c.raw.at("out").get<std::string>();
    }
    if (c.raw.contains("seed")) {
        if (!c.raw.at("seed").is_number_unsigned()) throw ConfigError("/seed", "expected an unsigned integer");
        c.seed = c.raw.at("seed").get<std::uint64_t>();
    }
    if (c.raw.contains("threads")) {
        if (!c.raw.at("threads").is_number_integer() || c.raw.at("threads").get<int>() < 0)
            throw ConfigError("/threads", "expected a non-negative integer");
        c.threads = c.raw.at("threads").get<int>();
    }
    return c;
}

// Violations of the loaded model, empty when valid.
std::vector<std::string> model_violations(const ModelDocument& d) {
    const std::string p = "/model";
    if (d.kind == "glasses") return validate(glasses_from_json(d.model, p));
    if (d.kind == "wg") return validate(wg_from_json(d.model, p));
    if (d.kind == "leg") return validate(leg_from_json(d.model, p));
    if (d.kind == "family") return validate(family_from_json(d.model, p));
    if (d.kind == "assembly") return validate(lips_from_json(d.model, p).field);
    auto u = unfolding_from_json(d.model, p);
    try {
        check_transit(u);
    } catch (const Error& e) {
        return {e.what()};
    }
    return {};
}

struct Outcome {
    json results = json::object();
    json assertions = json::array();
    std::map<std::string, std::string> files;
    bool ok = true;

    void check(const std::string& name, bool pass, double value, double limit) {
        assertions.push_back({{"name", name}, {"pass", pass}, {"value", value}, {"limit", limit}});
        ok = ok && pass;
    }
};

std::string csv_row(std::initializer_list<double> v) {
    std::ostringstream os;
    os.precision(17);
    bool first = true;
    for (double x : v) {
        if (!first) os << ',';
        os << x;
        first = false;
    }
    os << '\n';
    return os.str();
}

void run_density(const Config& c, Params& p, Outcome& o) {
    auto g = glasses_from_json(c.model.model, "/model");
    double t_hi = p.real("t_hi", 1e-3, true);
    double t_min = p.real("t_min", 1e-12, true);
    int count = p.integer("thresholds", 400, 2);
    double tol = p.real("tol", 0.03, true);
    auto [l, r] = glasses_events(g, t_min);
    auto d = relative_density(l, r, log_thresholds(t_hi, t_min, count));
    double target = phi(g.lam, g.rho);
    double rel = std::abs(d.limit / target - 1.0);
    o.results = {{"limit", d.limit},      {"phi", target},          {"rel_error", rel},
                 {"left_events", l.events.size()}, {"right_events", r.events.size()}};
    std::string csv = "threshold,estimate\n";
    for (std::size_t i = 0; i < d.thresholds.size(); ++i) csv += csv_row({d.thresholds[i], d.estimates[i]});
    o.files["density.csv"] = csv;
    o.check("density limit matches -ln lam / ln rho", rel < tol, rel, tol);
}

WGCurve scenario_curve(const WGModel& w, Params& p) {
    int axis = p.integer("axis", 0, 0);
    double t_max = p.real("t_max", 1.0, true);
    if (axis >= w.dep.k) throw ConfigError("/params/axis", "axis outside the parameter space");
    return coordinate_curve(w, axis, t_max);
}

void run_sparkling(const Config& c, Params& p, Outcome& o) {
    auto w = wg_from_json(c.model.model, "/model");
    auto viol = validate(w);
    if (!viol.empty()) throw ModelInvalid(viol);
    auto curve = scenario_curve(w, p);
    int i = p.integer("i", 0, 0), j = p.integer("j", 0, 0);
    int n_lo = p.integer("n_lo", 5, 1), n_hi = p.integer("n_hi", 400, 1);
    if (i >= w.M || j >= w.N) throw ConfigError("/params/i", "lens index out of range");
    SparklingOptions so;
    so.threads = c.threads;
    auto ev = sparkling_sequence(curve, i, j, n_lo, n_hi, so);
    auto ph = phi_sequence(curve, ev);
    bool decreasing = true, consecutive = true;
    double max_res = 0.0;
    for (std::size_t q = 0; q < ev.events.size(); ++q) {
        max_res = std::max(max_res, ev.events[q].residual);
        if (q == 0) continue;
        decreasing = decreasing && std::abs(ev.events[q].t) < std::abs(ev.events[q - 1].t);
        consecutive = consecutive && ev.events[q].winding == ev.events[q - 1].winding + 1;
    }
    double phi0 = phi_matrix(w, std::vector<double>(w.dep.k, 0.0)).phi(i, j);
    o.results = {{"events", ev.events.size()}, {"missing", ev.missing}, {"phi0", phi0}, {"max_residual", max_res}};
    if (!ev.events.empty()) {
        const auto& last = ev.events.back();
        o.results["phi_last"] = ph.back();
        o.results["transit_ratio_last"] = last.winding * std::sqrt(std::abs(last.t)) / kPi;
    }
    o.files["events.csv"] = events_csv(ev);
    std::string csv = "winding,phi\n";
    for (std::size_t q = 0; q < ph.size(); ++q) csv += csv_row({double(ev.events[q].winding), ph[q]});
    o.files["phi.csv"] = csv;
    o.check("no empty winding windows", ev.missing.empty(), double(ev.missing.size()), 0.0);
    o.check("|t_n| strictly decreasing", decreasing, 0.0, 0.0);
    o.check("windings consecutive", consecutive, 0.0, 0.0);
}

void run_tails(const Config& c, Params& p, Outcome& o) {
    auto w = wg_from_json(c.model.model, "/model");
    auto viol = validate(w);
    if (!viol.empty()) throw ModelInvalid(viol);
    double t_max = p.real("t_max", 1.0, true);
    int i = p.integer("i", 0, 0), j = p.integer("j", 0, 0);
    int n_lo = p.integer("n_lo", 10, 1), n_hi = p.integer("n_hi", 60, 1);
    int count = p.integer("reparams", 5, 1);
    double tol = p.real("tol", 1e-9, true);
    int settle = p.integer("settle", 10, 0);
    std::vector<double> fixed = p.reals("reparam", {});
    if (i >= w.M || j >= w.N) throw ConfigError("/params/i", "lens index out of range");

    // h(t) = t + c2 t^2 + c3 t^3 with h' > 0 on [0, t_max]
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<std::vector<double>> hs;
    if (!fixed.empty()) hs.push_back(fixed);
    for (int q = 0; q < count; ++q) {
        double c3 = 0.3 * U(rng) / (t_max * t_max);
        double c2 = (0.6 * U(rng) - 0.3) / t_max;
        hs.push_back({0.0, 1.0, c2, c3});
    }
    SparklingOptions so;
    so.threads = c.threads;
    auto base = coordinate_curve(w, 0, t_max);
    auto phi_base = phi_sequence(base, sparkling_sequence(base, i, j, n_lo, n_hi, so));
    json rows = json::array();
    int matched = 0;
    for (const auto& h : hs) {
        for (int q = 1; q <= 200; ++q) {
            double t = t_max * q / 200.0, dh = 0.0;
            for (std::size_t e = 1; e < h.size(); ++e) dh += e * h[e] * std::pow(t, double(e - 1));
            if (!(dh > 0.0)) throw ConfigError("/params/reparam", "reparameterization is not orientation preserving");
        }
        auto curve = polynomial_curve(w, h, t_max);
        auto ph = phi_sequence(curve, sparkling_sequence(curve, i, j, n_lo, n_hi, so));
        auto m = tails_equal(phi_base, ph, tol, settle);
        json row = {{"h", h}, {"matched", m.shift.has_value()}, {"ambiguous", m.ambiguous}};
        if (m.shift) {
            row["shift"] = *m.shift;
            ++matched;
        }
        rows.push_back(row);
    }
    o.results = {{"reparameterizations", rows}, {"matched", matched}};
    o.check("every reparameterized tail matches", matched == int(hs.size()), matched, double(hs.size()));
}

void run_leg_perturb(const Config& c, Params& p, Outcome& o) {
    auto m = leg_from_json(c.model.model, "/model");
    auto viol = validate(m);
    if (!viol.empty()) throw ModelInvalid(viol);
    std::vector<int> all;
    for (int k = 1; k <= m.n; ++k) all.push_back(k);
    auto ks = p.integers("k", all);
    double region = p.real("region", 1e-2, true);
    double tol = p.real("tol", 1e-10, true);
    int decades = p.integer("shrink_decades", 4, 0);
    double shrink_slack = p.real("shrink_slack", 1.25, true);
    json rows = json::array();
    for (int k : ks) {
        auto r = find_perturbation(m, k, region);
        double res = std::max(std::abs(r.residual_y), std::abs(r.residual_z));
        rows.push_back({{"k", k},
                        {"alpha", r.alpha},
                        {"eps1", r.eps1},
                        {"eps2", r.eps2},
                        {"residual_y", r.residual_y},
                        {"residual_z", r.residual_z},
                        {"basin_converged", r.basin.converged()},
                        {"basin_steps", r.basin.steps},
                        {"newton_trace", r.trace}});
        o.check("k=" + std::to_string(k) + " residual", res < tol, res, tol);
        o.check("k=" + std::to_string(k) + " basin certificate", r.basin.converged(), r.basin.steps, 0.0);
        double prev = 0.0;
        for (int dcd = 0; dcd <= decades; ++dcd) {
            auto s = find_perturbation(m, k, region * std::pow(10.0, -dcd));
            double nrm = 0.0;
            for (double a : s.alpha) nrm += a * a;
            nrm = std::sqrt(nrm);
            if (dcd > 0) {
                double ratio = prev / nrm;
                o.check("k=" + std::to_string(k) + " |alpha| ratio at decade " + std::to_string(dcd),
                        ratio > 10.0 / shrink_slack && ratio < 10.0 * shrink_slack, ratio, 10.0);
            }
            prev = nrm;
        }
    }
    o.results = {{"perturbations", rows}};
}

void run_locus(const Config& c, Params& p, Outcome& o) {
    auto f = family_from_json(c.model.model, "/model");
    LocusOptions lo;
    int d = p.integer("d", 1, 1);
    lo.extent = p.real("extent", lo.extent, true);
    lo.spacing = p.real("spacing", lo.spacing, true);
    lo.step = p.real("step", lo.step, true);
    lo.newton_tol = p.real("newton_tol", lo.newton_tol, true);
    double tol = p.real("tol", 1e-10, true);
    auto mesh = trace_invariant_locus(f, d, lo);
    double worst = 0.0;
    for (const auto& a : mesh.alpha) worst = std::max(worst, f.constraint_values(a).cwiseAbs().maxCoeff());
    o.results = {{"points", mesh.alpha.size()}, {"max_constraint", worst}};
    if (!mesh.phi.empty()) {
        o.results["phi_first"] = mesh.phi.front();
        o.results["phi_last"] = mesh.phi.back();
    }
    o.files["locus.csv"] = locus_csv(mesh);
    o.check("mesh lies on the degeneracy locus", worst < tol, worst, tol);
    o.check("mesh is non-empty", mesh.alpha.size() > 1, double(mesh.alpha.size()), 2.0);
}

LipsAssembly load_assembly(const Config& c) {
    if (c.model.kind == "assembly") return lips_from_json(c.model.model, "/model");
    auto m = leg_from_json(c.model.model, "/model");
    return assemble_lips(m);
}

std::string landings_csv(const std::vector<Landing>& l) {
    std::ostringstream os;
    os.precision(17);
    os << "name,blueprint,achieved,error\n";
    for (const auto& x : l) os << x.name << ',' << x.blueprint << ',' << x.achieved << ',' << x.error << '\n';
    return os.str();
}

Box default_region(const LipsAssembly& a) { return {0.0, a.field.period, -0.5, 1.5}; }

PortraitOptions portrait_options(Params& p) {
    PortraitOptions po;
    po.width = p.integer("width", po.width, 16);
    po.streamlines = p.integer("streamlines", po.streamlines, 0);
    po.t_max = p.real("t_max", po.t_max, true);
    po.version = std::string("polylab ") + POLYLAB_VERSION;
    return po;
}

Box region_param(Params& p, const Box& def) {
    auto r = p.reals("region", {def.x0, def.x1, def.y0, def.y1});
    if (r.size() != 4 || !(r[1] > r[0]) || !(r[3] > r[2]))
        throw ConfigError("/params/region", "expected [x0, x1, y0, y1] with x0 < x1 and y0 < y1");
    return {r[0], r[1], r[2], r[3]};
}

void run_lips(const Config& c, Params& p, Outcome& o) {
    double d_lo = p.real("d_lo", 1e-5, true), d_hi = p.real("d_hi", 1e-3, true);
    int samples = p.integer("samples", 12, 3);
    double landing_tol = p.real("landing_tol", 1e-4, true);
    double lam_tol = p.real("lam_tol", 0.02, true);
    int portrait = p.integer("portrait", 1, 0);
    PortraitOptions po = portrait_options(p);
    LipsAssembly a = load_assembly(c);
    Box region = region_param(p, default_region(a));

    auto audit = landing_audit(a, c.threads);
    auto fits = lips_dulac_fits(a, d_lo, d_hi, samples, c.threads);
    double worst_land = 0.0, worst_lam = 0.0;
    for (const auto& l : audit) worst_land = std::max(worst_land, l.error);
    json fj = json::array();
    std::ostringstream dc;
    dc.precision(17);
    dc << "k,blueprint,fitted,rel_error,residual,used\n";
    for (std::size_t k = 0; k < fits.size(); ++k) {
        double rel = std::abs(fits[k].lam / a.lam[k] - 1.0);
        worst_lam = std::max(worst_lam, rel);
        fj.push_back({{"k", k + 1}, {"blueprint", a.lam[k]}, {"fitted", fits[k].lam}, {"rel_error", rel}});
        dc << k + 1 << ',' << a.lam[k] << ',' << fits[k].lam << ',' << rel << ',' << fits[k].residual << ','
           << fits[k].used << '\n';
    }
    json lj = json::array();
    for (const auto& l : audit)
        lj.push_back({{"name", l.name}, {"blueprint", l.blueprint}, {"achieved", l.achieved}, {"error", l.error}});
    o.results = {{"n", a.n}, {"landings", lj}, {"dulac", fj}, {"max_landing_error", worst_land},
                 {"max_lambda_rel_error", worst_lam}, {"cells", a.field.cells.size()}};
    o.files["assembly.json"] = model_document("assembly", to_json(a)).dump(2) + "\n";
    o.files["landings.csv"] = landings_csv(audit);
    o.files["dulac.csv"] = dc.str();
    if (portrait) o.files["portrait.svg"] = portrait_svg(a.field, region, lips_separatrices(a), po);
    o.check("separatrix landings", worst_land < landing_tol, worst_land, landing_tol);
    o.check("fitted Dulac exponents", worst_lam < lam_tol, worst_lam, lam_tol);
}

void run_passage(const Config& c, Params& p, Outcome& o) {
    auto u = unfolding_from_json(c.model.model, "/model");
    auto eps = p.reals("eps", {1.0, 0.25, 0.04}, true);
    double tol = p.real("tol", 1e-6, true);
    auto est = measure_passage(u, eps, c.threads);
    bool closed = u.a3 == 0.0 && u.lam1 == 0.0;
    json rows = json::array();
    std::ostringstream os;
    os.precision(17);
    os << "eps,log_c_flow,log_c_quadrature,rel_error\n";
    double worst = 0.0;
    for (const auto& e : est) {
        json r = {{"eps", e.eps}, {"log_c", e.log_c}, {"reference", e.reference}, {"rel_error", e.rel_error}};
        if (closed) r["closed_form"] = u.lam0 * transit_time_closed_form(e.eps);
        rows.push_back(r);
        worst = std::max(worst, e.rel_error);
        os << e.eps << ',' << e.log_c << ',' << e.reference << ',' << e.rel_error << '\n';
    }
    o.results = {{"passages", rows}, {"max_rel_error", worst}};
    o.files["passage.csv"] = os.str();
    o.check("integrated ln C matches quadrature", worst < tol, worst, tol);
}

void write_outputs(const fs::path& dir, const Outcome& o, const json& report) {
    fs::create_directories(dir);
    for (const auto& [name, text] : o.files) write_text_file((dir / name).string(), text);
    write_text_file((dir / "report.json").string(), report.dump(2) + "\n");
}

json report_head(const Config& c, const std::string& command) {
    return {{"command", command},
            {"scenario", c.scenario},
            {"version", POLYLAB_VERSION},
            {"model", {{"kind", c.model.kind}, {"hash", c.model_hash}}},
            {"seed", c.seed},
            {"config", c.raw}};
}

int cmd_run(Config c) {
    Params p(c.params);
    Outcome o;
    if (c.scenario == "density") run_density(c, p, o);
    else if (c.scenario == "sparkling") run_sparkling(c, p, o);
    else if (c.scenario == "tails") run_tails(c, p, o);
    else if (c.scenario == "leg-perturb") run_leg_perturb(c, p, o);
    else if (c.scenario == "locus") run_locus(c, p, o);
    else if (c.scenario == "lips-2d") run_lips(c, p, o);
    else run_passage(c, p, o);
    p.check_unused();

    json report = report_head(c, "run");
    report["defaults"] = p.defaults();
    report["params"] = p.effective();
    report["results"] = o.results;
    report["assertions"] = o.assertions;
    report["status"] = o.ok ? "pass" : "fail";
    write_outputs(c.out, o, report);
    for (const auto& a : o.assertions)
        std::cout << (a["pass"].get<bool>() ? "ok    " : "FAIL  ") << a["name"].get<std::string>() << "\n";
    std::cout << c.scenario << ": " << (o.ok ? "pass" : "fail") << ", outputs in " << c.out << "\n";
    return o.ok ? 0 : 1;
}

int cmd_render(Config c) {
    if (c.model.kind != "assembly" && c.model.kind != "leg")
        throw ConfigError("/model", "render needs an assembly or leg model");
    Params p(c.params);
    PortraitOptions po = portrait_options(p);
    LipsAssembly a = load_assembly(c);
    Box region = region_param(p, default_region(a));
    p.check_unused();
    Outcome o;
    auto audit = landing_audit(a, c.threads);
    o.files["portrait.svg"] = portrait_svg(a.field, region, lips_separatrices(a), po);
    o.files["landings.csv"] = landings_csv(audit);
    json report = report_head(c, "render");
    report["defaults"] = p.defaults();
    report["params"] = p.effective();
    write_outputs(c.out, o, report);
    std::cout << "portrait written to " << (fs::path(c.out) / "portrait.svg").string() << "\n";
    return 0;
}

int cmd_validate(const Config& c) {
    auto v = model_violations(c.model);
    if (v.empty()) {
        std::cout << c.model_path.string() << ": valid " << c.model.kind << " model, hash " << c.model_hash << "\n";
        return 0;
    }
    throw ModelInvalid(v);
}

int exit_code(const Error& e) {
    switch (e.error_class()) {
        case ErrorClass::Config:
        case ErrorClass::Model:
            return 2;
        case ErrorClass::Numeric:
            break;
    }
    return 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"polylab: scenario runner for planar bifurcation experiments"};
    app.require_subcommand(1);
    std::string config, out;
    std::uint64_t seed = 0;
    int threads = 0;
    auto add_common = [&](CLI::App* s, bool with_seed) {
        s->add_option("--config", config, "scenario config file")->required();
        s->add_option("--out", out, "output directory");
        s->add_option("--threads", threads, "worker threads")->check(CLI::NonNegativeNumber);
        if (with_seed) s->add_option("--seed", seed, "random seed");
    };
    auto* run = app.add_subcommand("run", "run a scenario and write its report");
    auto* render = app.add_subcommand("render", "render the phase portrait of a lips assembly");
    auto* val = app.add_subcommand("validate", "check a config and its model");
    add_common(run, true);
    add_common(render, false);
    add_common(val, false);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        Config c = load_config(config, run->parsed());
        if (!out.empty()) c.out = out;
        if (run->count("--seed")) c.seed = seed;
        if (threads > 0) c.threads = threads;
        c.threads = thread_count(c.threads);
        if (run->parsed()) return cmd_run(c);
        if (render->parsed()) return cmd_render(c);
        return cmd_validate(c);
    } catch (const ModelInvalid& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const DegenerateConfig& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return exit_code(e);
    } catch (const fs::filesystem_error& e) {
        std::cerr << "ConfigError: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "ConfigError: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
