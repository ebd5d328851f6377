#include "polylab/model_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace polylab {

std::string hexfloat(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    double a = std::abs(x);
    auto r = std::to_chars(buf, buf + sizeof buf, a, std::chars_format::hex);
    std::string s(buf, r.ptr);
    return (std::signbit(x) ? "-0x" : "0x") + s;
}

double read_real(const json& j, const std::string& ptr) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        char* end = nullptr;
        double v = std::strtod(s.c_str(), &end);
        if (!s.empty() && end == s.c_str() + s.size()) return v;
        throw ConfigError(ptr, "'" + s + "' is not a real number");
    }
    throw ConfigError(ptr, "expected a real number");
}

const json& field(const json& j, const std::string& key, const std::string& ptr) {
    if (!j.is_object()) throw ConfigError(ptr, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(ptr + "/" + key, "missing field");
    return *it;
}

double real_field(const json& j, const std::string& key, const std::string& ptr) {
    return read_real(field(j, key, ptr), ptr + "/" + key);
}

std::vector<double> real_list(const json& j, const std::string& key, const std::string& ptr) {
    const auto& a = field(j, key, ptr);
    if (!a.is_array()) throw ConfigError(ptr + "/" + key, "expected an array");
    std::vector<double> v;
    for (std::size_t i = 0; i < a.size(); ++i) v.push_back(read_real(a[i], ptr + "/" + key + "/" + std::to_string(i)));
    return v;
}

int int_field(const json& j, const std::string& key, const std::string& ptr) {
    const auto& v = field(j, key, ptr);
    if (!v.is_number_integer()) throw ConfigError(ptr + "/" + key, "expected an integer");
    return v.get<int>();
}

namespace {

json reals(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(hexfloat(x));
    return a;
}

json polys(const std::vector<Poly>& v) {
    json a = json::array();
    for (const auto& p : v) a.push_back(to_json(p));
    return a;
}

std::vector<Poly> polys_from(const json& j, const std::string& key, const std::string& ptr) {
    std::vector<Poly> v;
    if (!j.contains(key)) return v;
    const auto& a = j[key];
    if (!a.is_array()) throw ConfigError(ptr + "/" + key, "expected an array");
    for (std::size_t i = 0; i < a.size(); ++i) v.push_back(poly_from_json(a[i], ptr + "/" + key + "/" + std::to_string(i)));
    return v;
}

json lens_json(const LensSpec& l) {
    return {{"side", l.side == Side::Left ? "left" : "right"},
            {"char_num", hexfloat(l.char_num)},
            {"entry_coord", hexfloat(l.entry_coord)},
            {"inner_saddle_tag", l.inner_saddle_tag}};
}

LensSpec lens_from(const json& j, const std::string& ptr) {
    LensSpec l;
    auto side = field(j, "side", ptr);
    if (side == "left") l.side = Side::Left;
    else if (side == "right") l.side = Side::Right;
    else throw ConfigError(ptr + "/side", "expected \"left\" or \"right\"");
    l.char_num = real_field(j, "char_num", ptr);
    l.entry_coord = real_field(j, "entry_coord", ptr);
    if (j.contains("inner_saddle_tag")) l.inner_saddle_tag = j["inner_saddle_tag"].get<std::string>();
    return l;
}

}  // namespace

json to_json(const Map1D& m) {
    return std::visit(
        [](const auto& n) -> json {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, AffineNode>)
                return {{"kind", "affine"}, {"slope", hexfloat(n.slope)}, {"offset", hexfloat(n.offset)}};
            else if constexpr (std::is_same_v<T, PowerNode>)
                return {{"kind", "power"}, {"z0", hexfloat(n.z0)}, {"coeff", hexfloat(n.coeff)}, {"lam", hexfloat(n.lam)}};
            else if constexpr (std::is_same_v<T, ScaleNode>)
                return {{"kind", "scale"}, {"logc", hexfloat(n.logc)}};
            else if constexpr (std::is_same_v<T, ParabolicStep>)
                return {{"kind", "parabolic_step"}, {"delta", hexfloat(n.delta)}, {"a3", hexfloat(n.a3)}};
            else if constexpr (std::is_same_v<T, PolynomialNode>)
                return {{"kind", "polynomial"}, {"coeffs", reals(n.coeffs)}};
            else if constexpr (std::is_same_v<T, PiecewiseNode>) {
                json b = json::array();
                for (const auto& x : n.branches) b.push_back(to_json(x));
                return {{"kind", "piecewise"}, {"breaks", reals(n.breaks)}, {"branches", b}, {"at_break", reals(n.at_break)}};
            } else {
                json b = json::array();
                for (const auto& x : n.maps) b.push_back(to_json(x));
                return {{"kind", "compose"}, {"maps", b}};
            }
        },
        m.node().v);
}

Map1D map_from_json(const json& j, const std::string& ptr) {
    const auto& kind = field(j, "kind", ptr);
    if (!kind.is_string()) throw ConfigError(ptr + "/kind", "expected a string");
    const std::string k = kind.get<std::string>();
    try {
        if (k == "affine") return Map1D::affine(real_field(j, "slope", ptr), real_field(j, "offset", ptr));
        if (k == "power")
            return Map1D::power(real_field(j, "z0", ptr), real_field(j, "coeff", ptr), real_field(j, "lam", ptr));
        if (k == "scale") return Map1D::scale(real_field(j, "logc", ptr));
        if (k == "parabolic_step") return Map1D::parabolic_step(real_field(j, "delta", ptr), real_field(j, "a3", ptr));
        if (k == "polynomial") return Map1D::polynomial(real_list(j, "coeffs", ptr));
        if (k == "piecewise" || k == "compose") {
            const std::string key = k == "piecewise" ? "branches" : "maps";
            const auto& a = field(j, key, ptr);
            if (!a.is_array()) throw ConfigError(ptr + "/" + key, "expected an array");
            std::vector<Map1D> ms;
            for (std::size_t i = 0; i < a.size(); ++i)
                ms.push_back(map_from_json(a[i], ptr + "/" + key + "/" + std::to_string(i)));
            if (k == "compose") return compose(ms);
            return Map1D::piecewise(real_list(j, "breaks", ptr), ms, real_list(j, "at_break", ptr));
        }
    } catch (const InvalidMap& e) {
        throw ConfigError(ptr, e.what());
    }
    throw ConfigError(ptr + "/kind", "unknown map kind '" + k + "'");
}

json to_json(const Poly& p) {
    json t = json::array();
    for (const auto& m : p.terms()) t.push_back({{"exps", m.exps}, {"coeff", hexfloat(m.coeff)}});
    return {{"k", p.dim()}, {"terms", t}};
}

Poly poly_from_json(const json& j, const std::string& ptr) {
    Poly p(int_field(j, "k", ptr));
    const auto& t = field(j, "terms", ptr);
    if (!t.is_array()) throw ConfigError(ptr + "/terms", "expected an array");
    for (std::size_t i = 0; i < t.size(); ++i) {
        std::string q = ptr + "/terms/" + std::to_string(i);
        const auto& e = field(t[i], "exps", q);
        if (!e.is_array()) throw ConfigError(q + "/exps", "expected an array");
        try {
            p.add(e.get<std::vector<int>>(), real_field(t[i], "coeff", q));
        } catch (const ParseError& err) {
            throw ConfigError(q, err.what());
        } catch (const json::exception& err) {
            throw ConfigError(q + "/exps", err.what());
        }
    }
    return p;
}

json to_json(const SaddleNodeUnfolding& u) {
    return {{"eps", hexfloat(u.eps)}, {"a3", hexfloat(u.a3)}, {"lam0", hexfloat(u.lam0)}, {"lam1", hexfloat(u.lam1)}};
}

SaddleNodeUnfolding unfolding_from_json(const json& j, const std::string& ptr) {
    SaddleNodeUnfolding u;
    u.eps = real_field(j, "eps", ptr);
    u.a3 = real_field(j, "a3", ptr);
    u.lam0 = real_field(j, "lam0", ptr);
    u.lam1 = real_field(j, "lam1", ptr);
    return u;
}

json to_json(const GlassesModel& g) {
    return {{"lam", hexfloat(g.lam)},
            {"rho", hexfloat(g.rho)},
            {"left_event_scale", hexfloat(g.left_event_scale)},
            {"right_event_scale", hexfloat(g.right_event_scale)}};
}

GlassesModel glasses_from_json(const json& j, const std::string& ptr) {
    GlassesModel g;
    g.lam = real_field(j, "lam", ptr);
    g.rho = real_field(j, "rho", ptr);
    g.left_event_scale = j.contains("left_event_scale") ? real_field(j, "left_event_scale", ptr) : 1.0;
    g.right_event_scale = j.contains("right_event_scale") ? real_field(j, "right_event_scale", ptr) : 1.0;
    return g;
}

json to_json(const WGModel& w) {
    json l = json::array(), r = json::array();
    for (const auto& x : w.left) l.push_back(lens_json(x));
    for (const auto& x : w.right) r.push_back(lens_json(x));
    json dep = {{"k", w.dep.k}, {"lam", polys(w.dep.lam)}, {"rho", polys(w.dep.rho)},
                {"u", polys(w.dep.u)}, {"s", polys(w.dep.s)}};
    if (!w.dep.delta.empty()) dep["delta"] = to_json(w.dep.delta);
    return {{"M", w.M}, {"N", w.N}, {"left", l}, {"right", r},
            {"germ", {{"delta", hexfloat(w.germ.delta)}, {"a3", hexfloat(w.germ.a3)}}}, {"dependence", dep}};
}

WGModel wg_from_json(const json& j, const std::string& ptr) {
    WGModel w;
    w.M = int_field(j, "M", ptr);
    w.N = int_field(j, "N", ptr);
    for (const char* side : {"left", "right"}) {
        const auto& a = field(j, side, ptr);
        if (!a.is_array()) throw ConfigError(ptr + "/" + side, "expected an array");
        for (std::size_t i = 0; i < a.size(); ++i) {
            auto l = lens_from(a[i], ptr + "/" + side + "/" + std::to_string(i));
            (std::string(side) == "left" ? w.left : w.right).push_back(l);
        }
    }
    const auto& g = field(j, "germ", ptr);
    w.germ = {real_field(g, "delta", ptr + "/germ"), real_field(g, "a3", ptr + "/germ")};
    if (j.contains("dependence")) {
        const auto& d = j["dependence"];
        std::string q = ptr + "/dependence";
        w.dep.k = int_field(d, "k", q);
        if (d.contains("delta")) w.dep.delta = poly_from_json(d["delta"], q + "/delta");
        w.dep.lam = polys_from(d, "lam", q);
        w.dep.rho = polys_from(d, "rho", q);
        w.dep.u = polys_from(d, "u", q);
        w.dep.s = polys_from(d, "s", q);
    }
    return w;
}

json to_json(const LEGModel& m) {
    const auto& d = m.dep;
    json dep = {{"k", d.k},       {"lens", d.lens},        {"eps1", d.eps1},        {"eps2", d.eps2},
                {"b0", d.b0},     {"dx", polys(d.dx)},     {"dy", polys(d.dy)},     {"dz", polys(d.dz)},
                {"dlam", polys(d.dlam)}};
    if (!d.drho.empty()) dep["drho"] = to_json(d.drho);
    return {{"n", m.n},
            {"x", reals(m.x)},
            {"y", reals(m.y)},
            {"z", reals(m.z)},
            {"lam", reals(m.lam)},
            {"rho", hexfloat(m.rho)},
            {"coeff", reals(m.coeff)},
            {"germ_width", reals(m.germ_width)},
            {"P", to_json(m.P)},
            {"handles",
             {{"s1", to_json(m.handles.s1)},
              {"s2", to_json(m.handles.s2)},
              {"bridge_slope", hexfloat(m.handles.bridge_slope)},
              {"bridge_cubic", hexfloat(m.handles.bridge_cubic)}}},
            {"dependence", dep}};
}

LEGModel leg_from_json(const json& j, const std::string& ptr) {
    LEGModel m;
    m.n = int_field(j, "n", ptr);
    m.x = real_list(j, "x", ptr);
    m.y = real_list(j, "y", ptr);
    m.z = real_list(j, "z", ptr);
    m.lam = real_list(j, "lam", ptr);
    m.rho = real_field(j, "rho", ptr);
    m.coeff = real_list(j, "coeff", ptr);
    m.germ_width = real_list(j, "germ_width", ptr);
    if (j.contains("P")) {
        m.P = map_from_json(j["P"], ptr + "/P");
    } else {
        try {
            m.P = build_first_return(m.x, m.y, m.z, m.lam, m.coeff, m.germ_width);
        } catch (const DegenerateConfig& e) {
            throw ConfigError(ptr, e.what());
        }
    }
    if (j.contains("handles")) {
        const auto& h = j["handles"];
        std::string q = ptr + "/handles";
        m.handles.s1 = unfolding_from_json(field(h, "s1", q), q + "/s1");
        m.handles.s2 = unfolding_from_json(field(h, "s2", q), q + "/s2");
        m.handles.bridge_slope = real_field(h, "bridge_slope", q);
        m.handles.bridge_cubic = real_field(h, "bridge_cubic", q);
    }
    if (j.contains("dependence")) {
        const auto& d = j["dependence"];
        std::string q = ptr + "/dependence";
        m.dep.k = int_field(d, "k", q);
        m.dep.lens = int_field(d, "lens", q);
        m.dep.eps1 = int_field(d, "eps1", q);
        m.dep.eps2 = int_field(d, "eps2", q);
        m.dep.b0 = int_field(d, "b0", q);
        m.dep.dx = polys_from(d, "dx", q);
        m.dep.dy = polys_from(d, "dy", q);
        m.dep.dz = polys_from(d, "dz", q);
        m.dep.dlam = polys_from(d, "dlam", q);
        if (d.contains("drho")) m.dep.drho = poly_from_json(d["drho"], q + "/drho");
    }
    return m;
}

json model_document(const std::string& kind, const json& model) {
    return {{"schema", kModelSchema}, {"kind", kind}, {"model", model}};
}

ModelDocument parse_model_document(const json& doc) {
    const auto& s = field(doc, "schema", "");
    if (s != kModelSchema) throw ConfigError("/schema", "unsupported schema " + s.dump());
    const auto& k = field(doc, "kind", "");
    static const char* kinds[] = {"glasses", "wg", "leg", "saddle-node", "family", "assembly"};
    bool known = false;
    for (const char* q : kinds) known = known || (k.is_string() && k == q);
    if (!known) throw ConfigError("/kind", "expected one of glasses, wg, leg, saddle-node, family, assembly");
    return {k.get<std::string>(), field(doc, "model", "")};
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path, e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError(path, "cannot write file");
    out << text;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace polylab
