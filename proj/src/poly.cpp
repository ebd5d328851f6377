#include "polylab/poly.hpp"

#include <cmath>

#include "polylab/errors.hpp"

namespace polylab {

namespace {
double ipow(double x, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= x;
    return r;
}
}  // namespace

Poly::Poly(int k, std::vector<Monomial> terms) : k_(k) {
    for (auto& t : terms) add(std::move(t.exps), t.coeff);
}

Poly Poly::constant(int k, double c) {
    Poly p(k);
    p.add(std::vector<int>(k, 0), c);
    return p;
}

Poly Poly::coordinate(int k, int i, double scale) {
    Poly p(k);
    std::vector<int> e(k, 0);
    e.at(i) = 1;
    p.add(e, scale);
    return p;
}

Poly& Poly::add(std::vector<int> exps, double c) {
    if (static_cast<int>(exps.size()) != k_)
        throw ParseError("monomial has " + std::to_string(exps.size()) + " exponents, polynomial dimension is " +
                         std::to_string(k_));
    for (int e : exps)
        if (e < 0) throw ParseError("negative exponent");
    for (auto& t : terms_)
        if (t.exps == exps) {
            t.coeff += c;
            return *this;
        }
    terms_.push_back({std::move(exps), c});
    return *this;
}

int Poly::degree() const {
    int d = 0;
    for (const auto& t : terms_) {
        int s = 0;
        for (int e : t.exps) s += e;
        if (t.coeff != 0.0 && s > d) d = s;
    }
    return d;
}

double Poly::operator()(const std::vector<double>& a) const {
    double v = 0.0;
    for (const auto& t : terms_) {
        double m = t.coeff;
        for (int i = 0; i < k_; ++i)
            if (t.exps[i]) m *= ipow(a[i], t.exps[i]);
        v += m;
    }
    return v;
}

std::vector<double> Poly::gradient(const std::vector<double>& a) const {
    std::vector<double> g(k_, 0.0);
    for (const auto& t : terms_) {
        for (int j = 0; j < k_; ++j) {
            if (t.exps[j] == 0) continue;
            double m = t.coeff * t.exps[j];
            for (int i = 0; i < k_; ++i) {
                int e = t.exps[i] - (i == j ? 1 : 0);
                if (e) m *= ipow(a[i], e);
            }
            g[j] += m;
        }
    }
    return g;
}

double Poly::constant_term() const {
    for (const auto& t : terms_) {
        bool zero = true;
        for (int e : t.exps) zero = zero && e == 0;
        if (zero) return t.coeff;
    }
    return 0.0;
}

double eval_on_axis(const Poly& p, int axis, double t) {
    std::vector<double> a(p.dim(), 0.0);
    if (p.dim() > 0) a.at(axis) = t;
    return p.empty() ? 0.0 : p(a);
}

}  // namespace polylab
