#pragma once

#include <vector>

namespace polylab {

// Multivariate polynomial over R^k as a table of (exponent vector, coefficient).
struct Monomial {
    std::vector<int> exps;
    double coeff = 0.0;
};

class Poly {
public:
    Poly() = default;
    explicit Poly(int k) : k_(k) {}
    Poly(int k, std::vector<Monomial> terms);

    static Poly constant(int k, double c);
    static Poly coordinate(int k, int i, double scale = 1.0);

    int dim() const { return k_; }
    int degree() const;
    bool empty() const { return terms_.empty(); }
    const std::vector<Monomial>& terms() const { return terms_; }

    Poly& add(std::vector<int> exps, double c);

    double operator()(const std::vector<double>& a) const;
    std::vector<double> gradient(const std::vector<double>& a) const;
    double constant_term() const;

private:
    int k_ = 0;
    std::vector<Monomial> terms_;
};

// Evaluates p at t * e_axis.
double eval_on_axis(const Poly& p, int axis, double t);

}  // namespace polylab
