#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "regkit/core.hpp"
#include "regkit/jet.hpp"

namespace regkit {

/// Symbols of the kernel calculus: jets of the coefficients at the base point w,
/// the inverse a^{-1}(w), and the self-similar variables u = t^{1/2}, v = t^{-1/2} x.
namespace sym {
enum Kind { A = 0, B = 1, C = 2, IA = 3, U = 4, V = 5 };
int id(Kind k, int i = 0, int j = 0);
Kind kind(int id);
int ti(int id);
int xi(int id);
std::string name(int id);
}  // namespace sym

/// Laurent polynomial with real coefficients in the symbols above.
class SymPoly {
public:
    using Monomial = std::vector<std::pair<int, int>>;  // sorted (symbol, power)

    SymPoly() = default;
    static SymPoly constant(double c);
    static SymPoly symbol(int id, int power = 1);

    const std::map<Monomial, double>& terms() const { return t_; }
    bool empty() const { return t_.empty(); }

    SymPoly& operator+=(const SymPoly& o);
    SymPoly& operator*=(double s);
    friend SymPoly operator+(SymPoly a, const SymPoly& b) { return a += b; }
    friend SymPoly operator-(SymPoly a, const SymPoly& b) { return a += b * -1.0; }
    friend SymPoly operator*(SymPoly a, double s) { return a *= s; }
    friend SymPoly operator*(const SymPoly& a, const SymPoly& b);

    /// Derivative in the base point along direction 0 (t) or 1 (x).
    SymPoly derive(int dir) const;
    /// Derivative of P * W^w, divided by W^w.
    SymPoly derive_gaussian(int dir) const;

    /// Largest |l|_s over jet symbols, for the parabolic scaling (2, 1).
    int jet_degree() const;
    json to_json() const;

private:
    void add(const Monomial& m, double c);
    std::map<Monomial, double> t_;
};

/// Values of the coefficient jets at a base point.
struct JetValues {
    Jet a, b, c;  // jets in (t, x) of enough order
    double symbol(int id) const;
};

/// sum c_{e,b} u^e v^b W_a(t, x) with W_a the frozen Gaussian of diffusivity a.
class GaussPoly {
public:
    GaussPoly() = default;
    explicit GaussPoly(double a) : a_(a) {}
    /// Substitute jets into P, keeping u and v.
    static GaussPoly from_symbolic(const SymPoly& P, const JetValues& jv);

    double diffusivity() const { return a_; }
    const std::map<std::pair<int, int>, double>& terms() const { return c_; }
    void add(int e, int b, double c);

    double operator()(double t, double x) const;
    Jet operator()(const Jet& t, const Jet& x) const;

    GaussPoly& operator+=(const GaussPoly& o);
    GaussPoly& operator*=(double s);
    friend GaussPoly operator+(GaussPoly a, const GaussPoly& b) { return a += b; }
    friend GaussPoly operator*(GaussPoly a, double s) { return a *= s; }
    /// multiply by (t, x)^k = u^{2 k_t + k_x} v^{k_x}
    GaussPoly times_monomial(const MultiIndex& k) const;

    /// Space-time convolution, evaluated in closed form.
    friend GaussPoly convolve(const GaussPoly& f, const GaussPoly& g);

private:
    double a_ = 1;
    std::map<std::pair<int, int>, double> c_;
};

}  // namespace regkit
