#pragma once

#include <memory>
#include <vector>

#include "regkit/core.hpp"

namespace regkit {

/// Truncated multivariate Taylor polynomial: coefficients c_a of (z - z0)^a for |a| <= order.
class Jet {
public:
    Jet() = default;
    Jet(int nvars, int order, double value = 0);

    static Jet variable(int nvars, int order, int i, double value);

    int nvars() const { return nv_; }
    int order() const { return ord_; }
    double value() const { return c_[0]; }
    double coeff(const MultiIndex& a) const;
    /// D^a f(z0) = a! c_a
    double deriv(const MultiIndex& a) const;
    const std::vector<double>& coeffs() const { return c_; }
    std::vector<double>& coeffs() { return c_; }
    const std::vector<MultiIndex>& indices() const;

    Jet& operator+=(const Jet& o);
    Jet& operator-=(const Jet& o);
    Jet& operator*=(const Jet& o);
    Jet& operator*=(double s);
    Jet& operator+=(double s) { c_[0] += s; return *this; }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator*(Jet a, const Jet& b) { return a *= b; }
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator*(double s, Jet a) { return a *= s; }
    friend Jet operator+(Jet a, double s) { return a += s; }
    friend Jet operator+(double s, Jet a) { return a += s; }
    friend Jet operator-(Jet a, double s) { return a += -s; }
    friend Jet operator-(double s, const Jet& a) { return (a * -1.0) + s; }
    friend Jet operator-(const Jet& a) { return a * -1.0; }
    friend Jet operator/(const Jet& a, const Jet& b);
    friend Jet operator/(Jet a, double s) { return a *= 1 / s; }
    friend Jet operator/(double s, const Jet& b);

    /// f(u) for a function given by its derivatives f^(m)(u0), m = 0..order.
    Jet compose(const std::vector<double>& derivs) const;

private:
    struct Table;
    const Table& table() const;

    int nv_ = 0, ord_ = 0;
    std::vector<double> c_;
};

Jet exp(const Jet& u);
Jet log(const Jet& u);
Jet sin(const Jet& u);
Jet cos(const Jet& u);
Jet sqrt(const Jet& u);
Jet pow(const Jet& u, double p);
Jet pow_int(const Jet& u, int p);

}  // namespace regkit
