#include "regkit/jet.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace regkit {

struct Jet::Table {
    std::vector<MultiIndex> idx;
    std::map<MultiIndex, int> pos;
    std::vector<std::array<int, 3>> mul;  // (i, j, k): e_i * e_j contributes to e_k
    std::vector<double> fact;             // a! per index
};

const Jet::Table& Jet::table() const {
    static std::map<std::pair<int, int>, std::unique_ptr<Table>> cache;
    static std::mutex m;
    std::lock_guard<std::mutex> lock(m);
    auto& slot = cache[{nv_, ord_}];
    if (!slot) {
        slot = std::make_unique<Table>();
        Table& t = *slot;
        for (int total = 0; total <= ord_; ++total) {
            MultiIndex a(nv_, 0);
            std::function<void(int, int)> rec = [&](int i, int left) {
                if (i == nv_ - 1) {
                    a[i] = left;
                    t.pos[a] = static_cast<int>(t.idx.size());
                    t.idx.push_back(a);
                    return;
                }
                for (int v = left; v >= 0; --v) {
                    a[i] = v;
                    rec(i + 1, left - v);
                }
            };
            if (nv_ == 0) {
                if (total == 0) {
                    t.pos[a] = 0;
                    t.idx.push_back(a);
                }
            } else {
                rec(0, total);
            }
        }
        for (size_t i = 0; i < t.idx.size(); ++i) {
            t.fact.push_back(mi_factorial_d(t.idx[i]));
            for (size_t j = 0; j < t.idx.size(); ++j) {
                if (mi_abs(t.idx[i]) + mi_abs(t.idx[j]) > ord_) continue;
                t.mul.push_back({static_cast<int>(i), static_cast<int>(j), t.pos.at(t.idx[i] + t.idx[j])});
            }
        }
    }
    return *slot;
}

Jet::Jet(int nvars, int order, double value) : nv_(nvars), ord_(order) {
    c_.assign(table().idx.size(), 0.0);
    c_[0] = value;
}

Jet Jet::variable(int nvars, int order, int i, double value) {
    Jet j(nvars, order, value);
    if (order >= 1) j.c_[j.table().pos.at(mi_unit(nvars, i))] = 1;
    return j;
}

const std::vector<MultiIndex>& Jet::indices() const { return table().idx; }

double Jet::coeff(const MultiIndex& a) const {
    auto& p = table().pos;
    auto it = p.find(a);
    return it == p.end() ? 0.0 : c_[it->second];
}

double Jet::deriv(const MultiIndex& a) const {
    if (mi_abs(a) > ord_) throw Error("jet", "derivative order exceeds jet order");
    return coeff(a) * mi_factorial_d(a);
}

static void same_shape(const Jet& a, const Jet& b) {
    if (a.nvars() != b.nvars() || a.order() != b.order()) throw Error("jet", "shape mismatch");
}

Jet& Jet::operator+=(const Jet& o) {
    same_shape(*this, o);
    for (size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
}

Jet& Jet::operator-=(const Jet& o) {
    same_shape(*this, o);
    for (size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
}

Jet& Jet::operator*=(double s) {
    for (auto& v : c_) v *= s;
    return *this;
}

Jet& Jet::operator*=(const Jet& o) {
    same_shape(*this, o);
    std::vector<double> r(c_.size(), 0.0);
    for (auto& [i, j, k] : table().mul) r[k] += c_[i] * o.c_[j];
    c_ = std::move(r);
    return *this;
}

Jet Jet::compose(const std::vector<double>& d) const {
    // f(u0 + h) = sum_m f^(m)(u0) h^m / m!
    Jet h = *this;
    h.c_[0] = 0;
    Jet out(nv_, ord_, d.at(0));
    Jet p(nv_, ord_, 1.0);
    double fact = 1;
    for (int m = 1; m <= ord_; ++m) {
        p *= h;
        fact *= m;
        out += p * (d.at(m) / fact);
    }
    return out;
}

Jet operator/(const Jet& a, const Jet& b) { return a * pow(b, -1.0); }
Jet operator/(double s, const Jet& b) { return pow(b, -1.0) * s; }

Jet exp(const Jet& u) {
    double e = std::exp(u.value());
    return u.compose(std::vector<double>(u.order() + 1, e));
}

Jet log(const Jet& u) {
    double u0 = u.value();
    if (!(u0 > 0)) throw Error("jet", "log of a non-positive value");
    std::vector<double> d(u.order() + 1);
    d[0] = std::log(u0);
    double f = 1;
    for (int m = 1; m <= u.order(); ++m) {
        d[m] = (m % 2 ? 1.0 : -1.0) * f / std::pow(u0, m);
        f *= m;
    }
    return u.compose(d);
}

Jet sin(const Jet& u) {
    double s = std::sin(u.value()), c = std::cos(u.value());
    std::vector<double> d(u.order() + 1);
    const double cyc[4] = {s, c, -s, -c};
    for (int m = 0; m <= u.order(); ++m) d[m] = cyc[m % 4];
    return u.compose(d);
}

Jet cos(const Jet& u) {
    double s = std::sin(u.value()), c = std::cos(u.value());
    std::vector<double> d(u.order() + 1);
    const double cyc[4] = {c, -s, -c, s};
    for (int m = 0; m <= u.order(); ++m) d[m] = cyc[m % 4];
    return u.compose(d);
}

Jet pow(const Jet& u, double p) {
    double u0 = u.value();
    std::vector<double> d(u.order() + 1);
    double coef = 1;
    for (int m = 0; m <= u.order(); ++m) {
        d[m] = coef * std::pow(u0, p - m);
        coef *= (p - m);
    }
    return u.compose(d);
}

Jet pow_int(const Jet& u, int p) {
    if (p < 0) return pow(u, static_cast<double>(p));
    Jet r(u.nvars(), u.order(), 1.0);
    for (int i = 0; i < p; ++i) r *= u;
    return r;
}

Jet sqrt(const Jet& u) { return pow(u, 0.5); }

}  // namespace regkit
