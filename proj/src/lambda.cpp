#include "regkit/lambda.hpp"

#include <cmath>

namespace regkit {

namespace sym {

int id(Kind k, int i, int j) { return static_cast<int>(k) * 1024 + i * 32 + j; }
Kind kind(int id) { return static_cast<Kind>(id / 1024); }
int ti(int id) { return (id % 1024) / 32; }
int xi(int id) { return id % 32; }

std::string name(int id) {
    switch (kind(id)) {
        case A: return "a[" + std::to_string(ti(id)) + "," + std::to_string(xi(id)) + "]";
        case B: return "b[" + std::to_string(ti(id)) + "," + std::to_string(xi(id)) + "]";
        case C: return "c[" + std::to_string(ti(id)) + "," + std::to_string(xi(id)) + "]";
        case IA: return "ainv";
        case U: return "u";
        case V: return "v";
    }
    return "?";
}

}  // namespace sym

SymPoly SymPoly::constant(double c) {
    SymPoly p;
    if (c != 0) p.t_[{}] = c;
    return p;
}

SymPoly SymPoly::symbol(int id, int power) {
    SymPoly p;
    if (power == 0)
        p.t_[{}] = 1;
    else
        p.t_[{{id, power}}] = 1;
    return p;
}

void SymPoly::add(const Monomial& m, double c) {
    if (c == 0) return;
    auto it = t_.find(m);
    if (it == t_.end()) {
        t_.emplace(m, c);
        return;
    }
    it->second += c;
    if (it->second == 0) t_.erase(it);
}

SymPoly& SymPoly::operator+=(const SymPoly& o) {
    for (const auto& [m, c] : o.t_) add(m, c);
    return *this;
}

SymPoly& SymPoly::operator*=(double s) {
    if (s == 0) {
        t_.clear();
        return *this;
    }
    for (auto& [m, c] : t_) c *= s;
    return *this;
}

namespace {

SymPoly::Monomial mul(const SymPoly::Monomial& a, const SymPoly::Monomial& b) {
    SymPoly::Monomial r;
    size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
            r.push_back(a[i++]);
        } else if (i == a.size() || b[j].first < a[i].first) {
            r.push_back(b[j++]);
        } else {
            int p = a[i].second + b[j].second;
            if (p != 0) r.emplace_back(a[i].first, p);
            ++i;
            ++j;
        }
    }
    return r;
}

// derivative of a single symbol along dir
SymPoly derive_symbol(int id, int dir) {
    int i = sym::ti(id), j = sym::xi(id);
    int di = dir == 0 ? 1 : 0, dj = dir == 1 ? 1 : 0;
    switch (sym::kind(id)) {
        case sym::A:
        case sym::B:
        case sym::C: return SymPoly::symbol(sym::id(sym::kind(id), i + di, j + dj));
        case sym::IA:
            return SymPoly::symbol(sym::id(sym::IA), 2) * SymPoly::symbol(sym::id(sym::A, di, dj)) * -1.0;
        default: return {};
    }
}

}  // namespace

SymPoly operator*(const SymPoly& a, const SymPoly& b) {
    SymPoly r;
    for (const auto& [ma, ca] : a.t_)
        for (const auto& [mb, cb] : b.t_) r.add(mul(ma, mb), ca * cb);
    return r;
}

SymPoly SymPoly::derive(int dir) const {
    SymPoly r;
    for (const auto& [m, c] : t_) {
        for (size_t q = 0; q < m.size(); ++q) {
            SymPoly d = derive_symbol(m[q].first, dir);
            if (d.empty()) continue;
            Monomial rest = m;
            rest[q].second -= 1;
            if (rest[q].second == 0) rest.erase(rest.begin() + static_cast<long>(q));
            SymPoly piece;
            piece.add(rest, c * m[q].second);
            r += piece * d;
        }
    }
    return r;
}

SymPoly SymPoly::derive_gaussian(int dir) const {
    int di = dir == 0 ? 1 : 0, dj = dir == 1 ? 1 : 0;
    SymPoly da = symbol(sym::id(sym::A, di, dj));
    SymPoly ia = symbol(sym::id(sym::IA));
    SymPoly h = ia * da * -0.5 + symbol(sym::id(sym::V), 2) * symbol(sym::id(sym::IA), 2) * da * 0.25;
    return derive(dir) + (*this) * h;
}

int SymPoly::jet_degree() const {
    int best = 0;
    for (const auto& [m, c] : t_)
        for (const auto& [id, p] : m) {
            auto k = sym::kind(id);
            if (k == sym::A || k == sym::B || k == sym::C) best = std::max(best, 2 * sym::ti(id) + sym::xi(id));
        }
    return best;
}

json SymPoly::to_json() const {
    json out = json::array();
    for (const auto& [m, c] : t_) {
        json mono{{"coef", c}, {"u", 0}, {"v", 0}, {"jets", json::object()}};
        for (const auto& [id, p] : m) {
            if (sym::kind(id) == sym::U)
                mono["u"] = p;
            else if (sym::kind(id) == sym::V)
                mono["v"] = p;
            else
                mono["jets"][sym::name(id)] = p;
        }
        out.push_back(mono);
    }
    return out;
}

double JetValues::symbol(int id) const {
    MultiIndex k{sym::ti(id), sym::xi(id)};
    switch (sym::kind(id)) {
        case sym::A: return a.deriv(k);
        case sym::B: return b.deriv(k);
        case sym::C: return c.deriv(k);
        case sym::IA: return 1 / a.value();
        default: throw Error("symbolic", "u and v have no jet value");
    }
}

GaussPoly GaussPoly::from_symbolic(const SymPoly& P, const JetValues& jv) {
    GaussPoly g(jv.a.value());
    for (const auto& [m, c] : P.terms()) {
        double coef = c;
        int e = 0, b = 0;
        for (const auto& [id, p] : m) {
            if (sym::kind(id) == sym::U)
                e = p;
            else if (sym::kind(id) == sym::V)
                b = p;
            else
                coef *= std::pow(jv.symbol(id), p);
        }
        if (b < 0) throw Error("symbolic", "negative power of v");
        g.add(e, b, coef);
    }
    return g;
}

void GaussPoly::add(int e, int b, double c) {
    if (c == 0) return;
    c_[{e, b}] += c;
}

double GaussPoly::operator()(double t, double x) const {
    if (t <= 0 || c_.empty()) return 0;
    double q = x * x / (4 * a_ * t);
    if (q > 700) return 0;
    double u = std::sqrt(t), v = x / u;
    double w = std::exp(-q) / std::sqrt(4 * M_PI * a_ * t);
    double s = 0;
    for (const auto& [eb, c] : c_) s += c * std::pow(u, eb.first) * std::pow(v, eb.second);
    return s * w;
}

Jet GaussPoly::operator()(const Jet& t, const Jet& x) const {
    Jet zero(t.nvars(), t.order(), 0);
    if (t.value() <= 0 || c_.empty()) return zero;
    if (x.value() * x.value() / (4 * a_ * t.value()) > 700) return zero;
    Jet w = exp(-(x * x) / (t * (4 * a_))) * pow(t * (4 * M_PI * a_), -0.5);
    Jet s = zero;
    for (const auto& [eb, c] : c_) {
        auto [e, b] = eb;
        s += c * pow(t, 0.5 * (e - b)) * pow_int(x, b);
    }
    return s * w;
}

GaussPoly& GaussPoly::operator+=(const GaussPoly& o) {
    if (c_.empty()) a_ = o.a_;
    if (!o.c_.empty() && o.a_ != a_) throw Error("symbolic", "adding Gaussians with different diffusivity");
    for (const auto& [eb, c] : o.c_) add(eb.first, eb.second, c);
    return *this;
}

GaussPoly& GaussPoly::operator*=(double s) {
    for (auto& [eb, c] : c_) c *= s;
    return *this;
}

GaussPoly GaussPoly::times_monomial(const MultiIndex& k) const {
    GaussPoly r(a_);
    for (const auto& [eb, c] : c_) r.add(eb.first + 2 * k[0] + k[1], eb.second + k[1], c);
    return r;
}

GaussPoly convolve(const GaussPoly& f, const GaussPoly& g) {
    if (f.c_.empty() || g.c_.empty()) return GaussPoly(f.a_);
    if (f.a_ != g.a_) throw Error("symbolic", "convolving Gaussians with different diffusivity");
    double a = f.a_;
    GaussPoly r(a);
    auto binom = [](int n, int k) { return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)); };
    auto dfact = [](int n) {
        double p = 1;
        for (int i = n; i > 1; i -= 2) p *= i;
        return p;
    };
    for (const auto& [k1, c1] : f.c_)
        for (const auto& [k2, c2] : g.c_) {
            auto [e1, b1] = k1;
            auto [e2, b2] = k2;
            for (int i = 0; i <= b1; ++i)
                for (int j = 0; j <= b2; ++j) {
                    if ((i + j) % 2) continue;
                    double p_theta = 0.5 * (e2 + b2 + i - j), p_one = 0.5 * (e1 + b1 - i + j);
                    if (p_theta <= -1 || p_one <= -1) throw Error("symbolic", "divergent time integral in convolution");
                    double c = c1 * c2 * std::round(binom(b1, i)) * std::round(binom(b2, j)) * (i % 2 ? -1.0 : 1.0) *
                               std::pow(2 * a, 0.5 * (i + j)) * dfact(i + j - 1) * std::beta(p_theta + 1, p_one + 1);
                    r.add(e1 + e2 + 2, b1 + b2 - i - j, c);
                }
        }
    return r;
}

}  // namespace regkit
