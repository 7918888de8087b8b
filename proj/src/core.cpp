#include "regkit/core.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace regkit {

std::string rat_str(const Rat& q) {
    Rat c = q;
    c.canonicalize();
    return c.get_str();
}

Rat parse_rat(const std::string& s0) {
    std::string s;
    for (char c : s0)
        if (!isspace(static_cast<unsigned char>(c))) s += c;
    if (s.empty()) throw Error("parse", "empty rational");
    auto dot = s.find('.');
    if (dot != std::string::npos) {
        if (s.find('/') != std::string::npos) throw Error("parse", "bad rational '" + s0 + "'");
        bool neg = s[0] == '-';
        std::string body = (s[0] == '-' || s[0] == '+') ? s.substr(1) : s;
        dot = body.find('.');
        std::string ip = body.substr(0, dot), fp = body.substr(dot + 1);
        if (ip.empty()) ip = "0";
        for (char c : ip + fp)
            if (!isdigit(static_cast<unsigned char>(c))) throw Error("parse", "bad rational '" + s0 + "'");
        mpz_class num(ip + fp), den("1" + std::string(fp.size(), '0'));
        Rat r(num, den);
        r.canonicalize();
        return neg ? Rat(-r) : r;
    }
    Rat r;
    if (r.set_str(s[0] == '+' ? s.substr(1) : s, 10) != 0) throw Error("parse", "bad rational '" + s0 + "'");
    if (r.get_den() == 0) throw Error("parse", "zero denominator in '" + s0 + "'");
    r.canonicalize();
    return r;
}

Rat json_rat(const json& j) {
    if (j.is_string()) return parse_rat(j.get<std::string>());
    if (j.is_number_integer()) return Rat(j.get<long>());
    if (j.is_number()) {
        std::ostringstream os;
        os.precision(17);
        os << j.get<double>();
        return parse_rat(os.str());
    }
    throw Error("parse", "expected rational, got " + j.dump());
}

double to_double(const Rat& q) { return q.get_d(); }

MultiIndex mi_zero(int d) { return MultiIndex(d, 0); }

MultiIndex mi_unit(int d, int i) {
    MultiIndex k(d, 0);
    k.at(i) = 1;
    return k;
}

MultiIndex operator+(const MultiIndex& a, const MultiIndex& b) {
    MultiIndex r(a);
    for (size_t i = 0; i < r.size(); ++i) r[i] += b.at(i);
    return r;
}

MultiIndex operator-(const MultiIndex& a, const MultiIndex& b) {
    MultiIndex r(a);
    for (size_t i = 0; i < r.size(); ++i) r[i] -= b.at(i);
    return r;
}

bool mi_leq(const MultiIndex& a, const MultiIndex& b) {
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i] > b.at(i)) return false;
    return true;
}

bool mi_is_zero(const MultiIndex& a) {
    return std::all_of(a.begin(), a.end(), [](int x) { return x == 0; });
}

int mi_abs(const MultiIndex& a) {
    int s = 0;
    for (int x : a) s += x;
    return s;
}

static mpz_class fact(int n) {
    mpz_class r = 1;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

Rat mi_factorial(const MultiIndex& a) {
    mpz_class r = 1;
    for (int x : a) r *= fact(x);
    return Rat(r);
}

double mi_factorial_d(const MultiIndex& a) {
    double r = 1;
    for (int x : a)
        for (int i = 2; i <= x; ++i) r *= i;
    return r;
}

Rat mi_binom(const MultiIndex& n, const MultiIndex& k) {
    if (!mi_leq(k, n)) return 0;
    Rat r = mi_factorial(n) / (mi_factorial(k) * mi_factorial(n - k));
    r.canonicalize();
    return r;
}

std::string mi_str(const MultiIndex& a) {
    std::string s;
    for (size_t i = 0; i < a.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(a[i]);
    }
    return s;
}

void for_each_leq(const MultiIndex& n, const std::function<void(const MultiIndex&)>& f) {
    MultiIndex k(n.size(), 0);
    if (n.empty()) {
        f(k);
        return;
    }
    while (true) {
        f(k);
        size_t i = 0;
        while (i < k.size()) {
            if (k[i] < n[i]) {
                ++k[i];
                break;
            }
            k[i] = 0;
            ++i;
        }
        if (i == k.size()) return;
    }
}

std::vector<MultiIndex> mi_below(const std::vector<Rat>& scaling, const Rat& cap, bool strict) {
    std::vector<MultiIndex> out;
    MultiIndex k(scaling.size(), 0);
    std::function<void(size_t, Rat)> rec = [&](size_t i, Rat used) {
        if (i == scaling.size()) {
            out.push_back(k);
            return;
        }
        for (int m = 0;; ++m) {
            Rat u = used + scaling[i] * m;
            if (strict ? !(u < cap) : !(u <= cap)) break;
            k[i] = m;
            rec(i + 1, u);
        }
        k[i] = 0;
    };
    if (strict ? Rat(0) < cap : Rat(0) <= cap) rec(0, 0);
    std::sort(out.begin(), out.end());
    return out;
}

std::string Degree::str() const {
    if (c1 == 0) return rat_str(c0);
    std::string s = c0 == 0 ? "" : rat_str(c0);
    if (c1 > 0 && !s.empty()) s += "+";
    if (c1 == -1)
        s += "-";
    else if (c1 != 1)
        s += rat_str(c1) + "*";
    return s + "kappa";
}

TypeSet::TypeSet(std::vector<TypeInfo> t, std::vector<Rat> s, Rat k)
    : types(std::move(t)), scaling(std::move(s)), kappa(std::move(k)) {
    validate();
}

int TypeSet::find(const std::string& name) const {
    for (int i = 0; i < size(); ++i)
        if (types[i].name == name) return i;
    throw Error("type-set mismatch", "unknown edge type '" + name + "'");
}

Rat TypeSet::mdeg(const MultiIndex& k) const {
    Rat s = 0;
    for (size_t i = 0; i < k.size(); ++i) s += scaling.at(i) * k[i];
    return s;
}

Degree TypeSet::mdeg_affine(const MultiIndex& k) const { return Degree(mdeg(k)); }

Rat TypeSet::scaling_total() const {
    Rat s = 0;
    for (auto& x : scaling) s += x;
    return s;
}

Rat TypeSet::scaling_max() const {
    Rat m = 0;
    for (auto& x : scaling) m = std::max(m, x);
    return m;
}

void TypeSet::validate() const {
    if (scaling.empty()) throw Error("config", "empty scaling");
    for (auto& s : scaling)
        if (s <= 0) throw Error("config", "scaling entries must be positive");
    std::set<std::string> names;
    for (auto& t : types) {
        if (!names.insert(t.name).second) throw Error("config", "duplicate type name '" + t.name + "'");
        Rat v = t.degree.at(kappa);
        if (t.kernel && v <= 0) throw Error("config", "kernel type '" + t.name + "' must have positive degree");
        if (!t.kernel && v >= 0) throw Error("config", "noise type '" + t.name + "' must have negative degree");
    }
}

json TypeSet::to_json() const {
    json j;
    j["kernels"] = json::array();
    j["noises"] = json::array();
    for (auto& t : types) {
        json e{{"name", t.name}, {"degree", rat_str(t.degree.c0)}};
        if (t.degree.c1 != 0) e["kappa_coeff"] = rat_str(t.degree.c1);
        (t.kernel ? j["kernels"] : j["noises"]).push_back(e);
    }
    j["scaling"] = json::array();
    for (auto& s : scaling) j["scaling"].push_back(rat_str(s));
    j["kappa"] = rat_str(kappa);
    return j;
}

TypeSet TypeSet::from_json(const json& j) {
    TypeSet ts;
    auto read = [&](const char* key, bool kernel) {
        if (!j.contains(key)) return;
        for (auto& e : j.at(key)) {
            TypeInfo t;
            t.name = e.at("name").get<std::string>();
            t.degree.c0 = json_rat(e.at("degree"));
            if (e.contains("kappa_coeff")) t.degree.c1 = json_rat(e.at("kappa_coeff"));
            t.kernel = kernel;
            ts.types.push_back(t);
        }
    };
    read("kernels", true);
    read("noises", false);
    for (auto& s : j.at("scaling")) ts.scaling.push_back(json_rat(s));
    if (j.contains("kappa")) ts.kappa = json_rat(j.at("kappa"));
    ts.validate();
    return ts;
}

TypeSet toy_types(const Rat& kappa) {
    return TypeSet({{"I", Degree(2), true}, {"Xi", Degree(Rat(-5, 2), -1), false}}, {Rat(2), Rat(1)}, kappa);
}

}  // namespace regkit
