#pragma once

#include <gmpxx.h>

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace regkit {

using Rat = mpq_class;
using json = nlohmann::json;

struct Error : std::runtime_error {
    std::string kind;
    Error(std::string k, const std::string& msg) : std::runtime_error(k + ": " + msg), kind(std::move(k)) {}
};

std::string rat_str(const Rat& q);
Rat parse_rat(const std::string& s);
Rat json_rat(const json& j);
double to_double(const Rat& q);

// ---------------------------------------------------------------------------
// multi-indices
// ---------------------------------------------------------------------------

using MultiIndex = std::vector<int>;

MultiIndex mi_zero(int d);
MultiIndex mi_unit(int d, int i);
MultiIndex operator+(const MultiIndex& a, const MultiIndex& b);
MultiIndex operator-(const MultiIndex& a, const MultiIndex& b);
bool mi_leq(const MultiIndex& a, const MultiIndex& b);
bool mi_is_zero(const MultiIndex& a);
int mi_abs(const MultiIndex& a);
Rat mi_factorial(const MultiIndex& a);
Rat mi_binom(const MultiIndex& n, const MultiIndex& k);
double mi_factorial_d(const MultiIndex& a);
std::string mi_str(const MultiIndex& a);

/// Calls f(k) for every k <= n componentwise.
void for_each_leq(const MultiIndex& n, const std::function<void(const MultiIndex&)>& f);

/// All multi-indices k of dimension scaling.size() with |k|_s < cap (or <= cap).
std::vector<MultiIndex> mi_below(const std::vector<Rat>& scaling, const Rat& cap, bool strict = true);

// ---------------------------------------------------------------------------
// degrees: c0 + c1*kappa, compared at a fixed kappa
// ---------------------------------------------------------------------------

struct Degree {
    Rat c0 = 0, c1 = 0;
    Degree() = default;
    Degree(Rat a, Rat b = 0) : c0(std::move(a)), c1(std::move(b)) {}
    Degree& operator+=(const Degree& o) { c0 += o.c0; c1 += o.c1; return *this; }
    Degree& operator-=(const Degree& o) { c0 -= o.c0; c1 -= o.c1; return *this; }
    friend Degree operator+(Degree a, const Degree& b) { return a += b; }
    friend Degree operator-(Degree a, const Degree& b) { return a -= b; }
    friend bool operator==(const Degree& a, const Degree& b) { return a.c0 == b.c0 && a.c1 == b.c1; }
    Rat at(const Rat& kappa) const { return c0 + c1 * kappa; }
    std::string str() const;
};

// ---------------------------------------------------------------------------
// type sets
// ---------------------------------------------------------------------------

struct TypeInfo {
    std::string name;
    Degree degree;
    bool kernel = true;
};

class TypeSet {
public:
    std::vector<TypeInfo> types;
    std::vector<Rat> scaling;
    Rat kappa{1, 100};

    TypeSet() = default;
    TypeSet(std::vector<TypeInfo> t, std::vector<Rat> s, Rat k = Rat(1, 100));

    int dim() const { return static_cast<int>(scaling.size()); }
    int size() const { return static_cast<int>(types.size()); }
    bool is_kernel(int t) const { return types.at(t).kernel; }
    int find(const std::string& name) const;
    Rat deg(int t) const { return types.at(t).degree.at(kappa); }
    Rat mdeg(const MultiIndex& k) const;
    Degree mdeg_affine(const MultiIndex& k) const;
    Rat scaling_total() const;
    Rat scaling_max() const;

    void validate() const;
    json to_json() const;
    static TypeSet from_json(const json& j);
};

/// Phi^4_1-type toy: scaling (2,1), kernel I of degree 2, noise Xi of degree -5/2 - kappa.
TypeSet toy_types(const Rat& kappa = Rat(1, 100));

}  // namespace regkit
