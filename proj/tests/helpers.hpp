#pragma once

#include <random>
#include <set>

#include "regkit/hopf.hpp"
#include "regkit/rules.hpp"

namespace th {

using namespace regkit;

constexpr int I = 0, XI = 1;

inline const TypeSet& ts() {
    static TypeSet t = toy_types();
    return t;
}
inline MultiIndex z() { return mi_zero(2); }
inline Tree one() { return Tree::one(2); }
inline Tree X(int a, int b) { return Tree::monomial({a, b}); }
inline Tree Xi() { return noise(ts(), XI); }
inline Tree Ip(const Tree& t, MultiIndex k = {0, 0}) { return plant(t, ts(), I, k); }
inline Tree prod(std::initializer_list<Tree> fs) { return tree_product(std::vector<Tree>(fs), 2); }

/// Random flat drawing with up to max_edges edges.
inline Flat random_flat(std::mt19937& rng, int max_edges, int max_deco = 1, bool with_noise = true) {
    Flat f;
    std::uniform_int_distribution<int> dd(0, max_deco);
    auto rd = [&] { return MultiIndex{std::uniform_int_distribution<int>(0, 3)(rng) == 0 ? 1 : 0, dd(rng)}; };
    f.add(-1, -1, {}, rd(), {});
    int n = std::uniform_int_distribution<int>(0, max_edges)(rng);
    std::vector<int> open{0};
    for (int i = 0; i < n; ++i) {
        int par = open[std::uniform_int_distribution<int>(0, static_cast<int>(open.size()) - 1)(rng)];
        bool nz = with_noise && std::uniform_int_distribution<int>(0, 2)(rng) == 0;
        int v = f.add(par, nz ? XI : I, nz ? z() : rd(), nz ? z() : rd(), {});
        if (!nz) open.push_back(v);
    }
    return f;
}

/// Independent cut enumerator: all edge subsets with at most one edge on every root path.
inline std::set<std::vector<int>> brute_cuts(const Flat& f) {
    std::set<std::vector<int>> out;
    int m = f.size() - 1;
    for (int mask = 0; mask < (1 << m); ++mask) {
        std::vector<int> C;
        for (int e = 1; e <= m; ++e)
            if (mask & (1 << (e - 1))) C.push_back(e);
        bool ok = true;
        for (int a : C)
            for (int b : C)
                if (a != b && f.above(a, b)) ok = false;
        if (ok) out.insert(C);
    }
    return out;
}

}  // namespace th
