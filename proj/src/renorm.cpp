#include <algorithm>
#include <functional>

#include "regkit/renorm.hpp"

namespace regkit {

bool precedes(const Tree& a, const Tree& b, const TypeSet& ts) {
    int na = noise_count(a, ts), nb = noise_count(b, ts);
    if (na != nb) return na < nb;
    return degree(a, ts) < degree(b, ts);
}

std::vector<Tree> product_divisors(const Tree& t) {
    auto [k, fs] = factorise(t);
    int d = t.dim();
    std::set<Tree> out;
    size_t n = fs.size();
    for (size_t mask = 0; mask < (size_t(1) << n); ++mask) {
        std::vector<Tree> part;
        for (size_t i = 0; i < n; ++i)
            if (mask & (size_t(1) << i)) part.push_back(fs[i]);
        Tree base = tree_product(part, d);
        for_each_leq(k, [&](const MultiIndex& m) { out.insert(tree_product(base, Tree::monomial(m))); });
    }
    return {out.begin(), out.end()};
}

void History::keep_if_conforming(std::set<Tree>& out, const Tree& t) const {
    if (strongly_conforms(t, rule_)) out.insert(t);
}

std::set<Tree> History::phase_structure(const std::set<Tree>& s) {
    std::set<Tree> out = s;
    for (auto& t : s)
        for (auto& [p, c] : h_.delta(t)) keep_if_conforming(out, p.first);
    return out;
}

std::set<Tree> History::phase_extraction(const std::set<Tree>& s) {
    std::set<Tree> out = s;
    for (auto& t : s)
        for (auto& [p, c] : h_.delta_r_minus(t)) {
            keep_if_conforming(out, p.first);
            keep_if_conforming(out, p.second);
        }
    return out;
}

std::set<Tree> History::phase_factors(const std::set<Tree>& s) {
    std::set<Tree> out = s;
    for (auto& t : s) {
        if (t.is_planted()) keep_if_conforming(out, Tree(t.root().edges[0].child));
        for (auto& f : product_divisors(t)) keep_if_conforming(out, f);
    }
    return out;
}

HistResult History::hist(const std::vector<Tree>& seed) {
    std::set<Tree> cur;
    for (auto& t : seed) {
        if (!strongly_conforms(t, rule_)) throw Error("conformity", "seed tree does not conform to the rule: " + t.key());
        cur.insert(t);
    }
    HistResult r;
    int n = 0, stable = 0;
    while (stable < 3) {
        std::set<Tree> next;
        switch (n % 3) {
            case 0: next = phase_structure(cur); break;
            case 1: next = phase_extraction(cur); break;
            default: next = phase_factors(cur); break;
        }
        ++n;
        stable = next.size() == cur.size() ? stable + 1 : 0;
        cur = std::move(next);
        if (stable == 0) r.rounds = n;
    }
    r.trees.assign(cur.begin(), cur.end());
    return r;
}

bool History::is_historic(const std::vector<Tree>& set) {
    std::set<Tree> s(set.begin(), set.end());
    return phase_structure(s) == s && phase_extraction(s) == s && phase_factors(s) == s;
}

int History::age(const Tree& t) {
    auto it = ages_.find(t);
    if (it != ages_.end()) return it->second;
    auto hs = hist({t}).trees;
    const TypeSet& ts = h_.types();
    std::set<std::pair<int, Rat>> levels;
    for (auto& s : hs) levels.emplace(noise_count(s, ts), degree(s, ts));
    int a = static_cast<int>(levels.size());
    ages_.emplace(t, a);
    return a;
}

bool is_good(const std::vector<Tree>& set) {
    std::set<Tree> s(set.begin(), set.end());
    for (auto& t : s) {
        if (t.is_planted() && !s.count(Tree(t.root().edges[0].child))) return false;
        for (auto& f : product_divisors(t))
            if (!s.count(f)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------

Rat a_star(const std::vector<Tree>& B, const TypeSet& ts) {
    Rat best = 0;  // the tree 1
    for (auto& t : B) {
        Flat f = t.flat();
        for (auto& n : f.ndeco) n = mi_zero(t.dim());
        int m = f.size();
        auto ch = f.children();
        // enumerate root-connected node subsets recursively
        std::vector<char> keep(m, 0);
        keep[0] = 1;
        std::function<void(std::vector<int>)> rec = [&](std::vector<int> frontier) {
            if (frontier.empty()) {
                best = std::min(best, flat_degree(restrict_flat(f, keep), ts));
                return;
            }
            int v = frontier.back();
            frontier.pop_back();
            rec(frontier);
            keep[v] = 1;
            auto fr = frontier;
            for (int c : ch[v]) fr.push_back(c);
            rec(fr);
            keep[v] = 0;
        };
        rec(ch[0]);
    }
    return best;
}

GammaData gamma_data(Hopf& h, const std::vector<Tree>& B, const Rat& gamma0) {
    const TypeSet& ts = h.types();
    GammaData g{gamma0, a_star(B, ts), 0};
    Rat gmax = gamma0;
    Rat planted_max = 0;
    for (auto& t : B) {
        gmax = std::max(gmax, h.gamma_of(t, g));
        if (t.is_planted() && ts.is_kernel(t.root().edges[0].type)) {
            auto& e = t.root().edges[0];
            planted_max = std::max(planted_max, Rat(degree(Tree(e.child), ts) + ts.deg(e.type)));
        }
    }
    g.m_star = std::max(Rat(gmax - g.a_star), planted_max);
    return g;
}

std::vector<Tree> inadmissible(Hopf& h, const std::vector<Tree>& B, const GammaData& g) {
    std::vector<Tree> bad;
    for (auto& t : B) {
        Rat v = h.gamma_of(t, g);
        if (!(v > 0) || v.get_den() == 1) bad.push_back(t);
    }
    return bad;
}

// ---------------------------------------------------------------------------

bool must_vanish(const Tree& t, const TypeSet& ts) {
    if (t.is_planted() && ts.is_kernel(t.root().edges[0].type)) return true;
    return t.n_edges() > 0 && !mi_is_zero(t.root().deco);
}

std::vector<PrepViolation> check_preparation(Hopf& h, const Functional<Rat>& ell, const std::vector<Tree>& B) {
    const TypeSet& ts = h.types();
    std::vector<PrepViolation> out;
    for (auto& t : B) {
        auto p = apply_preparation(h, ell, t);
        auto it = p.find(t);
        if (it != p.end()) {
            if (it->second == 1)
                p.erase(it);
            else
                it->second -= 1;
        } else {
            p[t] = -1;
        }
        for (auto& [s, c] : p) {
            if (!(degree(t, ts) < degree(s, ts))) out.push_back({t, s, "degree does not increase"});
            if (!(noise_count(t, ts) > noise_count(s, ts))) out.push_back({t, s, "noise count does not decrease"});
            auto [k, fs] = factorise(t);
            if (fs.empty() || t.is_planted() || (t.n_edges() == 1 && !ts.is_kernel(t.root().edges[0].type)))
                out.push_back({t, s, "acts on a noise, monomial or planted tree"});
        }
    }
    return out;
}

json functional_to_json(const Functional<double>& ell, const TypeSet& ts) {
    json j = json::array();
    for (auto& [t, v] : ell) j.push_back({{"tree", t.key()}, {"pretty", pretty(t, ts)}, {"value", v}});
    return j;
}

json functional_to_json(const Functional<Rat>& ell, const TypeSet& ts) {
    json j = json::array();
    for (auto& [t, v] : ell) j.push_back({{"tree", t.key()}, {"pretty", pretty(t, ts)}, {"value", rat_str(v)}});
    return j;
}

}  // namespace regkit
