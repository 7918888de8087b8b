#include <algorithm>
#include <functional>
#include <optional>
#include <set>

#include "regkit/hopf.hpp"

namespace regkit {

namespace {

using MIs = std::vector<MultiIndex>;

void for_each_split(const Flat& f, const std::vector<int>& nodes, const std::function<void(const MIs&, const Rat&)>& fn) {
    MIs cur(nodes.size());
    std::function<void(size_t, Rat)> rec = [&](size_t i, Rat c) {
        if (i == nodes.size()) {
            fn(cur, c);
            return;
        }
        const MultiIndex& full = f.ndeco[nodes[i]];
        for_each_leq(full, [&](const MultiIndex& n) {
            cur[i] = n;
            rec(i + 1, c * mi_binom(full, n));
        });
    };
    rec(0, 1);
}

/// Lowerings l <= e on the listed edges, with binomial weights.
void for_each_lowering(const Flat& f, const std::vector<int>& edges, const std::function<void(const MIs&, const Rat&)>& fn) {
    MIs cur(edges.size());
    std::function<void(size_t, Rat)> rec = [&](size_t i, Rat c) {
        if (i == edges.size()) {
            fn(cur, c);
            return;
        }
        const MultiIndex& full = f.edeco[edges[i]];
        for_each_leq(full, [&](const MultiIndex& l) {
            cur[i] = l;
            rec(i + 1, c * mi_binom(full, l));
        });
    };
    rec(0, 1);
}

/// Assignments of multi-indices to m slots with total degree < budget and slot i degree < caps[i] (if set).
void for_each_budget(const TypeSet& ts, size_t m, const Rat& budget, const std::vector<std::optional<Rat>>& caps,
                     const std::function<void(const MIs&)>& fn) {
    if (!(budget > 0)) return;
    MIs cur(m);
    std::function<void(size_t, Rat)> rec = [&](size_t i, Rat left) {
        if (i == m) {
            fn(cur);
            return;
        }
        Rat cap = left;
        if (i < caps.size() && caps[i] && *caps[i] < cap) cap = *caps[i];
        for (auto& k : mi_below(ts.scaling, cap, true)) {
            cur[i] = k;
            rec(i + 1, left - ts.mdeg(k));
        }
    };
    rec(0, budget);
}

Rat inv_factorials(const MIs& ks) {
    Rat c = 1;
    for (auto& k : ks) c /= mi_factorial(k);
    return c;
}

std::vector<int> kept_nodes(const std::vector<char>& keep) {
    std::vector<int> v;
    for (size_t i = 0; i < keep.size(); ++i)
        if (keep[i]) v.push_back(static_cast<int>(i));
    return v;
}

}  // namespace

Rat flat_degree(const Flat& f, const TypeSet& ts) {
    Rat d = 0;
    for (int v = 0; v < f.size(); ++v) {
        d += ts.mdeg(f.ndeco[v]);
        if (v) d += ts.deg(f.type[v]) - ts.mdeg(f.edeco[v]);
    }
    return d;
}

void Hopf::clear_caches() {
    c_delta_.clear();
    c_plus_.clear();
    c_rminus_.clear();
    c_tilde_.clear();
    c_anti_.clear();
    c_gamma_.clear();
}

bool Hopf::positive_planted(const Tree& p) const {
    if (!p.is_planted()) return false;
    auto& e = p.root().edges[0];
    if (!ts_.is_kernel(e.type)) return false;
    return degree(Tree(e.child), ts_) + ts_.deg(e.type) - ts_.mdeg(e.deco) > 0;
}

bool Hopf::in_T_plus(const Tree& t) const {
    for (auto& e : t.root().edges) {
        if (!ts_.is_kernel(e.type)) return false;
        if (!(degree(Tree(e.child), ts_) + ts_.deg(e.type) - ts_.mdeg(e.deco) > 0)) return false;
    }
    return true;
}

bool Hopf::is_negative_or_one(const Tree& t) const { return t.is_one() || degree(t, ts_) < 0; }

// ===========================================================================
// coaction and positive coproduct
// ===========================================================================

TensorSum Hopf::coaction(const Tree& t, bool plus) {
    auto& cache = plus ? c_plus_ : c_delta_;
    auto it = cache.find(t.key());
    if (it != cache.end()) return it->second;
    if (t.has_over() || t.has_colour()) throw Error("hopf", "coaction expects plain decorated trees");
    if (plus && !in_T_plus(t)) throw Error("hopf", "tree outside the positive structure");

    TensorSum out;
    Flat f = t.flat();
    int d = ts_.dim();
    for (auto& C : cuts_plus(f, ts_)) {
        auto keep = lower_part(f, C);
        std::vector<int> idx;
        Flat L = restrict_flat(f, keep, &idx);
        std::vector<Tree> subs;
        std::vector<std::vector<MultiIndex>> eps_lists;
        bool ok = true;
        for (int e : C) {
            Tree s = Tree::from_flat(subtree_flat(f, e));
            Rat b = degree(s, ts_) + ts_.deg(f.type[e]) - ts_.mdeg(f.edeco[e]);
            if (!(b > 0)) {
                ok = false;
                break;
            }
            subs.push_back(s);
            eps_lists.push_back(mi_below(ts_.scaling, b, true));
        }
        if (!ok) continue;
        auto K = kept_nodes(keep);
        for_each_split(f, K, [&](const MIs& n, const Rat& cs) {
            MultiIndex rootd = mi_zero(d);
            for (size_t i = 0; i < K.size(); ++i) rootd = rootd + (f.ndeco[K[i]] - n[i]);
            MIs eps(C.size());
            std::function<void(size_t)> rec = [&](size_t i) {
                if (i < C.size()) {
                    for (auto& e : eps_lists[i]) {
                        eps[i] = e;
                        rec(i + 1);
                    }
                    return;
                }
                Flat Lc = L;
                for (size_t j = 0; j < K.size(); ++j) Lc.ndeco[idx[K[j]]] = n[j];
                for (size_t j = 0; j < C.size(); ++j) {
                    int p = idx[f.parent[C[j]]];
                    Lc.ndeco[p] = Lc.ndeco[p] + eps[j];
                }
                Tree left = Tree::from_flat(Lc);
                if (plus && !in_T_plus(left)) return;
                Tree right = Tree::monomial(rootd);
                for (size_t j = 0; j < C.size(); ++j)
                    right = tree_product(right, plant(subs[j], ts_, f.type[C[j]], f.edeco[C[j]] + eps[j]));
                add_term(out, std::make_pair(left, right), cs * inv_factorials(eps));
            };
            rec(0);
        });
    }
    cache.emplace(t.key(), out);
    return out;
}

TensorSum Hopf::delta(const Tree& t) { return coaction(t, false); }
TensorSum Hopf::delta_plus(const Tree& t) { return coaction(t, true); }

TensorSum Hopf::delta(const FormalSum& s) {
    TensorSum r;
    for (auto& [t, c] : s) add_into(r, delta(t), c);
    return r;
}

TensorSum Hopf::delta_plus(const FormalSum& s) {
    TensorSum r;
    for (auto& [t, c] : s) add_into(r, delta_plus(t), c);
    return r;
}

// ===========================================================================
// rooted negative extraction
// ===========================================================================

TensorSum Hopf::delta_r_minus(const Tree& t) {
    auto it = c_rminus_.find(t.key());
    if (it != c_rminus_.end()) return it->second;
    TensorSum out;
    Flat f = t.flat();
    int d = ts_.dim();
    for (auto& C : cuts(f)) {
        auto keep = lower_part(f, C);
        std::vector<int> idx, qidx;
        Flat L = restrict_flat(f, keep, &idx);
        Flat Q = quotient_flat(f, keep, &qidx);
        auto K = kept_nodes(keep);
        bool has_edges = L.size() > 1;
        for_each_split(f, K, [&](const MIs& n, const Rat& cs) {
            MultiIndex rootd = mi_zero(d);
            for (size_t i = 0; i < K.size(); ++i) rootd = rootd + (f.ndeco[K[i]] - n[i]);
            if (!has_edges) {
                if (!mi_is_zero(n[0])) return;
                Flat Qc = Q;
                Qc.ndeco[0] = rootd;
                add_term(out, std::make_pair(Tree::one(d), Tree::from_flat(Qc)), cs);
                return;
            }
            Flat Lc = L;
            for (size_t j = 0; j < K.size(); ++j) Lc.ndeco[idx[K[j]]] = n[j];
            Rat d0 = flat_degree(Lc, ts_);
            for_each_budget(ts_, C.size(), -d0, {}, [&](const MIs& eps) {
                Flat Ll = Lc, Qc = Q;
                Qc.ndeco[0] = rootd;
                for (size_t j = 0; j < C.size(); ++j) {
                    int p = idx[f.parent[C[j]]];
                    Ll.ndeco[p] = Ll.ndeco[p] + eps[j];
                    Qc.edeco[qidx[C[j]]] = Qc.edeco[qidx[C[j]]] + eps[j];
                }
                add_term(out, std::make_pair(Tree::from_flat(Ll), Tree::from_flat(Qc)), cs * inv_factorials(eps));
            });
        });
    }
    c_rminus_.emplace(t.key(), out);
    return out;
}

TensorSum Hopf::delta_r_minus_ring(const Tree& t) {
    TensorSum r = delta_r_minus(t);
    int d = ts_.dim();
    add_term(r, std::make_pair(Tree::one(d), t), Rat(-1));
    if (degree(t, ts_) < 0) add_term(r, std::make_pair(t, Tree::one(d)), Rat(-1));
    return r;
}

// ===========================================================================
// antipode
// ===========================================================================

FormalSum Hopf::antipode(const Tree& t) {
    auto it = c_anti_.find(t.key());
    if (it != c_anti_.end()) return it->second;
    int d = ts_.dim();
    FormalSum out;
    auto [k, fs] = factorise(t);
    if (fs.empty()) {
        out = single(t, mi_abs(k) % 2 ? Rat(-1) : Rat(1));
    } else if (fs.size() > 1 || !mi_is_zero(k)) {
        out = antipode(Tree::monomial(k));
        for (auto& f : fs) out = product(out, antipode(f));
    } else {
        if (!in_T_plus(t)) throw Error("truncation", "antipode requested outside the positive structure");
        for (auto& [p, c] : delta_plus(t)) {
            if (p.first == t) {
                if (!p.second.is_one() || c != 1) throw Error("hopf", "unexpected leading term in positive coproduct");
                continue;
            }
            add_into(out, product(antipode(p.first), single(p.second)), -c);
        }
    }
    (void)d;
    c_anti_.emplace(t.key(), out);
    return out;
}

FormalSum Hopf::antipode(const FormalSum& s) {
    FormalSum r;
    for (auto& [t, c] : s) add_into(r, antipode(t), c);
    return r;
}

// ===========================================================================
// variable-coefficient coproduct
// ===========================================================================

Rat Hopf::gamma_of(const Tree& t, const GammaData& g) {
    std::string key = g.tag() + "#" + t.key();
    auto it = c_gamma_.find(key);
    if (it != c_gamma_.end()) return it->second;
    Rat r;
    auto [k, fs] = factorise(t);
    size_t count = fs.size() + (mi_is_zero(k) ? 0 : 1);
    if (fs.empty()) {
        r = g.gamma0;
    } else if (count >= 2) {
        std::optional<Rat> m;
        if (!mi_is_zero(k)) m = g.gamma0;
        for (auto& f : fs) {
            Rat v = gamma_of(f, g);
            if (!m || v < *m) m = v;
        }
        r = *m + g.a_star;
    } else {
        auto& e = t.root().edges[0];
        if (!ts_.is_kernel(e.type))
            r = g.gamma0;
        else
            r = gamma_of(Tree(e.child), g) + ts_.deg(e.type) - ts_.mdeg(e.deco);
    }
    c_gamma_.emplace(key, r);
    return r;
}

TensorSum Hopf::delta_tilde(const Tree& t, const GammaData& g) {
    std::string key = g.tag() + "#" + t.key();
    auto it = c_tilde_.find(key);
    if (it != c_tilde_.end()) return it->second;
    if (t.has_colour()) throw Error("hopf", "recursive form expects uncoloured trees");
    int d = ts_.dim();
    TensorSum out;
    Rat gam = gamma_of(t, g);
    auto [k, fs] = factorise(t);
    size_t count = fs.size() + (mi_is_zero(k) ? 0 : 1);
    if (fs.empty()) {
        for_each_leq(k, [&](const MultiIndex& j) {
            Tree left = Tree::monomial(j);
            if (degree(left, ts_) < gam) add_term(out, std::make_pair(left, Tree::monomial(k - j)), mi_binom(k, j));
        });
    } else if (count >= 2) {
        TensorSum acc;
        add_term(acc, std::make_pair(Tree::one(d), Tree::one(d)), Rat(1));
        if (!mi_is_zero(k)) acc = tensor_product(acc, delta_tilde(Tree::monomial(k), g));
        for (auto& f : fs) acc = tensor_product(acc, delta_tilde(f, g));
        for (auto& [p, c] : acc)
            if (degree(p.first, ts_) < gam) add_term(out, p, c);
    } else {
        auto& e = t.root().edges[0];
        if (!mi_is_zero(e.over)) throw Error("hopf", "recursive form expects trees without over-decoration");
        if (!ts_.is_kernel(e.type)) {
            add_term(out, std::make_pair(t, Tree::one(d)), Rat(1));
        } else {
            Tree body(e.child);
            const MultiIndex& j = e.deco;
            for (auto& [p, c] : delta_tilde(body, g)) {
                for_each_leq(j, [&](const MultiIndex& l) {
                    Rat cjl = mi_binom(j, l);
                    for (auto& kk : mi_below(ts_.scaling, g.m_star - ts_.mdeg(l), true)) {
                        Tree left = tree_product(Tree::monomial(kk), plant(p.first, ts_, e.type, j - l, kk + l));
                        if (!(degree(left, ts_) < gam)) continue;
                        add_term(out, std::make_pair(left, p.second), c * cjl / mi_factorial(kk));
                    }
                });
            }
            for (auto& kk : mi_below(ts_.scaling, g.m_star - ts_.mdeg(j), true)) {
                Tree left = Tree::monomial(kk);
                if (!(degree(left, ts_) < gam)) continue;
                add_term(out, std::make_pair(left, plant(body, ts_, e.type, kk + j)), 1 / mi_factorial(kk));
            }
        }
    }
    c_tilde_.emplace(key, out);
    return out;
}

TensorSum Hopf::delta_tilde_explicit(const Tree& t, const GammaData& g) {
    int d = ts_.dim();
    Flat f = t.flat();
    for (int v = 1; v < f.size(); ++v)
        if (!mi_is_zero(f.over[v])) throw Error("hopf", "explicit form expects trees without over-decoration");
    auto cmask = colour_mask(f);
    Rat colour_shift = 0;
    for (int v = 1; v < f.size(); ++v)
        if (f.col[v]) colour_shift += ts_.deg(f.type[v]) - ts_.mdeg(f.edeco[v]);
    Rat gam = gamma_of(t.has_colour() ? contract(t) : t, g);

    TensorSum out;
    for (auto& C : cuts_plus(f, ts_)) {
        if (std::any_of(C.begin(), C.end(), [&](int e) { return f.col[e]; })) continue;
        auto keep = lower_part(f, C);
        std::vector<int> idx, qidx;
        Flat L = restrict_flat(f, keep, &idx);
        Flat Q = quotient_flat(f, keep, &qidx);
        auto K = kept_nodes(keep);
        std::vector<int> E;  // kept uncoloured kernel edges, ids in f
        for (int v : K)
            if (v && !f.col[v] && ts_.is_kernel(f.type[v])) E.push_back(v);
        std::vector<std::optional<Rat>> caps;
        for (size_t i = 0; i < E.size(); ++i) caps.emplace_back();
        for (int e : C) {
            Tree s = Tree::from_flat(subtree_flat(f, e));
            caps.emplace_back(gamma_of(s, g) + ts_.deg(f.type[e]) - ts_.mdeg(f.edeco[e]));
        }
        for_each_split(f, K, [&](const MIs& n, const Rat& cs) {
            MultiIndex rootd = mi_zero(d);
            for (size_t i = 0; i < K.size(); ++i) rootd = rootd + (f.ndeco[K[i]] - n[i]);
            for_each_lowering(f, E, [&](const MIs& ell, const Rat& cl) {
                Flat Lc = L;
                for (size_t j = 0; j < K.size(); ++j) Lc.ndeco[idx[K[j]]] = n[j];
                for (size_t j = 0; j < E.size(); ++j) {
                    Lc.edeco[idx[E[j]]] = f.edeco[E[j]] - ell[j];
                    Lc.over[idx[E[j]]] = ell[j];
                }
                Rat base = flat_degree(Lc, ts_) - colour_shift;
                for_each_budget(ts_, E.size() + C.size(), gam - base, caps, [&](const MIs& ke) {
                    Flat Ll = Lc, Qc = Q;
                    Qc.ndeco[0] = rootd;
                    MIs kap(ke.begin(), ke.begin() + E.size()), eps(ke.begin() + E.size(), ke.end());
                    for (size_t j = 0; j < E.size(); ++j) {
                        int p = idx[f.parent[E[j]]];
                        Ll.ndeco[p] = Ll.ndeco[p] + kap[j];
                        Ll.over[idx[E[j]]] = Ll.over[idx[E[j]]] + kap[j];
                    }
                    for (size_t j = 0; j < C.size(); ++j) {
                        int p = idx[f.parent[C[j]]];
                        Ll.ndeco[p] = Ll.ndeco[p] + eps[j];
                        Qc.edeco[qidx[C[j]]] = Qc.edeco[qidx[C[j]]] + eps[j];
                    }
                    add_term(out, std::make_pair(Tree::from_flat(Ll), Tree::from_flat(Qc)),
                             cs * cl * inv_factorials(kap) * inv_factorials(eps));
                });
            });
        });
    }
    (void)cmask;
    return out;
}

FormalSum Hopf::d_map(const Tree& t) {
    Flat f = t.flat();
    FormalSum out;
    std::vector<int> E;
    for (int v = 1; v < f.size(); ++v)
        if (ts_.is_kernel(f.type[v])) E.push_back(v);
    for_each_lowering(f, E, [&](const MIs& ell, const Rat& cl) {
        Flat Lc = f;
        for (size_t j = 0; j < E.size(); ++j) {
            Lc.edeco[E[j]] = f.edeco[E[j]] - ell[j];
            Lc.over[E[j]] = f.over[E[j]] + ell[j];
        }
        Rat base = flat_degree(Lc, ts_);
        for_each_budget(ts_, E.size(), -base, {}, [&](const MIs& kap) {
            Flat Ll = Lc;
            for (size_t j = 0; j < E.size(); ++j) {
                Ll.ndeco[f.parent[E[j]]] = Ll.ndeco[f.parent[E[j]]] + kap[j];
                Ll.over[E[j]] = Ll.over[E[j]] + kap[j];
            }
            add_term(out, Tree::from_flat(Ll), cl * inv_factorials(kap));
        });
    });
    return out;
}

// ===========================================================================
// characters
// ===========================================================================

std::vector<Tree> positive_generators(Hopf& h, const std::vector<Tree>& trees) {
    std::set<Tree> gens;
    std::vector<Tree> todo;
    auto push_factors = [&](const Tree& t) {
        for (auto& f : factorise(t).second)
            if (gens.insert(f).second) todo.push_back(f);
    };
    for (auto& t : trees)
        for (auto& [p, c] : h.delta(t)) push_factors(p.second);
    while (!todo.empty()) {
        Tree p = todo.back();
        todo.pop_back();
        for (auto& [q, c] : h.delta_plus(p)) {
            push_factors(q.first);
            push_factors(q.second);
        }
    }
    return {gens.begin(), gens.end()};
}

FormalSum gamma_action(Hopf& h, const Character& g, const FormalSum& v) {
    FormalSum r;
    for (auto& [t, c] : v)
        for (auto& [p, e] : h.delta(t)) add_term(r, p.first, c * e * g.eval(p.second));
    return r;
}

}  // namespace regkit
