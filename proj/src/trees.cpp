#include <algorithm>
#include <deque>
#include <functional>

#include "regkit/tree.hpp"

namespace regkit {

// ===========================================================================
// canonical construction
// ===========================================================================

Edge make_edge(int type, MultiIndex deco, MultiIndex over, bool coloured, NodePtr child) {
    Edge e;
    e.type = type;
    if (over.empty()) over = MultiIndex(deco.size(), 0);
    e.deco = std::move(deco);
    e.over = std::move(over);
    e.coloured = coloured;
    e.child = std::move(child);
    e.key = "<" + std::to_string(e.type) + ":" + mi_str(e.deco);
    if (!mi_is_zero(e.over)) e.key += "^" + mi_str(e.over);
    if (e.coloured) e.key += "*";
    e.key += ">" + e.child->key;
    return e;
}

NodePtr make_node(MultiIndex deco, std::vector<Edge> edges) {
    auto n = std::make_shared<Node>();
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.key < b.key; });
    n->deco = std::move(deco);
    n->key = "(" + mi_str(n->deco);
    for (auto& e : edges) {
        n->key += e.key;
        n->n_edges += 1 + e.child->n_edges;
    }
    n->key += ")";
    n->edges = std::move(edges);
    return n;
}

Tree Tree::one(int d) { return Tree(make_node(mi_zero(d), {})); }

Tree Tree::monomial(const MultiIndex& k) { return Tree(make_node(k, {})); }

bool Tree::has_over() const {
    std::function<bool(const Node&)> rec = [&](const Node& n) {
        for (auto& e : n.edges)
            if (!mi_is_zero(e.over) || rec(*e.child)) return true;
        return false;
    };
    return rec(*root_);
}

bool Tree::has_colour() const {
    std::function<bool(const Node&)> rec = [&](const Node& n) {
        for (auto& e : n.edges)
            if (e.coloured || rec(*e.child)) return true;
        return false;
    };
    return rec(*root_);
}

int Flat::add(int par, int t, MultiIndex e, MultiIndex n, MultiIndex o, bool c) {
    if (o.empty()) o = MultiIndex(n.size(), 0);
    if (e.empty()) e = MultiIndex(n.size(), 0);
    ndeco.push_back(std::move(n));
    parent.push_back(par);
    type.push_back(t);
    edeco.push_back(std::move(e));
    over.push_back(std::move(o));
    col.push_back(c);
    return size() - 1;
}

std::vector<std::vector<int>> Flat::children() const {
    std::vector<std::vector<int>> ch(size());
    for (int v = 1; v < size(); ++v) ch.at(parent[v]).push_back(v);
    return ch;
}

bool Flat::above(int v, int anc) const {
    while (v >= 0) {
        if (v == anc) return true;
        v = parent[v];
    }
    return false;
}

Flat Tree::flat() const {
    Flat f;
    int d = dim();
    std::function<void(const Node&, int)> rec = [&](const Node& n, int me) {
        for (auto& e : n.edges) {
            int c = f.add(me, e.type, e.deco, e.child->deco, e.over, e.coloured);
            rec(*e.child, c);
        }
    };
    f.add(-1, -1, mi_zero(d), root_->deco, mi_zero(d));
    rec(*root_, 0);
    return f;
}

Tree Tree::from_flat(const Flat& f) {
    if (f.size() == 0) throw Error("tree", "empty drawing");
    auto ch = f.children();
    std::vector<int> seen(f.size(), 0);
    std::function<NodePtr(int)> rec = [&](int v) -> NodePtr {
        if (seen[v]++) throw Error("tree", "drawing is not a tree");
        std::vector<Edge> es;
        for (int c : ch[v]) es.push_back(make_edge(f.type[c], f.edeco[c], f.over[c], f.col[c], rec(c)));
        return make_node(f.ndeco[v], std::move(es));
    };
    if (f.parent[0] != -1) throw Error("tree", "node 0 must be the root");
    Tree t(rec(0));
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw Error("tree", "drawing is not connected");
    return t;
}

// ===========================================================================
// degrees and simple builders
// ===========================================================================

Degree degree_affine(const Tree& t, const TypeSet& ts) {
    std::function<Degree(const Node&)> rec = [&](const Node& n) {
        Degree d = ts.mdeg_affine(n.deco);
        for (auto& e : n.edges) {
            if (e.type < 0 || e.type >= ts.size()) throw Error("type-set mismatch", "edge type index out of range");
            d += ts.types[e.type].degree;
            d -= ts.mdeg_affine(e.deco);
            d += rec(*e.child);
        }
        return d;
    };
    return rec(t.root());
}

Rat degree(const Tree& t, const TypeSet& ts) { return degree_affine(t, ts).at(ts.kappa); }

int noise_count(const Tree& t, const TypeSet& ts) {
    std::function<int(const Node&)> rec = [&](const Node& n) {
        int c = 0;
        for (auto& e : n.edges) c += (ts.is_kernel(e.type) ? 0 : 1) + rec(*e.child);
        return c;
    };
    return rec(t.root());
}

void check_types(const Tree& t, const TypeSet& ts) {
    std::function<void(const Node&)> rec = [&](const Node& n) {
        if (static_cast<int>(n.deco.size()) != ts.dim()) throw Error("type-set mismatch", "decoration dimension");
        for (auto& e : n.edges) {
            if (e.type < 0 || e.type >= ts.size()) throw Error("type-set mismatch", "edge type index out of range");
            rec(*e.child);
        }
    };
    rec(t.root());
}

Tree tree_product(const Tree& a, const Tree& b) {
    if (a.dim() != b.dim()) throw Error("type-set mismatch", "decoration dimensions differ");
    std::vector<Edge> es = a.root().edges;
    es.insert(es.end(), b.root().edges.begin(), b.root().edges.end());
    return Tree(make_node(a.root().deco + b.root().deco, std::move(es)));
}

Tree tree_product(const std::vector<Tree>& fs, int d) {
    Tree r = Tree::one(d);
    for (auto& f : fs) r = tree_product(r, f);
    return r;
}

Tree plant(const Tree& t, const TypeSet& ts, int type, const MultiIndex& k, const MultiIndex& over) {
    if (type < 0 || type >= ts.size()) throw Error("type-set mismatch", "unknown type");
    if (!ts.is_kernel(type)) throw Error("plant", "noise type '" + ts.types[type].name + "' passed as kernel type");
    int d = t.dim();
    return Tree(make_node(mi_zero(d), {make_edge(type, k, over.empty() ? mi_zero(d) : over, false, t.ptr())}));
}

Tree noise(const TypeSet& ts, int type) {
    if (ts.is_kernel(type)) throw Error("noise", "kernel type passed as noise type");
    int d = ts.dim();
    return Tree(make_node(mi_zero(d), {make_edge(type, mi_zero(d), mi_zero(d), false, make_node(mi_zero(d), {}))}));
}

Tree with_root_deco(const Tree& t, const MultiIndex& k) { return Tree(make_node(k, t.root().edges)); }

std::pair<MultiIndex, std::vector<Tree>> factorise(const Tree& t) {
    std::vector<Tree> fs;
    int d = t.dim();
    for (auto& e : t.root().edges) fs.emplace_back(make_node(mi_zero(d), {e}));
    return {t.root().deco, fs};
}

Unplanted unplant(const Tree& t) {
    if (!t.is_planted()) throw Error("tree", "not a planted tree");
    auto& e = t.root().edges[0];
    return {e.type, e.deco, e.over, Tree(e.child)};
}

// ===========================================================================
// cuts and quotients
// ===========================================================================

std::vector<std::vector<int>> cuts(const Flat& f) {
    auto ch = f.children();
    std::function<std::vector<std::vector<int>>(int)> rec = [&](int v) {
        std::vector<std::vector<int>> acc{{}};
        for (int c : ch[v]) {
            auto sub = rec(c);
            sub.push_back({c});
            std::vector<std::vector<int>> nxt;
            for (auto& a : acc)
                for (auto& s : sub) {
                    auto m = a;
                    m.insert(m.end(), s.begin(), s.end());
                    nxt.push_back(std::move(m));
                }
            acc = std::move(nxt);
        }
        return acc;
    };
    auto out = rec(0);
    for (auto& c : out) std::sort(c.begin(), c.end());
    return out;
}

std::vector<std::vector<int>> cuts(const Tree& t) { return cuts(t.flat()); }

std::vector<std::vector<int>> cuts_plus(const Flat& f, const TypeSet& ts) {
    std::vector<std::vector<int>> out;
    for (auto& c : cuts(f))
        if (std::all_of(c.begin(), c.end(), [&](int e) { return ts.is_kernel(f.type[e]); })) out.push_back(c);
    return out;
}

std::vector<char> lower_part(const Flat& f, const std::vector<int>& cut) {
    std::vector<char> keep(f.size(), 1);
    for (int v = 0; v < f.size(); ++v)
        for (int e : cut)
            if (f.above(v, e)) keep[v] = 0;
    return keep;
}

static std::vector<int> bfs_order(const Flat& f) {
    auto ch = f.children();
    std::vector<int> order{0};
    for (size_t i = 0; i < order.size(); ++i)
        for (int c : ch[order[i]]) order.push_back(c);
    return order;
}

Flat restrict_flat(const Flat& f, const std::vector<char>& keep, std::vector<int>* out) {
    Flat g;
    std::vector<int> idx(f.size(), -1);
    for (int v : bfs_order(f)) {
        if (!keep[v]) continue;
        if (v == 0) {
            idx[v] = g.add(-1, -1, f.edeco[0], f.ndeco[0], f.over[0]);
            continue;
        }
        if (idx[f.parent[v]] < 0) throw Error("tree", "kept node set is not root-connected");
        idx[v] = g.add(idx[f.parent[v]], f.type[v], f.edeco[v], f.ndeco[v], f.over[v], f.col[v]);
    }
    if (out) *out = idx;
    return g;
}

Flat quotient_flat(const Flat& f, const std::vector<char>& keep, std::vector<int>* out) {
    Flat g;
    MultiIndex root = mi_zero(static_cast<int>(f.ndeco[0].size()));
    for (int v = 0; v < f.size(); ++v)
        if (keep[v]) root = root + f.ndeco[v];
    std::vector<int> idx(f.size(), -1);
    g.add(-1, -1, {}, root, {});
    for (int v : bfs_order(f)) {
        if (keep[v]) {
            idx[v] = 0;
            continue;
        }
        idx[v] = g.add(idx[f.parent[v]], f.type[v], f.edeco[v], f.ndeco[v], f.over[v], f.col[v]);
    }
    if (out) *out = idx;
    return g;
}

Flat subtree_flat(const Flat& f, int v) {
    std::vector<char> keep(f.size(), 0);
    for (int u = 0; u < f.size(); ++u) keep[u] = f.above(u, v);
    Flat g;
    std::vector<int> idx(f.size(), -1);
    for (int u : bfs_order(f)) {
        if (!keep[u]) continue;
        if (u == v)
            idx[u] = g.add(-1, -1, {}, f.ndeco[u], {});
        else
            idx[u] = g.add(idx[f.parent[u]], f.type[u], f.edeco[u], f.ndeco[u], f.over[u], f.col[u]);
    }
    return g;
}

// ===========================================================================
// colours and contraction
// ===========================================================================

std::vector<char> colour_mask(const Flat& f) {
    std::vector<char> m(f.size(), 0);
    m[0] = 1;
    for (int v : bfs_order(f))
        if (v && f.col[v]) {
            if (!m[f.parent[v]]) throw Error("colour", "colour is not root-connected");
            m[v] = 1;
        }
    return m;
}

Tree colour(const Tree& t, const std::vector<int>& edges) {
    Flat f = t.flat();
    for (int e : edges) {
        if (e <= 0 || e >= f.size()) throw Error("colour", "edge id out of range");
        f.col[e] = 1;
    }
    colour_mask(f);
    return Tree::from_flat(f);
}

Tree uncolour(const Tree& t) {
    Flat f = t.flat();
    std::fill(f.col.begin(), f.col.end(), 0);
    return Tree::from_flat(f);
}

Tree strip_over(const Tree& t) {
    Flat f = t.flat();
    for (auto& o : f.over) std::fill(o.begin(), o.end(), 0);
    return Tree::from_flat(f);
}

Tree contract(const Tree& t) {
    Flat f = t.flat();
    auto m = colour_mask(f);
    Flat g = quotient_flat(f, m);
    std::fill(g.col.begin(), g.col.end(), 0);
    return Tree::from_flat(g);
}

// ===========================================================================
// symmetry factor, printing, json
// ===========================================================================

mpz_class symmetry_factor(const Tree& t) {
    std::function<mpz_class(const Node&)> rec = [&](const Node& n) {
        mpz_class s = 1;
        size_t i = 0;
        while (i < n.edges.size()) {
            size_t j = i;
            while (j < n.edges.size() && n.edges[j].key == n.edges[i].key) ++j;
            mpz_class sub = rec(*n.edges[i].child);
            for (size_t m = 1; m <= j - i; ++m) s *= static_cast<unsigned long>(m) * sub;
            i = j;
        }
        return s;
    };
    return rec(t.root());
}

std::string pretty(const Tree& t, const TypeSet& ts) {
    std::function<std::string(const Node&)> rec = [&](const Node& n) {
        std::vector<std::string> parts;
        if (!mi_is_zero(n.deco)) parts.push_back("X^{" + mi_str(n.deco) + "}");
        size_t i = 0;
        while (i < n.edges.size()) {
            size_t j = i;
            while (j < n.edges.size() && n.edges[j].key == n.edges[i].key) ++j;
            auto& e = n.edges[i];
            std::string s = ts.types.at(e.type).name;
            if (!mi_is_zero(e.deco)) s += "_{" + mi_str(e.deco) + "}";
            if (!mi_is_zero(e.over)) s += "^[" + mi_str(e.over) + "]";
            if (e.coloured) s += "*";
            bool bare_noise = !ts.is_kernel(e.type) && e.child->edges.empty() && mi_is_zero(e.child->deco);
            if (!bare_noise) s += "(" + rec(*e.child) + ")";
            if (j - i > 1) s += "^" + std::to_string(j - i);
            parts.push_back(s);
            i = j;
        }
        if (parts.empty()) return std::string("1");
        std::string out;
        for (size_t k = 0; k < parts.size(); ++k) out += (k ? " " : "") + parts[k];
        return out;
    };
    return rec(t.root());
}

json tree_to_json(const Tree& t, const TypeSet& ts) {
    Flat f = t.flat();
    json j;
    j["root"] = 0;
    j["nodes"] = json::array();
    j["edges"] = json::array();
    json colour = json::array();
    for (int v = 0; v < f.size(); ++v) j["nodes"].push_back({{"deco", f.ndeco[v]}});
    for (int v = 1; v < f.size(); ++v) {
        json e{{"from", f.parent[v]}, {"to", v}, {"type", ts.types.at(f.type[v]).name}, {"deco", f.edeco[v]}};
        if (!mi_is_zero(f.over[v])) e["over_deco"] = f.over[v];
        if (f.col[v]) colour.push_back(v - 1);
        j["edges"].push_back(e);
    }
    if (!colour.empty()) j["colour"] = colour;
    j["key"] = t.key();
    j["pretty"] = pretty(t, ts);
    return j;
}

Tree tree_from_json(const json& j, const TypeSet& ts) {
    int d = ts.dim();
    auto& nodes = j.at("nodes");
    int n = static_cast<int>(nodes.size());
    int root = j.value("root", 0);
    if (root < 0 || root >= n) throw Error("parse", "root index out of range");
    std::vector<MultiIndex> nd(n);
    for (int v = 0; v < n; ++v) {
        nd[v] = nodes[v].contains("deco") ? nodes[v]["deco"].get<MultiIndex>() : mi_zero(d);
        if (static_cast<int>(nd[v].size()) != d) throw Error("type-set mismatch", "node decoration dimension");
    }
    struct E {
        int from, to, type;
        MultiIndex deco, over;
        bool col = false;
    };
    std::vector<E> es;
    for (auto& e : j.at("edges")) {
        E x;
        x.from = e.at("from");
        x.to = e.at("to");
        x.type = ts.find(e.at("type").get<std::string>());
        x.deco = e.contains("deco") ? e["deco"].get<MultiIndex>() : mi_zero(d);
        x.over = e.contains("over_deco") ? e["over_deco"].get<MultiIndex>() : mi_zero(d);
        if (static_cast<int>(x.deco.size()) != d || static_cast<int>(x.over.size()) != d)
            throw Error("type-set mismatch", "edge decoration dimension");
        if (x.from < 0 || x.from >= n || x.to < 0 || x.to >= n) throw Error("parse", "edge endpoint out of range");
        es.push_back(x);
    }
    if (j.contains("colour"))
        for (auto& c : j["colour"]) es.at(c.get<int>()).col = true;
    if (static_cast<int>(es.size()) != n - 1) throw Error("tree", "edge count must be nodes-1");
    std::vector<int> par(n, -2), inc(n, -1);
    for (size_t i = 0; i < es.size(); ++i) {
        if (par[es[i].to] != -2) throw Error("tree", "node with two parents");
        par[es[i].to] = es[i].from;
        inc[es[i].to] = static_cast<int>(i);
    }
    if (par[root] != -2) throw Error("tree", "root has a parent");
    Flat f;
    std::vector<int> idx(n, -1);
    idx[root] = f.add(-1, -1, {}, nd[root], {});
    std::deque<int> q{root};
    std::vector<std::vector<int>> ch(n);
    for (int v = 0; v < n; ++v)
        if (v != root) {
            if (par[v] < 0) throw Error("tree", "disconnected node");
            ch[par[v]].push_back(v);
        }
    while (!q.empty()) {
        int v = q.front();
        q.pop_front();
        for (int c : ch[v]) {
            auto& e = es[inc[c]];
            idx[c] = f.add(idx[v], e.type, e.deco, nd[c], e.over, e.col);
            q.push_back(c);
        }
    }
    for (int v = 0; v < n; ++v)
        if (idx[v] < 0) throw Error("tree", "graph is not a rooted tree");
    colour_mask(f);
    return Tree::from_flat(f);
}

}  // namespace regkit
