#include <algorithm>
#include <functional>

#include "regkit/rules.hpp"

namespace regkit {

ChildMultiset node_children(const Node& n) {
    ChildMultiset m;
    for (auto& e : n.edges) m.push_back({e.type, e.deco});
    std::sort(m.begin(), m.end());
    return m;
}

bool Rule::allows(int type, const ChildMultiset& m) const { return allowed.at(type).count(m) > 0; }

bool Rule::allows_root(const ChildMultiset& m) const {
    for (int t = 0; t < ts.size(); ++t)
        if (allows(t, m)) return true;
    return false;
}

static std::vector<ChildMultiset> sub_multisets(const ChildMultiset& m) {
    std::vector<ChildMultiset> out;
    int n = static_cast<int>(m.size());
    for (int mask = 0; mask < (1 << n); ++mask) {
        ChildMultiset s;
        for (int i = 0; i < n; ++i)
            if (mask & (1 << i)) s.push_back(m[i]);
        out.push_back(s);
    }
    return out;
}

bool Rule::normal() const {
    for (int t = 0; t < ts.size(); ++t)
        for (auto& m : allowed[t])
            for (auto& s : sub_multisets(m))
                if (!allows(t, s)) return false;
    return true;
}

static void lowerings(const ChildMultiset& m, size_t i, ChildMultiset& cur, std::vector<ChildMultiset>& out) {
    if (i == m.size()) {
        auto s = cur;
        std::sort(s.begin(), s.end());
        out.push_back(s);
        return;
    }
    for_each_leq(m[i].deco, [&](const MultiIndex& k) {
        cur.push_back({m[i].type, k});
        lowerings(m, i + 1, cur, out);
        cur.pop_back();
    });
}

bool Rule::lowering_closed() const {
    for (int t = 0; t < ts.size(); ++t)
        for (auto& m : allowed[t]) {
            std::vector<ChildMultiset> low;
            ChildMultiset cur;
            lowerings(m, 0, cur, low);
            for (auto& l : low)
                if (!allows(t, l)) return false;
        }
    return true;
}

bool Rule::kernel_derivatives_bounded() const {
    for (int t = 0; t < ts.size(); ++t)
        for (auto& m : allowed[t])
            for (auto& c : m)
                if (ts.is_kernel(c.type) && ts.deg(c.type) - ts.mdeg(c.deco) < 0) return false;
    return true;
}

bool Rule::check_witness(const std::vector<Rat>& reg) const {
    for (int t = 0; t < ts.size(); ++t) {
        if (allowed[t].empty()) continue;
        std::optional<Rat> inf;
        for (auto& m : allowed[t]) {
            Rat s = 0;
            for (auto& c : m) s += reg[c.type] - ts.mdeg(c.deco);
            if (!inf || s < *inf) inf = s;
        }
        if (!(reg[t] < ts.deg(t) + *inf)) return false;
    }
    return true;
}

std::optional<std::vector<Rat>> Rule::find_witness() const {
    std::vector<std::vector<Rat>> grid = witness_candidates;
    if (grid.empty()) {
        std::vector<Rat> g;
        for (int i = -120; i <= 120; ++i) g.push_back(Rat(i, 20));
        grid.assign(ts.size(), g);
    }
    if (static_cast<int>(grid.size()) != ts.size()) throw Error("config", "witness grid size mismatch");
    std::vector<Rat> reg(ts.size());
    std::function<bool(int)> rec = [&](int i) {
        if (i == ts.size()) return check_witness(reg);
        for (auto& v : grid[i]) {
            reg[i] = v;
            if (rec(i + 1)) return true;
        }
        return false;
    };
    if (rec(0)) return reg;
    return std::nullopt;
}

json Rule::to_json() const {
    json j = ts.to_json();
    json rules;
    for (int t = 0; t < ts.size(); ++t) {
        json lst = json::array();
        for (auto& m : allowed[t]) {
            json ms = json::array();
            for (auto& c : m) ms.push_back({ts.types[c.type].name, c.deco});
            lst.push_back(ms);
        }
        rules[ts.types[t].name] = lst;
    }
    j["rules"] = rules;
    j["complete"] = complete_asserted;
    if (witness) {
        json w;
        for (int t = 0; t < ts.size(); ++t) w[ts.types[t].name] = rat_str((*witness)[t]);
        j["witness"] = w;
    }
    return j;
}

Rule Rule::from_json(const json& j) {
    Rule r;
    try {
        r.ts = TypeSet::from_json(j);
        r.allowed.assign(r.ts.size(), {});
        for (auto& [name, lst] : j.at("rules").items()) {
            int t = r.ts.find(name);
            for (auto& ms : lst) {
                ChildMultiset m;
                for (auto& c : ms) {
                    MultiIndex k = c.size() > 1 ? c[1].get<MultiIndex>() : mi_zero(r.ts.dim());
                    if (static_cast<int>(k.size()) != r.ts.dim()) throw Error("parse", "rule decoration dimension");
                    m.push_back({r.ts.find(c[0].get<std::string>()), k});
                }
                std::sort(m.begin(), m.end());
                r.allowed[t].insert(m);
            }
        }
        r.complete_asserted = j.value("complete", false);
        if (j.contains("witness_candidates")) {
            r.witness_candidates.assign(r.ts.size(), {});
            for (auto& [name, lst] : j["witness_candidates"].items())
                for (auto& v : lst) r.witness_candidates[r.ts.find(name)].push_back(json_rat(v));
        }
    } catch (const json::exception& e) {
        throw Error("parse", std::string("rule file: ") + e.what());
    }
    return r;
}

Rule toy_rule(const Rat& kappa) {
    Rule r;
    r.ts = toy_types(kappa);
    int I = 0, Xi = 1;
    MultiIndex z = mi_zero(2);
    r.allowed.assign(2, {});
    r.allowed[I] = {{}, {{Xi, z}}, {{I, z}}, {{I, z}, {I, z}}, {{I, z}, {I, z}, {I, z}}};
    r.allowed[Xi] = {{}};
    r.complete_asserted = true;
    return r;
}

Rule derivative_completion(const Rule& r) {
    Rule out = r;
    for (int t = 0; t < r.ts.size(); ++t)
        for (auto& m : r.allowed[t]) {
            std::vector<ChildMultiset> low;
            ChildMultiset cur;
            lowerings(m, 0, cur, low);
            for (auto& l : low) out.allowed[t].insert(l);
        }
    out.witness.reset();
    return out;
}

bool conforms(const Tree& t, const Rule& r) {
    std::function<bool(const Node&)> rec = [&](const Node& n) {
        for (auto& e : n.edges) {
            if (!r.allows(e.type, node_children(*e.child))) return false;
            if (!r.ts.is_kernel(e.type) && !mi_is_zero(e.child->deco)) return false;
            if (!rec(*e.child)) return false;
        }
        return true;
    };
    return rec(t.root());
}

bool strongly_conforms(const Tree& t, const Rule& r) { return r.allows_root(node_children(t.root())) && conforms(t, r); }

// ---------------------------------------------------------------------------
// generation
// ---------------------------------------------------------------------------

std::map<Rat, std::vector<Tree>> TreeUniverse::by_degree(const TypeSet& ts) const {
    std::map<Rat, std::vector<Tree>> m;
    for (auto& t : trees) m[degree(t, ts)].push_back(t);
    return m;
}

std::map<int, std::vector<Tree>> TreeUniverse::by_noise(const TypeSet& ts) const {
    std::map<int, std::vector<Tree>> m;
    for (auto& t : trees) m[noise_count(t, ts)].push_back(t);
    return m;
}

std::vector<Tree> TreeUniverse::negative(const TypeSet& ts) const {
    std::vector<Tree> out;
    for (auto& t : trees)
        if (degree(t, ts) < 0) out.push_back(t);
    return out;
}

bool TreeUniverse::contains(const Tree& t) const { return std::binary_search(trees.begin(), trees.end(), t); }

TreeUniverse generate(const Rule& r, const Rat& degree_cap, int edge_cap) {
    if (edge_cap < 0) throw Error("config", "edge cap must be non-negative");
    auto w = r.witness ? r.witness : r.find_witness();
    if (!w) throw Error("subcriticality", "no regularity assignment found on the candidate grid; refusing to enumerate");
    const TypeSet& ts = r.ts;
    int d = ts.dim();

    // undecorated shapes of the node sitting above an edge of a given type, by edge budget
    std::map<std::pair<int, int>, std::vector<NodePtr>> memo;
    std::function<std::vector<NodePtr>(const std::set<ChildMultiset>&, int)> from_sets;
    std::function<std::vector<NodePtr>(int, int)> shapes = [&](int type, int budget) {
        auto key = std::make_pair(type, budget);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        auto res = from_sets(r.allowed[type], budget);
        memo[key] = res;
        return res;
    };
    from_sets = [&](const std::set<ChildMultiset>& sets, int budget) {
        std::map<std::string, NodePtr> out;
        for (auto& m : sets) {
            int n = static_cast<int>(m.size());
            if (n > budget) continue;
            std::vector<Edge> cur;
            std::function<void(int, int)> rec = [&](int i, int left) {
                if (i == n) {
                    auto node = make_node(mi_zero(d), cur);
                    out.emplace(node->key, node);
                    return;
                }
                for (int b = 0; b <= left; ++b)
                    for (auto& c : shapes(m[i].type, b)) {
                        if (c->n_edges != b) continue;
                        cur.push_back(make_edge(m[i].type, m[i].deco, {}, false, c));
                        rec(i + 1, left - b);
                        cur.pop_back();
                    }
            };
            rec(0, budget - n);
        }
        std::vector<NodePtr> v;
        for (auto& [k, p] : out) v.push_back(p);
        return v;
    };

    std::set<ChildMultiset> root_sets;
    for (int t = 0; t < ts.size(); ++t) root_sets.insert(r.allowed[t].begin(), r.allowed[t].end());

    std::set<Tree> found;
    for (auto& shape : from_sets(root_sets, edge_cap)) {
        Tree base(shape);
        Rat slack = degree_cap - degree(base, ts);
        if (slack < 0) continue;
        Flat f = base.flat();
        auto decos = mi_below(ts.scaling, slack, false);
        std::function<void(int, Rat)> rec = [&](int v, Rat left) {
            if (v == f.size()) {
                found.insert(Tree::from_flat(f));
                return;
            }
            bool leaf_of_noise = v > 0 && !ts.is_kernel(f.type[v]);
            for (auto& k : decos) {
                if (leaf_of_noise && !mi_is_zero(k)) continue;
                Rat c = ts.mdeg(k);
                if (c > left) continue;
                f.ndeco[v] = k;
                rec(v + 1, left - c);
            }
            f.ndeco[v] = mi_zero(d);
        };
        rec(0, slack);
    }
    TreeUniverse u;
    u.degree_cap = degree_cap;
    u.edge_cap = edge_cap;
    for (auto& t : found)
        if (strongly_conforms(t, r)) u.trees.push_back(t);
    return u;
}

}  // namespace regkit
