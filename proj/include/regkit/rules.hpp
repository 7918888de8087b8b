#pragma once

#include <optional>
#include <set>

#include "regkit/tree.hpp"

namespace regkit {

struct ChildSpec {
    int type;
    MultiIndex deco;
    friend bool operator<(const ChildSpec& a, const ChildSpec& b) {
        return a.type != b.type ? a.type < b.type : a.deco < b.deco;
    }
    friend bool operator==(const ChildSpec& a, const ChildSpec& b) { return a.type == b.type && a.deco == b.deco; }
};

using ChildMultiset = std::vector<ChildSpec>;  // kept sorted

ChildMultiset node_children(const Node& n);

class Rule {
public:
    TypeSet ts;
    std::vector<std::set<ChildMultiset>> allowed;  // indexed by type
    bool complete_asserted = false;
    std::vector<std::vector<Rat>> witness_candidates;  // optional search grid per type
    std::optional<std::vector<Rat>> witness;

    bool allows(int type, const ChildMultiset& m) const;
    bool allows_root(const ChildMultiset& m) const;
    bool normal() const;
    bool lowering_closed() const;
    bool kernel_derivatives_bounded() const;  // no |l| - |e| < 0 kernel entries

    /// Searches the candidate grid for a regularity assignment witnessing subcriticality.
    std::optional<std::vector<Rat>> find_witness() const;
    bool check_witness(const std::vector<Rat>& reg) const;

    json to_json() const;
    static Rule from_json(const json& j);
};

Rule toy_rule(const Rat& kappa = Rat(1, 100));
Rule derivative_completion(const Rule& r);

bool conforms(const Tree& t, const Rule& r);
bool strongly_conforms(const Tree& t, const Rule& r);

struct TreeUniverse {
    std::vector<Tree> trees;  // canonical order
    Rat degree_cap;
    int edge_cap = 0;

    std::map<Rat, std::vector<Tree>> by_degree(const TypeSet& ts) const;
    std::map<int, std::vector<Tree>> by_noise(const TypeSet& ts) const;
    std::vector<Tree> negative(const TypeSet& ts) const;
    bool contains(const Tree& t) const;
};

TreeUniverse generate(const Rule& r, const Rat& degree_cap, int edge_cap);

}  // namespace regkit
