#pragma once

#include <memory>
#include <string>
#include <vector>

#include "regkit/core.hpp"

namespace regkit {

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Edge {
    int type = 0;
    MultiIndex deco;
    MultiIndex over;  // over-decoration, zero when absent
    bool coloured = false;
    NodePtr child;
    std::string key;  // encoding of the edge together with its subtree
};

struct Node {
    MultiIndex deco;
    std::vector<Edge> edges;  // sorted by key
    std::string key;
    int n_edges = 0;  // edges in the subtree below this node
};

/// Editable drawing of a tree: node 0 is the root, edge v is the edge into node v.
struct Flat {
    std::vector<MultiIndex> ndeco;
    std::vector<int> parent;
    std::vector<int> type;
    std::vector<MultiIndex> edeco, over;
    std::vector<char> col;

    int size() const { return static_cast<int>(ndeco.size()); }
    int add(int par, int t, MultiIndex e, MultiIndex n, MultiIndex o, bool c = false);
    std::vector<std::vector<int>> children() const;
    bool above(int v, int anc) const;  // anc is v or an ancestor of v
};

/// Immutable canonical decorated tree. Equality is isomorphism of decorated rooted trees.
class Tree {
public:
    Tree() = default;
    explicit Tree(NodePtr r) : root_(std::move(r)) {}

    static Tree one(int d);
    static Tree monomial(const MultiIndex& k);
    static Tree from_flat(const Flat& f);

    Flat flat() const;
    const Node& root() const { return *root_; }
    const NodePtr& ptr() const { return root_; }
    const std::string& key() const { return root_->key; }
    int dim() const { return static_cast<int>(root_->deco.size()); }
    int n_edges() const { return root_->n_edges; }
    int n_nodes() const { return root_->n_edges + 1; }
    bool valid() const { return static_cast<bool>(root_); }
    bool is_one() const { return n_edges() == 0 && mi_is_zero(root_->deco); }
    bool is_monomial() const { return n_edges() == 0; }
    bool is_planted() const { return root_->edges.size() == 1 && mi_is_zero(root_->deco); }
    bool has_over() const;
    bool has_colour() const;

    friend bool operator<(const Tree& a, const Tree& b) { return a.key() < b.key(); }
    friend bool operator==(const Tree& a, const Tree& b) { return a.key() == b.key(); }
    friend bool operator!=(const Tree& a, const Tree& b) { return !(a == b); }

private:
    NodePtr root_;
};

NodePtr make_node(MultiIndex deco, std::vector<Edge> edges);
Edge make_edge(int type, MultiIndex deco, MultiIndex over, bool coloured, NodePtr child);

Degree degree_affine(const Tree& t, const TypeSet& ts);
Rat degree(const Tree& t, const TypeSet& ts);
int noise_count(const Tree& t, const TypeSet& ts);
void check_types(const Tree& t, const TypeSet& ts);

Tree tree_product(const Tree& a, const Tree& b);
Tree tree_product(const std::vector<Tree>& fs, int d);
Tree plant(const Tree& t, const TypeSet& ts, int type, const MultiIndex& k, const MultiIndex& over = {});
Tree noise(const TypeSet& ts, int type);
Tree with_root_deco(const Tree& t, const MultiIndex& k);

/// Root decoration and planted factors: t = X^k * prod(factors).
std::pair<MultiIndex, std::vector<Tree>> factorise(const Tree& t);
/// For a planted tree I^k(s): (type, k, over, s).
struct Unplanted {
    int type;
    MultiIndex deco, over;
    Tree body;
};
Unplanted unplant(const Tree& t);

/// Cuts of a drawing, each given as a list of edge ids (= child node ids).
std::vector<std::vector<int>> cuts(const Flat& f);
std::vector<std::vector<int>> cuts(const Tree& t);
std::vector<std::vector<int>> cuts_plus(const Flat& f, const TypeSet& ts);

/// Mask of nodes not lying above any edge of the cut (the part tau_{not >= C}).
std::vector<char> lower_part(const Flat& f, const std::vector<int>& cut);
/// Subtree on a root-connected node mask.
Flat restrict_flat(const Flat& f, const std::vector<char>& keep, std::vector<int>* idx = nullptr);
/// Quotient collapsing a root-connected node mask to the root.
Flat quotient_flat(const Flat& f, const std::vector<char>& keep, std::vector<int>* idx = nullptr);
/// Subtree of f hanging above node v (v becomes the root).
Flat subtree_flat(const Flat& f, int v);

Tree colour(const Tree& t, const std::vector<int>& edges);  // edge ids of t.flat()
Tree uncolour(const Tree& t);
Tree strip_over(const Tree& t);
std::vector<char> colour_mask(const Flat& f);  // root-connected check included
Tree contract(const Tree& t);

mpz_class symmetry_factor(const Tree& t);

std::string pretty(const Tree& t, const TypeSet& ts);
json tree_to_json(const Tree& t, const TypeSet& ts);
Tree tree_from_json(const json& j, const TypeSet& ts);

}  // namespace regkit
