#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"

using namespace th;

TEST_CASE("degree of basic trees") {
    CHECK(degree(X(1, 2), ts()) == 4);
    CHECK(degree(Xi(), ts()) == Rat(-5, 2) - Rat(1, 100));
    Tree t = prod({Ip(Xi()), Ip(Xi()), Ip(Xi())});
    CHECK(degree(t, ts()) == 3 * (Rat(-1, 2) - Rat(1, 100)));
    Degree a = degree_affine(t, ts());
    CHECK(a.c0 == Rat(-3, 2));
    CHECK(a.c1 == -3);
}

TEST_CASE("tree product") {
    CHECK(tree_product(X(1, 0), X(0, 2)) == X(1, 2));
    Tree t = Ip(Xi());
    CHECK(tree_product(one(), t) == t);
    Tree a = tree_product(t, X(0, 1)), b = tree_product(X(0, 1), t);
    CHECK(a == b);
    CHECK(a.key() == b.key());
    Tree c = tree_product(tree_product(t, Xi()), X(1, 0));
    Tree d = tree_product(t, tree_product(Xi(), X(1, 0)));
    CHECK(c == d);
}

TEST_CASE("planting") {
    Tree p = Ip(one());
    CHECK(p.is_planted());
    CHECK(p.n_edges() == 1);
    Tree s = prod({Ip(Xi()), X(0, 1)});
    CHECK(degree(Ip(s, {0, 1}), ts()) == degree(s, ts()) + 2 - 1);
    Tree q = Ip(X(1, 1));
    CHECK(q.root().edges[0].child->deco == MultiIndex{1, 1});
    CHECK_THROWS_AS(plant(one(), ts(), XI, z()), Error);
}

TEST_CASE("cut counts") {
    CHECK(cuts(Ip(one())).size() == 2);
    Tree branch = Ip(Ip(one()));
    CHECK(cuts(prod({branch, branch})).size() == 9);
    CHECK(cuts(Ip(Ip(Ip(one())))).size() == 4);
    Tree chain = one();
    for (int n = 1; n <= 6; ++n) {
        chain = Ip(chain);
        CHECK(cuts(chain).size() == static_cast<size_t>(n + 1));
    }
}

TEST_CASE("cuts agree with brute force") {
    std::mt19937 rng(11);
    for (int it = 0; it < 200; ++it) {
        Flat f = random_flat(rng, 6);
        auto mine = cuts(f);
        std::set<std::vector<int>> got;
        for (auto c : mine) {
            std::sort(c.begin(), c.end());
            got.insert(c);
        }
        CHECK(got.size() == mine.size());
        CHECK(got == brute_cuts(f));
    }
}

TEST_CASE("canonical form is relabelling invariant") {
    std::mt19937 rng(5);
    for (int it = 0; it < 1000; ++it) {
        Flat f = random_flat(rng, 10);
        // random relabelling of the non-root nodes, keeping parents before children
        int n = f.size();
        std::vector<int> order(n);
        for (int i = 0; i < n; ++i) order[i] = i;
        std::shuffle(order.begin() + 1, order.end(), rng);
        std::vector<int> pos(n, -1);
        Flat g;
        g.add(-1, -1, {}, f.ndeco[0], {});
        pos[0] = 0;
        std::vector<char> placed(n, 0);
        placed[0] = 1;
        size_t done = 1;
        while (done < static_cast<size_t>(n))
            for (int v : order)
                if (!placed[v] && placed[f.parent[v]]) {
                    pos[v] = g.add(pos[f.parent[v]], f.type[v], f.edeco[v], f.ndeco[v], f.over[v]);
                    placed[v] = 1;
                    ++done;
                }
        Tree a = Tree::from_flat(f), b = Tree::from_flat(g);
        REQUIRE(a == b);
        CHECK(Tree::from_flat(a.flat()) == a);
        // perturbing a decoration changes the class
        Flat h = f;
        int v = std::uniform_int_distribution<int>(0, n - 1)(rng);
        h.ndeco[v][0] += 1;
        CHECK(Tree::from_flat(h) != a);
    }
}

TEST_CASE("degree is additive under products") {
    std::mt19937 rng(8);
    for (int it = 0; it < 300; ++it) {
        Tree a = Tree::from_flat(random_flat(rng, 4)), b = Tree::from_flat(random_flat(rng, 4));
        CHECK(degree(tree_product(a, b), ts()) == degree(a, ts()) + degree(b, ts()));
    }
}

TEST_CASE("contraction") {
    Tree t = prod({Ip(Xi()), X(0, 1)});
    Tree c0 = contract(colour(t, {}));
    CHECK(c0 == t);
    Flat f = t.flat();
    std::vector<int> all;
    for (int v = 1; v < f.size(); ++v) all.push_back(v);
    Tree call = contract(colour(t, all));
    CHECK(call == X(0, 1));

    // I(Xi) I(Xi) with one branch coloured
    Flat g;
    g.add(-1, -1, {}, z(), {});
    int a = g.add(0, I, z(), {0, 1}, {});
    g.add(a, XI, z(), z(), {});
    int b = g.add(0, I, z(), z(), {});
    g.add(b, XI, z(), z(), {});
    g.col[a] = 1;
    g.col[a + 1] = 1;
    Tree col = Tree::from_flat(g);
    CHECK(contract(col) == prod({Ip(Xi()), X(0, 1)}));

    // colour not containing the root is refused
    Flat bad = g;
    bad.col.assign(bad.size(), 0);
    bad.col[a + 1] = 1;
    CHECK_THROWS_AS(Tree::from_flat(bad).has_colour() ? contract(Tree::from_flat(bad)) : Tree(), Error);
}

TEST_CASE("nested contraction equals contraction of the union") {
    std::mt19937 rng(21);
    int tested = 0;
    for (int it = 0; it < 400; ++it) {
        Flat f = random_flat(rng, 5);
        int n = f.size();
        // pick a random root-connected set, then a larger one
        std::vector<char> in1(n, 0), in2(n, 0);
        for (int v = 1; v < n; ++v) {
            bool up = f.parent[v] == 0 || in1[f.parent[v]];
            in1[v] = up && rng() % 2;
        }
        for (int v = 1; v < n; ++v) {
            bool up = f.parent[v] == 0 || in2[f.parent[v]];
            in2[v] = in1[v] || (up && rng() % 2);
        }
        Flat f2 = f;
        for (int v = 1; v < n; ++v) f2.col[v] = in2[v];
        Tree once = contract(Tree::from_flat(f2));
        // after contracting e1, the remaining e2 edges are still root-connected
        Flat g = f;
        for (int v = 1; v < n; ++v) g.col[v] = in1[v];
        std::vector<int> idx;
        std::vector<char> keep(n, 0);
        keep[0] = 1;
        for (int v = 1; v < n; ++v) keep[v] = in1[v];
        Flat q = quotient_flat(f, keep, &idx);
        for (int v = 1; v < n; ++v)
            if (!in1[v]) q.col[idx[v]] = in2[v];
        Tree twice = contract(Tree::from_flat(q));
        CHECK(once == twice);
        CHECK(contract(Tree::from_flat(g)) == Tree::from_flat(quotient_flat(f, keep)));
        ++tested;
    }
    CHECK(tested == 400);
}

TEST_CASE("symmetry factors") {
    CHECK(symmetry_factor(X(2, 1)) == 1);
    CHECK(symmetry_factor(prod({Ip(Xi()), Ip(Xi())})) == 2);
    CHECK(symmetry_factor(prod({Ip(Xi()), Ip(Xi()), Ip(Xi())})) == 6);
    Tree b = prod({Ip(Xi()), Ip(Xi())});
    CHECK(symmetry_factor(prod({Ip(b), Ip(b)})) == 8);
    CHECK(symmetry_factor(prod({Ip(Xi()), Ip(X(0, 1))})) == 1);
}

TEST_CASE("json round trip") {
    std::mt19937 rng(3);
    for (int it = 0; it < 100; ++it) {
        Tree t = Tree::from_flat(random_flat(rng, 6));
        CHECK(tree_from_json(tree_to_json(t, ts()), ts()) == t);
    }
    json bad = json::parse(R"({"root":0,"nodes":[{"deco":[0,0]},{"deco":[0,0]}],"edges":[{"from":0,"to":1,"type":"Q","deco":[0,0]}]})");
    CHECK_THROWS_AS(tree_from_json(bad, ts()), Error);
}
