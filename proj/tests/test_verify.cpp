#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "regkit/verify.hpp"

using namespace th;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

json read(const std::filesystem::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

/// Positive coproduct of a planted tree by direct enumeration of edge subsets, node splittings and
/// exponent grids.
TensorSum brute_plus(Hopf& h, const Tree& t) {
    const TypeSet& T = h.types();
    TensorSum out;
    Flat f = t.flat();
    int n = f.size();
    for (auto& C : brute_cuts(f)) {
        bool ok = true;
        std::vector<Rat> budget;
        for (int e : C) {
            if (!T.is_kernel(f.type[e])) ok = false;
            Tree s = Tree::from_flat(subtree_flat(f, e));
            Rat b = degree(s, T) + T.deg(f.type[e]) - T.mdeg(f.edeco[e]);
            if (!(b > 0)) ok = false;
            budget.push_back(b);
        }
        if (!ok) continue;
        std::vector<char> keep(n, 1);
        for (int v = 1; v < n; ++v)
            for (int e : C)
                if (f.above(v, e)) keep[v] = 0;
        std::vector<int> idx;
        Flat L = restrict_flat(f, keep, &idx);
        std::vector<int> K;
        for (int v = 0; v < n; ++v)
            if (keep[v]) K.push_back(v);
        std::vector<int> Cv(C.begin(), C.end());
        std::function<void(size_t, Flat, MultiIndex, Rat)> split = [&](size_t i, Flat Lc, MultiIndex rest, Rat c) {
            if (i < K.size()) {
                for_each_leq(f.ndeco[K[i]], [&](const MultiIndex& m) {
                    Flat L2 = Lc;
                    L2.ndeco[idx[K[i]]] = m;
                    split(i + 1, L2, rest + (f.ndeco[K[i]] - m), c * mi_binom(f.ndeco[K[i]], m));
                });
                return;
            }
            std::function<void(size_t, Flat, Tree, Rat)> eps = [&](size_t j, Flat Ll, Tree right, Rat cc) {
                if (j == Cv.size()) {
                    Tree left = Tree::from_flat(Ll);
                    if (h.in_T_plus(left)) add_term(out, std::make_pair(left, right), cc);
                    return;
                }
                int e = Cv[j];
                Tree s = Tree::from_flat(subtree_flat(f, e));
                for (auto& k : mi_below(T.scaling, Rat(12), true)) {
                    if (!(T.mdeg(k) < budget[j])) continue;
                    Flat L2 = Ll;
                    L2.ndeco[idx[f.parent[e]]] = L2.ndeco[idx[f.parent[e]]] + k;
                    eps(j + 1, L2, tree_product(right, plant(s, T, f.type[e], f.edeco[e] + k)), cc / mi_factorial(k));
                }
            };
            eps(0, Lc, Tree::monomial(rest), c);
        };
        split(0, L, mi_zero(T.dim()), Rat(1));
    }
    return out;
}

}  // namespace

TEST_CASE("run configuration") {
    SUBCASE("an empty object keeps every default and says so") {
        RunConfig c = RunConfig::from_json(json::object());
        CHECK(c.to_json() == RunConfig{}.to_json());
        CHECK(std::find(c.defaulted.begin(), c.defaulted.end(), "kappa") != c.defaulted.end());
        CHECK(std::find(c.defaulted.begin(), c.defaulted.end(), "tolerances") != c.defaulted.end());
    }
    SUBCASE("round trip") {
        json j{{"kappa", "1/50"}, {"mc_samples", 400}, {"tolerances", {{"chain", 1e-5}}}, {"gamma0", {"7/2"}}};
        RunConfig c = RunConfig::from_json(j);
        CHECK(c.kappa == Rat(1, 50));
        CHECK(c.t("chain") == 1e-5);
        CHECK(c.t("cocycle") == 1e-8);
        CHECK(std::find(c.defaulted.begin(), c.defaulted.end(), "tolerances.cocycle") != c.defaulted.end());
        RunConfig d = RunConfig::from_json(c.to_json());
        CHECK(d.to_json() == c.to_json());
        CHECK(d.defaulted.empty());
    }
    SUBCASE("misconfiguration") {
        CHECK_THROWS_AS(RunConfig::from_json(json{{"kapa", "1/50"}}), Error);
        CHECK_THROWS_AS(RunConfig::from_json(json{{"mc_samples", 301}}), Error);
        CHECK_THROWS_AS(RunConfig::from_json(json{{"tolerances", {{"nonsense", 1}}}}), Error);
        CHECK_THROWS_AS(RunConfig::from_json(json{{"kappa", 0.01}}), Error);
        CHECK_THROWS_AS(RunConfig::from_json(json::array()), Error);
        CHECK_THROWS_AS(RunConfig{}.t("nonsense"), Error);
    }
}

TEST_CASE("tree lists") {
    auto ts = trees_from_json(json{"I(Xi)^2", tree_to_json(Xi(), th::ts())}, th::ts());
    REQUIRE(ts.size() == 2);
    CHECK(ts[0] == prod({Ip(Xi()), Ip(Xi())}));
    CHECK(ts[1] == Xi());
    CHECK_THROWS_AS(trees_from_json(json{"I(Xi"}, th::ts()), Error);
    CHECK_THROWS_AS(trees_from_json(json(3), th::ts()), Error);
}

TEST_CASE("a corrupted rule file stops the run before any check") {
    auto dir = scratch("regkit_bad_rule");
    std::ofstream(dir / "rule.json") << "{\"types\": [";
    RunConfig c;
    c.rule_path = (dir / "rule.json").string();
    try {
        run_checks(c, {2});
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(e.kind == "parse");
    }
    c.rule_path = (dir / "missing.json").string();
    CHECK_THROWS_AS(run_checks(c, {2}), Error);
}

TEST_CASE("algebraic checks do not depend on kappa inside the subcritical window") {
    auto pass_set = [](Rat kappa) {
        RunConfig c;
        c.kappa = kappa;
        std::vector<bool> p;
        for (auto& r : run_checks(c, {2, 3, 4})) p.push_back(r.pass);
        return p;
    };
    auto base = pass_set(Rat(1, 100));
    CHECK(base == std::vector<bool>{true, true, true});
    CHECK(pass_set(Rat(1, 50)) == base);
    CHECK(pass_set(Rat(3, 100)) == base);
}

TEST_CASE("reports are identical for identical configurations apart from timing") {
    RunConfig c;
    c.mc_samples = 400;
    auto a = report_json(c, run_checks(c, {2, 4, 6}));
    auto b = report_json(c, run_checks(c, {2, 4, 6}));
    CHECK(a.contains("timing"));
    a.erase("timing");
    b.erase("timing");
    CHECK(a.dump() == b.dump());
}

TEST_CASE("tables") {
    RunConfig c;
    c.mc_samples = 200;
    c.hopf_edges = 4;
    c.tilde_edges = 3;
    auto dir = scratch("regkit_tables");
    json idx = emit_tables(c, dir.string());
    for (auto& name : {"trees_by_degree", "coproduct_sizes", "bphz", "kernel_norms", "exponents"}) {
        CHECK(std::filesystem::exists(dir / (std::string(name) + ".csv")));
        CHECK(std::filesystem::exists(dir / (std::string(name) + ".json")));
    }

    SUBCASE("tree counts grow with the caps") {
        std::map<std::pair<std::string, int>, long> total;
        for (auto& row : read(dir / "trees_by_degree.json"))
            total[{row["degree_cap"].get<std::string>(), row["edge_cap"].get<int>()}] += row["count"].get<long>();
        for (auto& [k, v] : total) {
            if (k.second > 1) CHECK(v >= total.at({k.first, k.second - 1}));
            for (auto& [k2, v2] : total)
                if (k2.second == k.second && Rat(k2.first) > Rat(k.first)) CHECK(v2 >= v);
        }
    }
    SUBCASE("positive coproduct sizes agree with an independent enumerator") {
        Hopf h(th::ts());
        int compared = 0;
        for (auto& row : read(dir / "coproduct_sizes.json")) {
            if (row["delta_plus_of_I"].get<int>() < 0) continue;
            Tree t;
            for (auto& u : generate(toy_rule(), c.hopf_degree_cap, c.tilde_edges).trees)
                if (u.key() == row["key"].get<std::string>()) t = u;
            REQUIRE(t.valid());
            Tree p = Ip(t);
            CHECK(brute_plus(h, p).size() == row["delta_plus_of_I"].get<size_t>());
            ++compared;
        }
        CHECK(compared > 10);
    }
    SUBCASE("the heat decomposition carries a certificate for every kernel term") {
        json cert = read(dir / "heat_decomposition.json");
        CHECK(cert.contains("Z"));
        CHECK(cert.contains("E"));
        CHECK(cert["chains"].size() == static_cast<size_t>(c.heat_N + 1));
        for (auto& term : cert["Z"]) CHECK(term.contains("chain"));
        for (auto& term : cert["E"]) CHECK(term.contains("chain"));
        CHECK(idx["heat_decomposition"]["certificate_ok"].get<bool>());
    }
    SUBCASE("the BPHZ table matches the closed form for I(Xi)^2") {
        auto rows = read(dir / "bphz.json");
        REQUIRE(rows.size() >= 1);
        double closed = idx["bphz"]["closed_form_I2"].get<double>();
        for (auto& r : rows)
            if (r["tree"] == "I(Xi)^2") CHECK(std::abs(r["value"].get<double>() + closed) <= 4 * r["se"].get<double>());
    }
}
