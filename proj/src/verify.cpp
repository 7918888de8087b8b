#include "regkit/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "regkit/quad.hpp"

namespace regkit {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Rat rat_from_json(const json& j) {
    if (j.is_string()) return Rat(j.get<std::string>());
    if (j.is_number_integer()) return Rat(j.get<long>());
    throw Error("config", "rationals are given as strings like \"1/100\" or as integers");
}

json rat_json(const Rat& q) { return rat_str(q); }

int type_of(const TypeSet& ts, const std::string& name) {
    int t = ts.find(name);
    if (t < 0) throw Error("config", "the checks need a type named " + name);
    return t;
}

}  // namespace

// ---------------------------------------------------------------------------

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    if (!j.is_object()) throw Error("config", "the run configuration must be a JSON object");
    auto take = [&](const char* key, auto& dst) {
        if (j.contains(key))
            dst = j.at(key).get<std::decay_t<decltype(dst)>>();
        else
            c.defaulted.push_back(key);
    };
    auto take_rat = [&](const char* key, Rat& dst) {
        if (j.contains(key))
            dst = rat_from_json(j.at(key));
        else
            c.defaulted.push_back(key);
    };
    static const std::set<std::string> known{
        "rule", "kappa", "hopf_edges", "hopf_degree_cap", "tilde_edges", "gamma0", "coloured_variants",
        "hist_seeds", "age_edges", "grid", "eps_cells", "kernel_first", "kernel_levels", "kernel_order",
        "base_points", "mc_samples", "seed", "field", "heat_N", "heat_r", "s_points", "y_panels", "norm_levels",
        "norm_order", "norm_coarse", "norm_fine", "tolerances"};
    for (auto& [k, v] : j.items())
        if (!known.count(k)) throw Error("config", "unknown configuration key '" + k + "'");
    try {
        take("rule", c.rule_path);
        take_rat("kappa", c.kappa);
        take("hopf_edges", c.hopf_edges);
        take_rat("hopf_degree_cap", c.hopf_degree_cap);
        take("tilde_edges", c.tilde_edges);
        if (j.contains("gamma0")) {
            c.gamma0.clear();
            for (auto& g : j.at("gamma0")) c.gamma0.push_back(rat_from_json(g));
        } else {
            c.defaulted.push_back("gamma0");
        }
        take("coloured_variants", c.coloured_variants);
        take("hist_seeds", c.hist_seeds);
        take("age_edges", c.age_edges);
        if (j.contains("grid"))
            c.grid = GridSpec::from_json(j.at("grid"));
        else
            c.defaulted.push_back("grid");
        take("eps_cells", c.eps_cells);
        take("kernel_first", c.kernel_first);
        take("kernel_levels", c.kernel_levels);
        take("kernel_order", c.kernel_order);
        take("base_points", c.base_points);
        take("mc_samples", c.mc_samples);
        take("seed", c.seed);
        if (j.contains("field")) {
            auto& f = j.at("field");
            c.field_a = f.value("a", c.field_a);
            c.field_b = f.value("b", c.field_b);
            c.field_c = f.value("c", c.field_c);
        } else {
            c.defaulted.push_back("field");
        }
        take("heat_N", c.heat_N);
        take("heat_r", c.heat_r);
        take("s_points", c.s_points);
        take("y_panels", c.y_panels);
        take("norm_levels", c.norm_levels);
        take("norm_order", c.norm_order);
        take("norm_coarse", c.norm_coarse);
        take("norm_fine", c.norm_fine);
        if (j.contains("tolerances")) {
            for (auto& [k, v] : j.at("tolerances").items()) {
                if (!c.tol.count(k)) throw Error("config", "unknown tolerance '" + k + "'");
                c.tol[k] = v.get<double>();
            }
            for (auto& [k, v] : c.tol)
                if (!j.at("tolerances").contains(k)) c.defaulted.push_back("tolerances." + k);
        } else {
            c.defaulted.push_back("tolerances");
        }
    } catch (const json::exception& e) {
        throw Error("config", std::string("malformed configuration: ") + e.what());
    }
    if (c.mc_samples < 2 || c.mc_samples % 2) throw Error("config", "mc_samples must be a positive even number");
    if (c.eps_cells < 1) throw Error("config", "eps_cells must be positive");
    return c;
}

json RunConfig::to_json() const {
    json g = json::array();
    for (auto& q : gamma0) g.push_back(rat_json(q));
    return {{"rule", rule_path},
            {"kappa", rat_json(kappa)},
            {"hopf_edges", hopf_edges},
            {"hopf_degree_cap", rat_json(hopf_degree_cap)},
            {"tilde_edges", tilde_edges},
            {"gamma0", g},
            {"coloured_variants", coloured_variants},
            {"hist_seeds", hist_seeds},
            {"age_edges", age_edges},
            {"grid", grid.to_json()},
            {"eps_cells", eps_cells},
            {"kernel_first", kernel_first},
            {"kernel_levels", kernel_levels},
            {"kernel_order", kernel_order},
            {"base_points", base_points},
            {"mc_samples", mc_samples},
            {"seed", seed},
            {"field", {{"a", field_a}, {"b", field_b}, {"c", field_c}}},
            {"heat_N", heat_N},
            {"heat_r", heat_r},
            {"s_points", s_points},
            {"y_panels", y_panels},
            {"norm_levels", norm_levels},
            {"norm_order", norm_order},
            {"norm_coarse", norm_coarse},
            {"norm_fine", norm_fine},
            {"tolerances", tol}};
}

Rule RunConfig::rule() const {
    if (rule_path.empty()) return toy_rule(kappa);
    std::ifstream in(rule_path);
    if (!in) throw Error("config", "cannot open rule file " + rule_path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error("parse", "rule file " + rule_path + ": " + e.what());
    }
    return Rule::from_json(j);
}

double RunConfig::t(const std::string& key) const {
    auto it = tol.find(key);
    if (it == tol.end()) throw Error("config", "no tolerance named " + key);
    return it->second;
}

json to_json(const CheckResult& r) {
    return {{"id", r.id},         {"name", r.name},       {"pass", r.pass},    {"measured", r.measured},
            {"tolerance", r.tolerance}, {"seconds", r.seconds}, {"detail", r.detail}};
}

std::string summary_line(const CheckResult& r) {
    std::ostringstream o;
    o << (r.pass ? "PASS" : "FAIL") << " [" << r.id << "] " << r.name << "  measured=" << full(r.measured)
      << " tol=" << full(r.tolerance) << " (" << std::round(r.seconds * 10) / 10 << " s)";
    return o.str();
}

std::shared_ptr<const GridKernel> config_kernel(const RunConfig& c) {
    return GridKernel::truncated_heat(c.grid.hx, c.kernel_first, c.kernel_levels, c.kernel_order);
}

Tree toy_tree(const TypeSet& ts, const std::string& name) {
    int I = type_of(ts, "I"), Xi = type_of(ts, "Xi");
    int d = ts.dim();
    Tree xi = noise(ts, Xi);
    Tree ixi = plant(xi, ts, I, mi_zero(d));
    if (name == "Xi") return xi;
    if (name == "I(Xi)") return ixi;
    if (name == "I(Xi)^2") return tree_product({ixi, ixi}, d);
    if (name == "I(Xi)^3") return tree_product({ixi, ixi, ixi}, d);
    if (name == "I(I(Xi))") return plant(ixi, ts, I, mi_zero(d));
    if (name == "X_x I(Xi)^2") return tree_product({ixi, ixi, Tree::monomial(mi_unit(d, d - 1))}, d);
    throw Error("config", "unknown toy tree " + name);
}

std::vector<Tree> trees_from_json(const json& j, const TypeSet& ts) {
    std::vector<Tree> out;
    auto one = [&](const json& e) {
        if (e.is_string()) return toy_tree(ts, e.get<std::string>());
        if (e.is_object()) return tree_from_json(e, ts);
        throw Error("parse", "a tree is a JSON object or a toy tree name");
    };
    try {
        if (j.is_array())
            for (auto& e : j) out.push_back(one(e));
        else
            out.push_back(one(j));
    } catch (const json::exception& e) {
        throw Error("parse", std::string("malformed tree: ") + e.what());
    }
    return out;
}

// ---------------------------------------------------------------------------
// algebra

CheckResult check_hopf_suite(const RunConfig& c) {
    auto t0 = Clock::now();
    CheckResult r{1, "Hopf suite"};
    Rule rule = c.rule();
    const TypeSet& ts = rule.ts;
    Hopf h(ts);
    auto u = generate(rule, c.hopf_degree_cap, c.hopf_edges);
    int d = ts.dim();

    int comodule = 0, counit = 0, coassoc = 0, antipode = 0, mult = 0, checked = 0;
    for (auto& t : u.trees) {
        auto D = h.delta(t);
        if (counit_right(D) != single(t)) ++counit;
        if (apply_left(D, [&](const Tree& a) { return h.delta(a); }) !=
            apply_right(D, [&](const Tree& b) { return h.delta_plus(b); }))
            ++comodule;
    }
    // Hopf laws on the planted generators and monomials; multiplicativity on their pairwise products
    std::vector<Tree> gens;
    for (int k = 0; k < d; ++k) gens.push_back(Tree::monomial(mi_unit(d, k)));
    for (auto& t : u.trees) {
        if (t.n_edges() + 1 > c.hopf_edges) continue;
        for (int ty = 0; ty < ts.size(); ++ty) {
            if (!ts.is_kernel(ty)) continue;
            for (auto& k : mi_below(ts.scaling, c.hopf_degree_cap, true)) {
                Tree p = plant(t, ts, ty, k);
                if (h.positive_planted(p)) gens.push_back(p);
            }
        }
    }
    int products = 0;
    for (size_t i = 0; i < gens.size(); ++i)
        for (size_t j = i; j < gens.size(); ++j)
            if (gens[i].n_edges() + gens[j].n_edges() <= c.hopf_edges) {
                Tree p = tree_product(gens[i], gens[j]);
                ++products;
                if (h.delta_plus(p) != tensor_product(h.delta_plus(gens[i]), h.delta_plus(gens[j]))) ++mult;
            }
    for (auto& p : gens) {
        ++checked;
        auto D = h.delta_plus(p);
        if (counit_right(D) != single(p) || counit_left(D) != single(p)) ++counit;
        if (apply_left(D, [&](const Tree& a) { return h.delta_plus(a); }) !=
            apply_right(D, [&](const Tree& b) { return h.delta_plus(b); }))
            ++coassoc;
        FormalSum m1, m2;
        for (auto& [q, co] : D) {
            add_into(m1, product(single(q.first), h.antipode(q.second)), co);
            add_into(m2, product(h.antipode(q.first), single(q.second)), co);
        }
        if (!m1.empty() || !m2.empty()) ++antipode;
    }
    int fails = comodule + counit + coassoc + antipode + mult;
    r.seconds = since(t0);
    r.measured = fails;
    r.tolerance = 0;
    r.detail = {{"trees", u.trees.size()},    {"positive_generators", checked}, {"products", products}, {"comodule_failures", comodule},
                {"counit_failures", counit},  {"coassociativity_failures", coassoc},
                {"antipode_failures", antipode}, {"multiplicativity_failures", mult},
                {"time_budget", c.t("time_hopf")}};
    r.pass = fails == 0 && u.trees.size() >= 100 && r.seconds <= c.t("time_hopf");
    return r;
}

CheckResult check_cointeraction(const RunConfig& c) {
    auto t0 = Clock::now();
    CheckResult r{2, "Cointeraction"};
    Rule rule = c.rule();
    Hopf h(rule.ts);
    auto u = generate(rule, c.hopf_degree_cap, c.hopf_edges);
    int fails = 0;
    for (auto& t : u.trees) {
        auto lhs = apply_left(h.delta(t), [&](const Tree& a) { return h.delta_r_minus(a); });
        auto rhs = apply_right(h.delta_r_minus(t), [&](const Tree& b) { return h.delta(b); });
        if (lhs != rhs) ++fails;
    }
    r.seconds = since(t0);
    r.measured = fails;
    r.detail = {{"trees", u.trees.size()}};
    r.pass = fails == 0;
    return r;
}

CheckResult check_delta_tilde(const RunConfig& c) {
    auto t0 = Clock::now();
    CheckResult r{3, "Variable-coefficient coproduct"};
    Rule rule = c.rule();
    Hopf h(rule.ts);
    History H(rule, h);
    std::vector<Tree> seed;
    for (auto& t : generate(rule, Rat(1), c.tilde_edges).trees)
        if (t.n_edges() >= c.tilde_edges - 1) seed.push_back(t);
    auto B = H.hist(seed).trees;
    int mismatches = 0, used = 0;
    json per = json::array();
    for (auto& g0 : c.gamma0) {
        auto g = gamma_data(h, B, g0);
        bool ok = inadmissible(h, B, g).empty();
        int bad = 0;
        if (ok) {
            ++used;
            for (auto& t : B)
                if (h.delta_tilde(t, g) != h.delta_tilde_explicit(t, g)) ++bad;
        }
        mismatches += bad;
        per.push_back({{"gamma0", rat_str(g0)}, {"admissible", ok}, {"mismatches", bad}});
    }
    // contraction of coloured variants
    auto g = gamma_data(h, B, c.gamma0.at(0));
    int variants = 0, contraction_fail = 0;
    for (auto& t : B) {
        if (variants >= c.coloured_variants) break;
        Flat f = t.flat();
        int m = f.size();
        for (int mask = 1; mask < (1 << (m - 1)) && variants < c.coloured_variants; ++mask) {
            Flat col = f;
            bool ok = true;
            for (int v = 1; v < m; ++v) {
                col.col[v] = (mask >> (v - 1)) & 1;
                if (col.col[v] && f.parent[v] != 0 && !col.col[f.parent[v]]) ok = false;
            }
            if (!ok) continue;
            Tree ct = Tree::from_flat(col);
            TensorSum lhs;
            for (auto& [p, co] : h.delta_tilde_explicit(ct, g)) add_term(lhs, std::make_pair(contract(p.first), p.second), co);
            if (lhs != h.delta_tilde(contract(ct), g)) ++contraction_fail;
            ++variants;
        }
    }
    r.seconds = since(t0);
    r.measured = mismatches + contraction_fail;
    r.detail = {{"sector_size", B.size()}, {"gamma0", per}, {"coloured_variants", variants},
                {"contraction_failures", contraction_fail}};
    r.pass = mismatches == 0 && contraction_fail == 0 && used == static_cast<int>(c.gamma0.size()) &&
             variants >= c.coloured_variants;
    return r;
}

CheckResult check_hist_age(const RunConfig& c) {
    auto t0 = Clock::now();
    CheckResult r{4, "Hist and Age"};
    Rule rule = c.rule();
    Hopf h(rule.ts);
    History H(rule, h);
    auto u = generate(rule, Rat(2), c.age_edges).trees;
    std::mt19937 rng(static_cast<unsigned>(c.seed));
    int hist_fail = 0, max_size = 0;
    for (int it = 0; it < c.hist_seeds; ++it) {
        std::vector<Tree> seed;
        int n = 1 + static_cast<int>(rng() % 3);
        for (int i = 0; i < n; ++i) seed.push_back(u[rng() % u.size()]);
        auto a = H.hist(seed);
        max_size = std::max(max_size, static_cast<int>(a.trees.size()));
        if (H.hist(a.trees).trees != a.trees || !is_good(a.trees)) ++hist_fail;
    }
    int age_fail = 0, relations = 0;
    for (auto& t : u) {
        int a = H.age(t);
        auto below = [&](const Tree& s) {
            ++relations;
            if (H.age(s) >= a) ++age_fail;
        };
        if (t.is_planted()) below(Tree(t.root().edges[0].child));
        for (auto& f : product_divisors(t))
            if (f != t) below(f);
        for (auto& [p, co] : h.delta_r_minus_ring(t)) {
            if (strongly_conforms(p.first, rule)) below(p.first);
            if (strongly_conforms(p.second, rule)) below(p.second);
        }
    }
    r.seconds = since(t0);
    r.measured = hist_fail + age_fail;
    r.detail = {{"seeds", c.hist_seeds}, {"largest_hist", max_size}, {"hist_failures", hist_fail},
                {"universe", u.size()},  {"age_relations", relations}, {"age_failures", age_fail}};
    r.pass = hist_fail == 0 && age_fail == 0;
    return r;
}

// ---------------------------------------------------------------------------
// models

namespace {

struct ToySetup {
    Rule rule;
    Hopf h;
    History H;
    int I, Xi;
    std::shared_ptr<const GridKernel> K;
    explicit ToySetup(const RunConfig& c)
        : rule(c.rule()), h(rule.ts), H(rule, h), I(type_of(rule.ts, "I")), Xi(type_of(rule.ts, "Xi")),
          K(config_kernel(c)) {}
};

MonteCarloOptions mc_options(const RunConfig& c, std::uint64_t seed) {
    MonteCarloOptions o;
    o.samples = c.mc_samples;
    o.seed = seed;
    o.eps = c.eps_cells * c.grid.hx;
    return o;
}

}  // namespace

CheckResult check_model_axioms(const RunConfig& c) {
    auto t0 = Clock::now();
    CheckResult r{5, "Model axioms"};
    ToySetup S(c);
    const TypeSet& ts = S.rule.ts;
    auto B = S.H.hist({toy_tree(ts, "I(Xi)^3"), toy_tree(ts, "I(I(Xi))")}).trees;
    GridField xi = smooth_noise(c.grid, c.eps_cells * c.grid.hx, c.seed);

    MonteCarloOracle oracle(S.h, {{S.I, S.K}}, B, mc_options(c, c.seed));
    Functional<double> ell = bphz_functional(S.H, B, oracle);

    json models = json::array();
    double chain = 0, cocycle = 0;
    for (int which = 0; which < 2; ++which) {
        Model m(S.H, B, {{S.I, S.K}}, {{S.Xi, xi}}, which ? ell : Functional<double>{}, c.base_points);
        ChainReport ch = check_chain(m);
        double co = check_cocycle(m);
        chain = std::max(chain, ch.defect);
        cocycle = std::max(cocycle, co);
        models.push_back({{"model", which ? "bphz" : "canonical"}, {"chain_defect", ch.defect},
                          {"worst_tree", ch.worst}, {"pairs", ch.pairs}, {"cocycle_defect", co}});
    }
    r.seconds = since(t0);
    r.measured = chain;
    r.tolerance = c.t("chain");
    r.detail = {{"sector_size", B.size()},
                {"grid", c.grid.to_json()},
                {"eps_cells", c.eps_cells},
                {"preparation", functional_to_json(ell, ts)},
                {"models", models},
                {"chain_defect", chain},
                {"cocycle_defect", cocycle},
                {"cocycle_tolerance", c.t("cocycle")},
                {"time_budget", c.t("time_models")}};
    r.pass = chain <= c.t("chain") && cocycle <= c.t("cocycle") && r.seconds <= c.t("time_models");
    return r;
}

CheckResult check_bphz_centering(const RunConfig& c) {
    auto t0 = Clock::now();
    CheckResult r{6, "BPHZ centering"};
    ToySetup S(c);
    const TypeSet& ts = S.rule.ts;
    auto B = S.H.hist({toy_tree(ts, "I(Xi)^3")}).trees;
    MonteCarloOracle A(S.h, {{S.I, S.K}}, B, mc_options(c, c.seed));
    MonteCarloOracle Bo(S.h, {{S.I, S.K}}, B, mc_options(c, c.seed + 1000003));
    Functional<double> ell = bphz_functional(S.H, B, A);
    double k = c.t("centering_se");

    json trees = json::array();
    bool ok = true;
    double worst = 0;
    for (auto& t : B) {
        if (!(degree(t, ts) < 0)) continue;
        Estimate e = Bo.estimate_prepared(t, ell);
        double se_ell = must_vanish(t, ts) ? 0 : A.estimate_times(t, ell).se;
        double se = std::sqrt(e.se * e.se + se_ell * se_ell);
        bool pass = std::abs(e.mean) <= k * se;
        ok = ok && pass;
        double z = se > 0 ? std::abs(e.mean) / se : (e.mean == 0 ? 0 : INFINITY);
        worst = std::max(worst, z);
        trees.push_back({{"tree", tree_to_json(t, ts)}, {"degree", rat_str(degree(t, ts))}, {"mean", e.mean},
                         {"se", se}, {"pass", pass}});
    }
    Tree i2 = toy_tree(ts, "I(Xi)^2");
    double closed = A.second_moment_closed_form();
    double l2 = ell.count(i2) ? ell.at(i2) : 0;
    double se2 = A.estimate_times(i2, {}).se;
    bool closed_ok = std::abs(l2 + closed) <= k * se2;
    r.seconds = since(t0);
    r.measured = worst;
    r.tolerance = k;
    r.detail = {{"samples", c.mc_samples},
                {"negative_trees", trees},
                {"ell_I2", l2},
                {"closed_form", closed},
                {"se_I2", se2},
                {"closed_form_pass", closed_ok},
                {"preparation", functional_to_json(ell, ts)}};
    r.pass = ok && closed_ok;
    return r;
}

// ---------------------------------------------------------------------------
// heat kernel

CheckResult check_heat_suite(const RunConfig& c) {
    auto t0 = Clock::now();
    CheckResult r{7, "Heat-kernel suite"};
    json det;
    bool ok = true;

    // (a) constant coefficients
    auto cc = CoefficientField::constant(0.9);
    Volterra G(cc, c.heat_N);
    int exact_fail = 0;
    for (Point z : {Point{0.2, 0.1}, Point{1.0, -2.0}, Point{0.05, 0.3}}) {
        double W = std::exp(-z[1] * z[1] / (4 * 0.9 * z[0])) / std::sqrt(4 * M_PI * 0.9 * z[0]);
        if (G(z, {0, 0}) != W) ++exact_fail;
    }
    double mass_err = 0;
    for (double t : {0.01, 0.5, 2.0})
        mass_err = std::max(mass_err, std::abs(integrate_line([&](double x) { return frozen_gaussian(cc, {0, 0}, {t, x}); }) - 1));
    bool a_ok = exact_fail == 0 && mass_err <= c.t("heat_mass");
    det["constant"] = {{"exact_failures", exact_fail}, {"mass_error", mass_err}, {"pass", a_ok}};

    // (b) convolution against direct quadrature
    auto f = CoefficientField::symbolic(c.field_a, c.field_b, c.field_c);
    auto Z = z_calc(f), mE = e_calc(f).scaled(-1);
    double conv_err = 0;
    Point z{0.35, 0.4}, zb{0.1, -0.1};
    for (auto [F, H] : {std::pair{Z, Z}, std::pair{Z, mE}, std::pair{mE, Z}}) {
        double dct = direct_convolve(F, H, z, zb);
        conv_err = std::max(conv_err, std::abs(heat_convolve(F, H)(z, zb) - dct) / std::abs(dct));
    }
    bool b_ok = conv_err <= c.t("heat_convolve");
    det["convolution"] = {{"relative_error", conv_err}, {"pass", b_ok}};

    // (c) telescoping residual
    VolterraOptions vo;
    vo.quad.s_points = c.s_points;
    vo.quad.y_panels = c.y_panels;
    Volterra V(f, c.heat_N, vo);
    auto EN = V.error_power(c.heat_N + 1);
    double tele = 0;
    for (Point p : {Point{0.3, 0.2}, Point{0.2, -0.3}, Point{0.5, 0.1}}) {
        double LG = apply_operator_fd(f, [&](const Point& q) { return V(q, {0, 0}); }, p, 2e-3);
        double e = EN(p, {0, 0});
        tele = std::max(tele, std::abs(LG + e) / std::abs(e));
    }
    bool c_ok = !V.partial() && tele <= c.t("telescoping");
    det["telescoping"] = {{"relative_residual", tele}, {"N", c.heat_N}, {"partial", V.partial()}, {"pass", c_ok}};

    // (d) scaling exponents
    double tol = c.t("exponent");
    json fits = json::array();
    bool d_ok = true;
    double worst_dev = 0;
    auto fit_of = [&](const std::function<double(const Point&)>& F, const Point& base, int n0, int n1) {
        std::vector<double> hs, sups;
        for (int n = n0; n <= n1; n += 2) {
            double h = std::pow(2.0, -n), s = 0;
            for (double v = -2; v <= 2; v += 0.5) s = std::max(s, std::abs(F({base[0] + h, base[1] + std::sqrt(h) * v})));
            hs.push_back(h);
            sups.push_back(s);
        }
        return loglog_fit(hs, sups).slope;
    };
    Point b0{0.05, 0.1};
    {
        double s = fit_of([&](const Point& p) { return error_kernel(f, p, b0); }, b0, 6, 14);
        double pred = (1.0 - 1 - 2) / 2;
        worst_dev = std::max(worst_dev, std::abs(s - pred));
        d_ok = d_ok && std::abs(s - pred) <= tol;
        fits.push_back({{"kernel", "E"}, {"slope", s}, {"predicted", pred}});
    }
    for (int k = 1; k <= std::min(c.heat_N, V.computed_terms()); ++k) {
        double s = fit_of([&](const Point& p) { return V.summand(k)(p, b0); }, b0, 4, 10);
        double pred = ((2.0 + k) - 1 - 2) / 2;
        worst_dev = std::max(worst_dev, std::abs(s - pred));
        d_ok = d_ok && std::abs(s - pred) <= tol;
        fits.push_back({{"kernel", "Z*(-E)^" + std::to_string(k)}, {"slope", s}, {"predicted", pred}});
    }
    det["exponents"] = {{"fits", fits}, {"pass", d_ok}};

    r.seconds = since(t0);
    ok = a_ok && b_ok && c_ok && d_ok && r.seconds <= c.t("time_heat");
    det["time_budget"] = c.t("time_heat");
    r.measured = tele;
    r.tolerance = c.t("telescoping");
    r.detail = det;
    r.pass = ok;
    return r;
}

CheckResult check_locality(const RunConfig& c) {
    auto t0 = Clock::now();
    CheckResult r{8, "Locality and Taylor reassembly"};
    GreenOptions go{c.heat_r, 1, c.heat_N, 12};
    Point z0{0.1, 0.2};
    auto f1 = CoefficientField::symbolic(c.field_a, c.field_b, "0");
    // the added term vanishes to order r at z0 in the scaled sense
    auto f2 = CoefficientField::symbolic("(" + c.field_a + ") + 0.1*((x - 0.2)^4 + (t - 0.1)^2)*cos(3*x)", c.field_b, "0");
    GreenDecomposition K1(f1, go), K2(f2, go);
    double loc = 0;
    for (Point zeta : {Point{0.01, 0.05}, Point{0.1, -0.2}, Point{0.3, 0.4}, Point{0.05, 0.0}})
        loc = std::max(loc, std::abs(K1.K(z0, zeta) - K2.K(z0, zeta)));
    std::string why;
    bool cert = certificate_ok(K1.certificate(), c.heat_r, &why) && certificate_ok(K2.certificate(), c.heat_r);

    auto f = CoefficientField::symbolic(c.field_a, c.field_b, c.field_c);
    TaylorZ TZ(f, 2);
    TaylorE TE(f, c.heat_r);
    std::mt19937 rng(static_cast<unsigned>(c.seed));
    std::uniform_real_distribution<double> U(-1, 1);
    double zres = 0, eres = 0;
    int n = 0;
    while (n < 50) {
        Point w{0.2 * U(rng), U(rng)};
        Point zb{w[0] + 0.01 * U(rng), w[1] + 0.1 * U(rng)};
        if (Scaling::parabolic(1).norm({zb[0] - w[0], zb[1] - w[1]}) > 0.1) continue;
        Point z{zb[0] + 0.02 + 0.2 * std::abs(U(rng)), zb[1] + 0.5 * U(rng)};
        double rem = 0;
        for (double v : TZ.remainder_terms(w, z, zb)) rem += v;
        zres = std::max(zres, std::abs(z_kernel(f, z, zb) - TZ.jet_part(w, z, zb) - rem));
        auto s = TE.sample(w, z, zb);
        eres = std::max(eres, std::abs(s.direct - s.jet_part - s.remainder));
        ++n;
    }
    r.seconds = since(t0);
    r.measured = loc;
    r.tolerance = c.t("locality");
    r.detail = {{"locality_difference", loc},
                {"certificates_ok", cert},
                {"certificate_message", why},
                {"z_reassembly", zres},
                {"e_reassembly", eres},
                {"triples", n},
                {"reassembly_tolerance", c.t("taylor_reassembly")}};
    r.pass = loc <= c.t("locality") && cert && zres <= c.t("taylor_reassembly") && eres <= c.t("taylor_reassembly");
    return r;
}

CheckResult check_aniso_taylor(const RunConfig& c) {
    auto t0 = Clock::now();
    CheckResult r{9, "Anisotropic Taylor"};
    Scaling s = Scaling::parabolic(1);
    std::vector<MultiIndex> B{{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}};
    std::mt19937 rng(static_cast<unsigned>(c.seed));
    std::uniform_real_distribution<double> u(-1, 1);
    double exact = 0;
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> co(B.size());
        for (auto& v : co) v = 3 * u(rng);
        JetFn poly = [B, co](const std::vector<Jet>& z) {
            Jet acc(z[0].nvars(), z[0].order(), 0);
            for (size_t i = 0; i < B.size(); ++i) {
                Jet m(z[0].nvars(), z[0].order(), co[i]);
                for (int a = 0; a < B[i][0]; ++a) m = m * z[0];
                for (int a = 0; a < B[i][1]; ++a) m = m * z[1];
                acc += m;
            }
            return acc;
        };
        AnisoTaylor T(poly, B);
        for (int i = 0; i < 40; ++i) {
            Point x{u(rng), u(rng)};
            exact = std::max(exact, std::abs(T.remainder(x)));
        }
    }
    auto g = [](const std::vector<Jet>& z) { return sin(z[0] + z[1]); };
    auto A = s.indices_below(2, true);
    AnisoTaylor T(g, A);
    int predicted = 1 << 20;
    for (auto& k : boundary_set(A)) predicted = std::min(predicted, s.degree(k));
    std::vector<double> hs, sups;
    for (int j = 3; j <= 9; ++j) {
        double h = std::exp2(-j), sup = 0;
        for (int i = 0; i < 64; ++i) {
            double th = 2 * M_PI * i / 64;
            double cc = std::cos(th), ss = std::sin(th);
            double q = std::pow(cc * cc * cc * cc + ss * ss * ss * ss, 0.25);
            Point z{h * h * (cc / q) * std::abs(cc / q), h * ss / q};
            sup = std::max(sup, std::abs(T.remainder(z)));
        }
        hs.push_back(h);
        sups.push_back(sup);
    }
    double slope = loglog_fit(hs, sups).slope;
    r.seconds = since(t0);
    r.measured = exact;
    r.tolerance = c.t("taylor_exact");
    r.detail = {{"polynomial_remainder", exact}, {"sin_slope", slope}, {"predicted", predicted},
                {"exponent_tolerance", c.t("exponent")}};
    r.pass = exact <= c.t("taylor_exact") && std::abs(slope - predicted) <= c.t("exponent");
    return r;
}

CheckResult check_kernel_norms(const RunConfig& c) {
    auto t0 = Clock::now();
    CheckResult r{10, "Kernel norms"};
    Scaling s = Scaling::parabolic(1);
    Cutoff cut(s);
    auto G = heat_kernel(1);
    auto K = dyadic_decompose(G, cut, 10, Rat(2), 1);
    std::mt19937 rng(static_cast<unsigned>(c.seed));
    std::uniform_real_distribution<double> u(0, 1);
    double reasm = 0;
    for (int i = 0; i < 300; ++i) {
        Point z{u(rng) * 0.5, u(rng) - 0.5};
        double g = value_at(G, z);
        reasm = std::max(reasm, std::abs(K.reassemble(z) - g) / std::max(1.0, std::abs(g)));
    }
    auto Kn = dyadic_decompose(G, cut, c.norm_levels, Rat(2), c.norm_order);
    NormOptions coarse, fine;
    coarse.resolution = c.norm_coarse;
    fine.resolution = c.norm_fine;
    double nc = kernel_norm(Kn, coarse).value, nf = kernel_norm(Kn, fine).value;
    double drift = std::abs(nc - nf) / std::abs(nf);
    r.seconds = since(t0);
    r.measured = drift;
    r.tolerance = c.t("norm_refinement");
    r.detail = {{"reassembly", reasm}, {"norm_coarse", nc}, {"norm_fine", nf}, {"order", c.norm_order},
                {"beta", 2}, {"reassembly_tolerance", c.t("dyadic_reassembly")}};
    r.pass = reasm <= c.t("dyadic_reassembly") && std::isfinite(nf) && drift <= c.t("norm_refinement");
    return r;
}

std::vector<CheckResult> run_checks(const RunConfig& c, const std::vector<int>& which) {
    using Fn = CheckResult (*)(const RunConfig&);
    static const char* names[] = {"Hopf suite", "Cointeraction", "Variable-coefficient coproduct", "Hist and Age",
                                  "Model axioms", "BPHZ centering", "Heat-kernel suite",
                                  "Locality and Taylor reassembly", "Anisotropic Taylor", "Kernel norms"};
    static const Fn all[] = {check_hopf_suite,    check_cointeraction, check_delta_tilde, check_hist_age,
                             check_model_axioms,  check_bphz_centering, check_heat_suite, check_locality,
                             check_aniso_taylor,  check_kernel_norms};
    (void)c.rule();  // a broken rule file stops the run before any check starts
    std::vector<CheckResult> out;
    for (int i = 1; i <= 10; ++i) {
        if (!which.empty() && std::find(which.begin(), which.end(), i) == which.end()) continue;
        try {
            out.push_back(all[i - 1](c));
        } catch (const Error& e) {
            CheckResult r{i, names[i - 1]};
            r.detail = {{"error", e.what()}};
            out.push_back(r);
        }
    }
    return out;
}

json report_json(const RunConfig& c, const std::vector<CheckResult>& results) {
    json checks = json::array(), seconds = json::object();
    bool all = true;
    for (auto& r : results) {
        json e = to_json(r);
        e.erase("seconds");
        checks.push_back(e);
        seconds[std::to_string(r.id)] = r.seconds;
        all = all && r.pass;
    }
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return {{"config", c.to_json()},
            {"pass", all},
            {"checks", checks},
            {"timing", {{"generated_at", stamp}, {"seconds", seconds}}}};
}

// ---------------------------------------------------------------------------
// tables

namespace {

void write_table(const std::filesystem::path& dir, const std::string& name, const std::vector<std::string>& cols,
                 const std::vector<std::vector<json>>& rows, json& index) {
    json arr = json::array();
    std::ofstream csv(dir / (name + ".csv"));
    for (size_t i = 0; i < cols.size(); ++i) csv << (i ? "," : "") << cols[i];
    csv << "\n";
    for (auto& row : rows) {
        json o;
        for (size_t i = 0; i < cols.size(); ++i) {
            o[cols[i]] = row[i];
            csv << (i ? "," : "");
            if (row[i].is_number_float())
                csv << full(row[i].get<double>());
            else if (row[i].is_string())
                csv << '"' << row[i].get<std::string>() << '"';
            else
                csv << row[i].dump();
        }
        csv << "\n";
        arr.push_back(o);
    }
    std::ofstream(dir / (name + ".json")) << arr.dump(2) << "\n";
    index[name] = {{"rows", rows.size()}, {"files", {name + ".json", name + ".csv"}}};
}

}  // namespace

json emit_tables(const RunConfig& c, const std::string& dir_name) {
    std::filesystem::path dir(dir_name);
    std::filesystem::create_directories(dir);
    json index = json::object();
    ToySetup S(c);
    const TypeSet& ts = S.rule.ts;

    // tree inventories
    {
        std::vector<std::vector<json>> rows;
        std::set<Rat> caps{Rat(0), Rat(1), c.hopf_degree_cap};
        for (auto& cap : caps)
            for (int e = 1; e <= c.hopf_edges; ++e)
                for (auto& [deg, ts_] : generate(S.rule, cap, e).by_degree(ts))
                    rows.push_back({rat_str(cap), e, rat_str(deg), ts_.size()});
        write_table(dir, "trees_by_degree", {"degree_cap", "edge_cap", "degree", "count"}, rows, index);
    }

    // coproduct sizes
    {
        std::vector<std::vector<json>> rows;
        for (auto& t : generate(S.rule, c.hopf_degree_cap, c.tilde_edges).trees) {
            int plus = -1;
            Tree p = plant(t, ts, S.I, mi_zero(ts.dim()));
            if (S.h.positive_planted(p)) plus = static_cast<int>(S.h.delta_plus(p).size());
            rows.push_back({t.key(), pretty(t, ts), rat_str(degree(t, ts)), S.h.delta(t).size(),
                            S.h.delta_r_minus(t).size(), plus});
        }
        write_table(dir, "coproduct_sizes", {"key", "tree", "degree", "delta", "delta_r_minus", "delta_plus_of_I"},
                    rows, index);
    }

    // BPHZ functional
    {
        auto B = S.H.hist({toy_tree(ts, "I(Xi)^3"), toy_tree(ts, "I(I(Xi))")}).trees;
        MonteCarloOracle oracle(S.h, {{S.I, S.K}}, B, mc_options(c, c.seed));
        Functional<double> ell = bphz_functional(S.H, B, oracle);
        std::vector<std::vector<json>> rows;
        for (auto& [t, v] : ell)
            rows.push_back({t.key(), pretty(t, ts), rat_str(degree(t, ts)), v, oracle.estimate_times(t, ell).se});
        write_table(dir, "bphz", {"key", "tree", "degree", "value", "se"}, rows, index);
        index["bphz"]["closed_form_I2"] = oracle.second_moment_closed_form();
    }

    // kernel norms
    {
        auto K = dyadic_decompose(heat_kernel(1), Cutoff(Scaling::parabolic(1)), c.norm_levels, Rat(2), c.norm_order);
        std::vector<std::vector<json>> rows;
        for (int res : {c.norm_coarse, c.norm_fine}) {
            NormOptions o;
            o.resolution = res;
            NormReport n = kernel_norm(K, o);
            for (size_t l = 0; l < n.per_level.size(); ++l)
                rows.push_back({c.norm_order, res, static_cast<int>(l), n.per_level[l], n.value, n.mode});
        }
        write_table(dir, "kernel_norms", {"order", "resolution", "level", "level_value", "norm", "mode"}, rows, index);
    }

    // fitted recentering exponents, on a grid with a long time axis
    {
        GridSpec g = c.grid;
        g.nt *= 4;
        g.nx = std::max(8, g.nx / 2);
        std::vector<double> lambdas;
        for (double l = 0.5; l >= 4 * g.hx; l /= 2) lambdas.push_back(l);
        int d = ts.dim();
        std::vector<Tree> seed{Tree::monomial(mi_unit(d, 0)), Tree::monomial(mi_unit(d, 1)),
                               Tree::monomial(mi_unit(d, 1) + mi_unit(d, 1)), toy_tree(ts, "I(I(Xi))")};
        auto B = S.H.hist(seed).trees;
        Model m(S.H, B, {{S.I, S.K}}, {{S.Xi, smooth_noise(g, c.eps_cells * g.hx, c.seed)}}, {},
                {{g.nt / 2, g.nx / 2}});
        std::vector<std::vector<json>> rows;
        for (auto& t : seed) {
            ExponentFit f = recentering_exponent(m, 0, t, lambdas);
            rows.push_back({t.key(), pretty(t, ts), rat_str(degree(t, ts)), f.slope, f.residual});
        }
        write_table(dir, "exponents", {"key", "tree", "degree", "slope", "residual"}, rows, index);
        index["exponents"]["lambdas"] = lambdas;
    }

    // heat decomposition summary
    {
        auto f = CoefficientField::symbolic(c.field_a, c.field_b, c.field_c);
        GreenDecomposition G(f, GreenOptions{c.heat_r, 1, c.heat_N, 12});
        json cert = G.certificate();
        std::ofstream(dir / "heat_decomposition.json") << cert.dump(2) << "\n";
        index["heat_decomposition"] = {{"files", {"heat_decomposition.json"}},
                                       {"certificate_ok", certificate_ok(cert, c.heat_r)}};
    }

    std::ofstream(dir / "index.json") << index.dump(2) << "\n";
    return index;
}

}  // namespace regkit
