#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "regkit/verify.hpp"

using namespace regkit;

namespace {

/// A path to a JSON file, or inline JSON.
json load(const std::string& arg) {
    try {
        if (!arg.empty() && (arg[0] == '{' || arg[0] == '[' || arg[0] == '"')) return json::parse(arg);
        std::ifstream in(arg);
        if (!in) throw Error("io", "cannot open " + arg);
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error("parse", arg + ": " + e.what());
    }
}

Point point(const std::vector<double>& v, const char* what) {
    if (v.size() != 2) throw Error("usage", std::string(what) + " takes two numbers: t x");
    return {v[0], v[1]};
}

struct Ctx {
    std::string config_path, out;
    RunConfig cfg;
    std::string rule_path;

    void load_config() {
        if (config_path.empty()) return;
        cfg = RunConfig::from_json(load(config_path));
        if (!cfg.defaulted.empty()) {
            std::cerr << "defaults used for:";
            for (auto& k : cfg.defaulted) std::cerr << " " << k;
            std::cerr << "\n";
        }
    }
    Rule rule() const {
        if (rule_path.empty()) return cfg.rule();
        return Rule::from_json(load(rule_path));
    }
    void emit(const json& j) const {
        if (out.empty()) {
            std::cout << j.dump(2) << "\n";
            return;
        }
        std::ofstream f(out);
        if (!f) throw Error("io", "cannot write " + out);
        f << j.dump(2) << "\n";
    }
};

CoefficientField field_of(const Ctx& c, const std::string& path) {
    if (!path.empty()) return CoefficientField::from_json(load(path));
    return CoefficientField::symbolic(c.cfg.field_a, c.cfg.field_b, c.cfg.field_c);
}

MonteCarloOptions mc(const RunConfig& c, std::uint64_t seed, int samples) {
    MonteCarloOptions o;
    o.samples = samples > 0 ? samples : c.mc_samples;
    o.seed = seed;
    o.eps = c.eps_cells * c.grid.hx;
    return o;
}

json functional_json(const Functional<double>& ell) {
    json j = json::object();
    for (auto& [t, v] : ell) j[t.key()] = v;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"regkit: regularity structures with variable coefficients"};
    app.require_subcommand(1);
    app.fallthrough();
    Ctx ctx;
    app.add_option("--config", ctx.config_path, "run configuration (JSON)");
    app.add_option("-o,--out", ctx.out, "write the JSON result here instead of stdout");

    // trees
    auto* trees = app.add_subcommand("trees", "tree universes of a rule");
    auto* gen = trees->add_subcommand("generate", "all conforming trees within the caps");
    trees->require_subcommand(1);
    std::string deg_cap = "2";
    int edge_cap = 6;
    bool list = true;
    gen->add_option("--rule", ctx.rule_path, "rule file (JSON); default: the toy rule");
    gen->add_option("--deg-cap", deg_cap, "degree cap, e.g. 3/2");
    gen->add_option("--edge-cap", edge_cap, "edge cap");
    gen->add_flag("!--counts-only", list, "omit the tree list");

    // coproduct
    auto* cop = app.add_subcommand("coproduct", "coproducts of a tree");
    std::string kind = "full", tree_arg, sector_arg, gamma0;
    cop->add_option("--kind", kind, "plus, full, rminus or tilde")->check(CLI::IsMember({"plus", "full", "rminus", "tilde"}));
    cop->add_option("--tree", tree_arg, "tree (file, inline JSON or toy name in quotes)")->required();
    cop->add_option("--rule", ctx.rule_path, "rule file");
    cop->add_option("--sector", sector_arg, "tilde: trees fixing a_* and m_* (default: Hist of the tree)");
    cop->add_option("--gamma0", gamma0, "tilde: gamma_0 (default: first configured value)");

    // hist, age
    auto* hist = app.add_subcommand("hist", "smallest historic set containing the seed");
    std::string seed_arg;
    hist->add_option("--seed", seed_arg, "trees (file or inline JSON)")->required();
    hist->add_option("--rule", ctx.rule_path, "rule file");
    auto* age = app.add_subcommand("age", "age of a tree");
    age->add_option("--tree", tree_arg, "tree")->required();
    age->add_option("--rule", ctx.rule_path, "rule file");

    // bphz
    auto* bphz = app.add_subcommand("bphz", "BPHZ functional on a historic set");
    std::string historic, oracle = "mc", values;
    std::uint64_t seed = 0;
    int samples = 0;
    bphz->add_option("--historic", historic, "trees generating the historic set")->required();
    bphz->add_option("--oracle", oracle, "mc or file")->check(CLI::IsMember({"mc", "file"}));
    bphz->add_option("--values", values, "file oracle: [{\"tree\": ..., \"value\": ...}]");
    bphz->add_option("--seed", seed, "Monte Carlo seed (default: configured)");
    bphz->add_option("--samples", samples, "Monte Carlo samples (default: configured)");
    bphz->add_option("--rule", ctx.rule_path, "rule file");

    // kernels
    auto* kern = app.add_subcommand("kernels", "dyadic kernel decompositions");
    kern->require_subcommand(1);
    std::string kdesc;
    int resolution = 0;
    std::vector<double> kpoint;
    auto* knorm = kern->add_subcommand("norm", "the kernel norm");
    knorm->add_option("--kernel", kdesc, "descriptor {beta, order, formula, N, space_dims}")->required();
    knorm->add_option("--resolution", resolution, "samples per axis");
    auto* kdec = kern->add_subcommand("decompose", "component values at a point");
    kdec->add_option("--kernel", kdesc, "descriptor")->required();
    kdec->add_option("--point", kpoint, "t x")->expected(2);

    // heat
    auto* heat = app.add_subcommand("heat", "variable-coefficient heat kernel");
    heat->require_subcommand(1);
    std::string field;
    int r = -1, M = 1, N = -1;
    std::vector<double> z{0.3, 0.2}, zbar{0.0, 0.0};
    std::vector<int> grid;
    for (auto* s : {heat->add_subcommand("eval", "Z, E and Gamma_N at a pair of points"),
                    heat->add_subcommand("volterra", "the summands of the Volterra series"),
                    heat->add_subcommand("decompose", "kernel / remainder split and its certificate")}) {
        s->add_option("--field", field, "coefficients {a, b, c, lambda, rho} (default: configured)");
        s->add_option("--r", r, "regularity order (default: configured)");
        s->add_option("--M", M, "expansion order of the kernel part");
        s->add_option("--N", N, "Volterra order (default: configured)");
        s->add_option("--z", z, "t x")->expected(2);
        s->add_option("--zbar", zbar, "t x")->expected(2);
        s->add_option("--grid", grid, "nt nx: sample Gamma_N(., zbar) on [tbar, tbar + 1] x [xbar - 2, xbar + 2]")
            ->expected(2);
    }

    // model
    auto* model = app.add_subcommand("model", "models on a grid");
    model->require_subcommand(1);
    std::string sector_seed, dump_dir;
    bool use_bphz = false;
    for (auto* s : {model->add_subcommand("build", "build and dump a model"),
                    model->add_subcommand("check", "chain and cocycle defects"),
                    model->add_subcommand("bphz-defect", "E[Pi^P tau(0)] under the BPHZ functional")}) {
        s->add_option("--seed", seed, "noise seed (default: configured)");
        s->add_option("--samples", samples, "Monte Carlo samples (default: configured)");
        s->add_option("--sector", sector_seed, "trees generating the sector (default: I(Xi)^3, I(I(Xi)))");
        s->add_option("--rule", ctx.rule_path, "rule file");
        s->add_flag("--bphz", use_bphz, "use the BPHZ preparation instead of the canonical one");
    }
    model->get_subcommand("build")->add_option("--dump", dump_dir, "directory for index.json and grid blobs")->required();

    // verify, tables
    auto* verify = app.add_subcommand("verify", "the headline checks");
    std::vector<int> only;
    verify->add_option("--only", only, "check ids (1-10)");
    auto* tables = app.add_subcommand("tables", "tables as JSON and CSV");
    std::string table_dir = "tables";
    tables->add_option("--dir", table_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        ctx.load_config();
        const RunConfig& cfg = ctx.cfg;
        std::uint64_t sd = seed ? seed : cfg.seed;

        if (trees->parsed()) {
            Rule R = ctx.rule();
            Rat cap = parse_rat(deg_cap);
            TreeUniverse u = generate(R, cap, edge_cap);
            json by = json::object(), ts = json::array();
            for (auto& [d, v] : u.by_degree(R.ts)) by[rat_str(d)] = v.size();
            if (list)
                for (auto& t : u.trees) ts.push_back(tree_to_json(t, R.ts));
            json out{{"degree_cap", rat_str(cap)}, {"edge_cap", edge_cap}, {"count", u.trees.size()},
                     {"by_degree", by}, {"complete_asserted", R.complete_asserted}, {"normal", R.normal()},
                     {"lowering_closed", R.lowering_closed()}};
            if (list) out["trees"] = ts;
            ctx.emit(out);
            return 0;
        }

        if (cop->parsed()) {
            Rule R = ctx.rule();
            Hopf h(R.ts);
            auto ts = trees_from_json(load(tree_arg), R.ts);
            if (ts.size() != 1) throw Error("usage", "--tree takes a single tree");
            const Tree& t = ts[0];
            TensorSum d;
            json meta = json::object();
            if (kind == "full") d = h.delta(t);
            if (kind == "rminus") d = h.delta_r_minus(t);
            if (kind == "plus") {
                if (!h.in_T_plus(t)) throw Error("hopf", "the positive coproduct needs a tree of the positive structure");
                d = h.delta_plus(t);
            }
            if (kind == "tilde") {
                History H(R, h);
                auto B = sector_arg.empty() ? H.hist({strip_over(uncolour(t))}).trees
                                            : H.hist(trees_from_json(load(sector_arg), R.ts)).trees;
                GammaData g = gamma_data(h, B, gamma0.empty() ? cfg.gamma0.at(0) : parse_rat(gamma0));
                if (auto bad = inadmissible(h, B, g); !bad.empty())
                    throw Error("gamma", "gamma_0 = " + rat_str(g.gamma0) + " gives an integer gamma on " + bad[0].key());
                d = h.delta_tilde(t, g);
                meta = {{"gamma0", rat_str(g.gamma0)}, {"a_star", rat_str(g.a_star)}, {"m_star", rat_str(g.m_star)}};
            }
            ctx.emit({{"kind", kind}, {"tree", tree_to_json(t, R.ts)}, {"terms", d.size()}, {"parameters", meta},
                      {"tensor", tensor_to_json(d, R.ts)}});
            return 0;
        }

        if (hist->parsed() || age->parsed()) {
            Rule R = ctx.rule();
            Hopf h(R.ts);
            History H(R, h);
            if (hist->parsed()) {
                auto res = H.hist(trees_from_json(load(seed_arg), R.ts));
                json ts = json::array();
                for (auto& t : res.trees) ts.push_back(tree_to_json(t, R.ts));
                ctx.emit({{"rounds", res.rounds}, {"count", res.trees.size()}, {"trees", ts}});
            } else {
                auto ts = trees_from_json(load(tree_arg), R.ts);
                json out = json::array();
                for (auto& t : ts) out.push_back({{"key", t.key()}, {"tree", pretty(t, R.ts)}, {"age", H.age(t)}});
                ctx.emit(ts.size() == 1 ? out[0] : out);
            }
            return 0;
        }

        if (bphz->parsed()) {
            Rule R = ctx.rule();
            Hopf h(R.ts);
            History H(R, h);
            auto B = H.hist(trees_from_json(load(historic), R.ts)).trees;
            Functional<double> ell;
            if (oracle == "file") {
                if (values.empty()) throw Error("usage", "--oracle file needs --values");
                std::map<Tree, double> v;
                for (auto& e : load(values)) v[trees_from_json(e.at("tree"), R.ts).at(0)] = e.at("value").get<double>();
                TableOracle<double> o(v);
                ell = bphz_functional(H, B, o);
            } else {
                int I = R.ts.find("I");
                if (I < 0) throw Error("config", "the Monte Carlo oracle needs a kernel type named I");
                MonteCarloOracle o(h, {{I, config_kernel(cfg)}}, B, mc(cfg, sd, samples));
                ell = bphz_functional(H, B, o);
            }
            ctx.emit(functional_json(ell));
            return 0;
        }

        if (kern->parsed()) {
            DyadicKernel K = kernel_from_json(load(kdesc));
            if (knorm->parsed()) {
                NormOptions o;
                if (resolution > 0) o.resolution = resolution;
                ctx.emit(norm_report_json(kernel_norm(K, o)));
            } else {
                Point p = kpoint.empty() ? Point{0.01, 0.05} : point(kpoint, "--point");
                json comps = json::array();
                for (int n = 0; n < K.levels(); ++n) comps.push_back(K.component_value(n, p));
                ctx.emit({{"point", p}, {"levels", K.levels()}, {"components", comps},
                          {"remainder", value_at(K.remainder, p)}, {"near", value_at(K.near, p)},
                          {"reassembled", K.reassemble(p)}});
            }
            return 0;
        }

        if (heat->parsed()) {
            CoefficientField f = field_of(ctx, field);
            f.check_ellipticity();
            int n = N >= 0 ? N : cfg.heat_N, rr = r >= 0 ? r : cfg.heat_r;
            Point a = point(z, "--z"), b = point(zbar, "--zbar");
            VolterraOptions vo;
            vo.quad.s_points = cfg.s_points;
            vo.quad.y_panels = cfg.y_panels;
            json out{{"field", f.to_json()}, {"z", a}, {"zbar", b}};
            if (heat->get_subcommand("eval")->parsed() || !grid.empty()) {
                Volterra V(f, n, vo);
                out["Z"] = z_kernel(f, a, b);
                out["E"] = error_kernel(f, a, b);
                out["Gamma_N"] = V(a, b);
                out["N"] = n;
                out["partial"] = V.partial();
                if (!grid.empty()) {
                    if (grid[0] < 2 || grid[1] < 2) throw Error("usage", "--grid needs at least two points per axis");
                    double ht = 1.0 / grid[0], hx = 4.0 / (grid[1] - 1);
                    json vals = json::array();
                    for (int i = 1; i <= grid[0]; ++i)
                        for (int j = 0; j < grid[1]; ++j) vals.push_back(V({b[0] + i * ht, b[1] - 2 + j * hx}, b));
                    out["grid"] = {{"t0", b[0] + ht}, {"x0", b[1] - 2}, {"ht", ht}, {"hx", hx}, {"nt", grid[0]},
                                   {"nx", grid[1]}, {"values", vals}};
                }
            }
            if (heat->get_subcommand("volterra")->parsed()) {
                Volterra V(f, n, vo);
                json terms = json::array();
                for (int k = 0; k <= V.computed_terms(); ++k) terms.push_back(V.summand(k)(a, b));
                out["N"] = n;
                out["computed_terms"] = V.computed_terms();
                out["partial"] = V.partial();
                out["summands"] = terms;
                out["Gamma_N"] = V(a, b);
            }
            if (heat->get_subcommand("decompose")->parsed()) {
                GreenDecomposition G(f, GreenOptions{rr, M, n, 12}, false, std::nullopt, vo);
                out["K"] = G.K_at(a, b);
                out["R"] = G.R_at(a, b);
                out["Gamma"] = G.gamma(a, b);
                out["certificate"] = G.certificate();
            }
            ctx.emit(out);
            return 0;
        }

        if (model->parsed()) {
            Rule R = ctx.rule();
            Hopf h(R.ts);
            History H(R, h);
            int I = R.ts.find("I"), Xi = R.ts.find("Xi");
            if (I < 0 || Xi < 0) throw Error("config", "models need types named I and Xi");
            auto seeds = sector_seed.empty()
                             ? std::vector<Tree>{toy_tree(R.ts, "I(Xi)^3"), toy_tree(R.ts, "I(I(Xi))")}
                             : trees_from_json(load(sector_seed), R.ts);
            auto B = H.hist(seeds).trees;
            KernelAssignment K{{I, config_kernel(cfg)}};
            if (model->get_subcommand("bphz-defect")->parsed()) {
                MonteCarloOracle A(h, K, B, mc(cfg, sd, samples));
                MonteCarloOracle Bo(h, K, B, mc(cfg, sd + 1000003, samples));
                Functional<double> ell = bphz_functional(H, B, A);
                json rows = json::array();
                for (auto& t : B) {
                    if (!(degree(t, R.ts) < 0)) continue;
                    Estimate e = Bo.estimate_prepared(t, ell);
                    rows.push_back({{"key", t.key()}, {"tree", pretty(t, R.ts)}, {"mean", e.mean}, {"se", e.se}});
                }
                ctx.emit({{"preparation", functional_json(ell)}, {"defects", rows}});
                return 0;
            }
            Functional<double> ell;
            if (use_bphz) {
                MonteCarloOracle A(h, K, B, mc(cfg, sd, samples));
                ell = bphz_functional(H, B, A);
            }
            Model m(H, B, K, {{Xi, smooth_noise(cfg.grid, cfg.eps_cells * cfg.grid.hx, sd)}}, ell, cfg.base_points);
            if (model->get_subcommand("build")->parsed()) {
                ctx.emit(m.dump(dump_dir));
            } else {
                ChainReport ch = check_chain(m);
                ctx.emit({{"sector_size", B.size()}, {"chain_defect", ch.defect}, {"worst_tree", ch.worst},
                          {"pairs", ch.pairs}, {"cocycle_defect", check_cocycle(m)},
                          {"preparation", functional_json(ell)}});
            }
            return 0;
        }

        if (verify->parsed()) {
            auto results = run_checks(cfg, only);
            bool ok = true;
            for (auto& res : results) {
                std::cerr << summary_line(res) << "\n";
                ok = ok && res.pass;
            }
            ctx.emit(report_json(cfg, results));
            return ok ? 0 : 1;
        }

        if (tables->parsed()) {
            ctx.emit(emit_tables(cfg, table_dir));
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << json{{"error", e.kind}, {"message", e.what()}}.dump() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << json{{"error", "parse"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    }
    return 0;
}
