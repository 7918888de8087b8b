#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "regkit/verify.hpp"

namespace py = pybind11;
using namespace regkit;

namespace {

Rule rule_of(const std::string& rule_json, const std::string& kappa) {
    if (rule_json.empty()) return toy_rule(parse_rat(kappa));
    return Rule::from_json(json::parse(rule_json));
}

std::string generate_trees(const std::string& rule_json, const std::string& deg_cap, int edge_cap) {
    Rule R = rule_of(rule_json, "1/100");
    TreeUniverse u = generate(R, parse_rat(deg_cap), edge_cap);
    json ts = json::array();
    for (auto& t : u.trees) ts.push_back(tree_to_json(t, R.ts));
    return ts.dump();
}

std::string coproduct(const std::string& kind, const std::string& tree, const std::string& rule_json,
                      const std::string& gamma0) {
    Rule R = rule_of(rule_json, "1/100");
    Hopf h(R.ts);
    Tree t = trees_from_json(json::parse(tree), R.ts).at(0);
    TensorSum d;
    if (kind == "full") {
        d = h.delta(t);
    } else if (kind == "rminus") {
        d = h.delta_r_minus(t);
    } else if (kind == "plus") {
        d = h.delta_plus(t);
    } else if (kind == "tilde") {
        History H(R, h);
        auto B = H.hist({t}).trees;
        d = h.delta_tilde(t, gamma_data(h, B, parse_rat(gamma0)));
    } else {
        throw Error("usage", "unknown coproduct kind " + kind);
    }
    return tensor_to_json(d, R.ts).dump();
}

std::string hist(const std::string& seed, const std::string& rule_json) {
    Rule R = rule_of(rule_json, "1/100");
    Hopf h(R.ts);
    History H(R, h);
    auto res = H.hist(trees_from_json(json::parse(seed), R.ts));
    json ts = json::array();
    for (auto& t : res.trees) ts.push_back(tree_to_json(t, R.ts));
    return json{{"rounds", res.rounds}, {"trees", ts}}.dump();
}

int age(const std::string& tree, const std::string& rule_json) {
    Rule R = rule_of(rule_json, "1/100");
    Hopf h(R.ts);
    History H(R, h);
    return H.age(trees_from_json(json::parse(tree), R.ts).at(0));
}

std::string bphz(const std::string& historic, const std::string& values, const std::string& config) {
    RunConfig c = RunConfig::from_json(json::parse(config));
    Rule R = c.rule();
    Hopf h(R.ts);
    History H(R, h);
    auto B = H.hist(trees_from_json(json::parse(historic), R.ts)).trees;
    Functional<double> ell;
    if (!values.empty()) {
        std::map<Tree, double> v;
        for (auto& e : json::parse(values)) v[trees_from_json(e.at("tree"), R.ts).at(0)] = e.at("value").get<double>();
        TableOracle<double> o(v);
        ell = bphz_functional(H, B, o);
    } else {
        MonteCarloOptions o;
        o.samples = c.mc_samples;
        o.seed = c.seed;
        o.eps = c.eps_cells * c.grid.hx;
        MonteCarloOracle mc(h, {{R.ts.find("I"), config_kernel(c)}}, B, o);
        ell = bphz_functional(H, B, mc);
    }
    json out = json::object();
    for (auto& [t, v] : ell) out[t.key()] = v;
    return out.dump();
}

std::string kernel_norm_of(const std::string& descriptor, int resolution) {
    NormOptions o;
    if (resolution > 0) o.resolution = resolution;
    return norm_report_json(kernel_norm(kernel_from_json(json::parse(descriptor)), o)).dump();
}

std::string heat_eval(const std::string& field, std::vector<double> z, std::vector<double> zbar, int N) {
    auto f = CoefficientField::from_json(json::parse(field));
    f.check_ellipticity();
    Volterra V(f, N);
    return json{{"Z", z_kernel(f, z, zbar)}, {"E", error_kernel(f, z, zbar)}, {"Gamma_N", V(z, zbar)},
                {"partial", V.partial()}}
        .dump();
}

std::string verify(const std::string& config, const std::vector<int>& only) {
    RunConfig c = RunConfig::from_json(json::parse(config));
    return report_json(c, run_checks(c, only)).dump();
}

std::string tables(const std::string& config, const std::string& dir) {
    return emit_tables(RunConfig::from_json(json::parse(config)), dir).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "regkit bindings; arguments and results are JSON text";
    py::register_exception<Error>(m, "RegkitError", PyExc_ValueError);
    auto nogil = py::call_guard<py::gil_scoped_release>();
    m.def("generate_trees", &generate_trees, py::arg("rule"), py::arg("deg_cap"), py::arg("edge_cap"), nogil);
    m.def("coproduct", &coproduct, py::arg("kind"), py::arg("tree"), py::arg("rule"), py::arg("gamma0"), nogil);
    m.def("hist", &hist, py::arg("seed"), py::arg("rule"), nogil);
    m.def("age", &age, py::arg("tree"), py::arg("rule"), nogil);
    m.def("bphz", &bphz, py::arg("historic"), py::arg("values"), py::arg("config"), nogil);
    m.def("kernel_norm", &kernel_norm_of, py::arg("descriptor"), py::arg("resolution"), nogil);
    m.def("heat_eval", &heat_eval, py::arg("field"), py::arg("z"), py::arg("zbar"), py::arg("N"), nogil);
    m.def("verify", &verify, py::arg("config"), py::arg("only"), nogil);
    m.def("tables", &tables, py::arg("config"), py::arg("dir"), nogil);
}
