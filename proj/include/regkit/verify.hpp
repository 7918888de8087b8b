#pragma once

#include <map>
#include <string>
#include <vector>

#include "regkit/heatkernel.hpp"
#include "regkit/models.hpp"
#include "regkit/rules.hpp"

namespace regkit {

/// Everything a verification or table run reads. Keys absent from the JSON keep their defaults and are listed
/// in `defaulted`.
struct RunConfig {
    std::string rule_path;  // empty: the built-in toy rule
    Rat kappa{1, 100};

    // algebra caps
    int hopf_edges = 5;
    Rat hopf_degree_cap{3};
    int tilde_edges = 4;
    std::vector<Rat> gamma0{Rat(33, 10), Rat(43, 10), Rat(57, 10)};
    int coloured_variants = 50;
    int hist_seeds = 20;
    int age_edges = 4;

    // models
    GridSpec grid;
    int eps_cells = 8;
    int kernel_first = 1, kernel_levels = 10, kernel_order = 8;
    std::vector<std::vector<int>> base_points{{96, 64}, {96, 192}, {160, 64}, {160, 192}};
    int mc_samples = 10000;
    std::uint64_t seed = 1;

    // heat kernel
    std::string field_a = "1 + 0.2*sin(x + t)", field_b = "0.3*cos(x)", field_c = "0.1*sin(t)";
    int heat_N = 2, heat_r = 3;
    int s_points = 8, y_panels = 12;

    // kernel norms
    int norm_levels = 8, norm_order = 0;
    int norm_coarse = 48, norm_fine = 96;

    std::map<std::string, double> tol{
        {"chain", 1e-6},        {"cocycle", 1e-8},      {"centering_se", 3},      {"heat_mass", 1e-8},
        {"heat_convolve", 1e-4}, {"telescoping", 1e-3}, {"exponent", 0.2},        {"locality", 1e-10},
        {"taylor_reassembly", 1e-6}, {"taylor_exact", 1e-10}, {"dyadic_reassembly", 1e-10},
        {"norm_refinement", 0.02}, {"time_hopf", 60},   {"time_models", 300},     {"time_heat", 600}};

    std::vector<std::string> defaulted;

    static RunConfig from_json(const json& j);
    json to_json() const;
    Rule rule() const;
    double t(const std::string& key) const;
};

struct CheckResult {
    int id = 0;
    std::string name;
    bool pass = false;
    double measured = 0, tolerance = 0;  // headline quantity and its bound
    double seconds = 0;
    json detail = json::object();
};

json to_json(const CheckResult& r);
/// "PASS [id] name  measured=... tol=... (s)"
std::string summary_line(const CheckResult& r);

CheckResult check_hopf_suite(const RunConfig& c);
CheckResult check_cointeraction(const RunConfig& c);
CheckResult check_delta_tilde(const RunConfig& c);
CheckResult check_hist_age(const RunConfig& c);
CheckResult check_model_axioms(const RunConfig& c);
CheckResult check_bphz_centering(const RunConfig& c);
CheckResult check_heat_suite(const RunConfig& c);
CheckResult check_locality(const RunConfig& c);
CheckResult check_aniso_taylor(const RunConfig& c);
CheckResult check_kernel_norms(const RunConfig& c);

/// The ten headline checks, or the listed subset. Throws before running anything if the rule does not load.
std::vector<CheckResult> run_checks(const RunConfig& c, const std::vector<int>& which = {});

/// {config, checks, timing}; everything outside "timing" depends only on the config and seeds.
json report_json(const RunConfig& c, const std::vector<CheckResult>& results);

/// Writes the tables as JSON and CSV into dir and returns an index of what was written.
json emit_tables(const RunConfig& c, const std::string& dir);

// shared by the CLI and the checks

/// Grid kernel for the heat kernel at the configured spacing and truncation.
std::shared_ptr<const GridKernel> config_kernel(const RunConfig& c);
/// Toy trees by name: "Xi", "I(Xi)", "I(Xi)^2", "I(Xi)^3", "I(I(Xi))", "X_x I(Xi)^2".
Tree toy_tree(const TypeSet& ts, const std::string& name);
/// A tree object, a toy name, or an array of either.
std::vector<Tree> trees_from_json(const json& j, const TypeSet& ts);

}  // namespace regkit
