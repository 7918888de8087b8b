#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "regkit/verify.hpp"

using namespace regkit;

int main(int argc, char** argv) {
    CLI::App app{"Headline checks, one PASS/FAIL line each"};
    std::string config, report;
    std::vector<int> only;
    app.add_option("--config", config, "run configuration (JSON)");
    app.add_option("--report", report, "write the full report here");
    app.add_option("--only", only, "run only these checks (1-10)");
    CLI11_PARSE(app, argc, argv);

    RunConfig c;
    try {
        if (!config.empty()) {
            std::ifstream in(config);
            if (!in) throw Error("config", "cannot open " + config);
            c = RunConfig::from_json(json::parse(in));
        }
    } catch (const std::exception& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    }
    bool ok = true;
    std::vector<CheckResult> results;
    try {
        results = run_checks(c, only);
    } catch (const Error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    }
    for (auto& r : results) {
        std::cout << summary_line(r) << std::endl;
        if (!r.pass && r.detail.contains("error")) std::cout << "    error: " << r.detail["error"].get<std::string>() << "\n";
        ok = ok && r.pass;
    }
    if (!report.empty()) std::ofstream(report) << report_json(c, results).dump(2) << "\n";
    return ok ? 0 : 1;
}
