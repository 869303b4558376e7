#include "ultrametric/padic.hpp"
#include "ultrametric/verify.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace ultrametric;

namespace {

int run(const std::vector<std::string>& suites, SuiteConfig config) {
    bool all = true;
    for (const auto& suite : suites) {
        config.suite = suite;
        auto report = run_suite(config);
        print_report(std::cout, report);
        all = all && report.passed();
    }
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Verification suites and tables for Vladimirov-Taibleson calculus on p-adic groups"};
    app.set_config("--config", "", "key = value file; command-line flags take precedence");
    app.require_subcommand(1);
    app.fallthrough();

    SuiteConfig config;
    std::optional<std::string> out;
    app.add_option("--p", config.prime, "prime");
    app.add_option("--alpha", config.alpha, "operator order(s), comma separated")->delimiter(',');
    app.add_option("--beta", config.beta, "Riesz order");
    app.add_option("--group", config.group, "qp | heisenberg | engel");
    app.add_option("--d", config.dimension, "rank d of Q_p^d or H_d");
    app.add_option("--level", config.level, "window depth");
    app.add_option("--trunc-M", config.trunc_m, "lambda-shells on each side of |lambda| = 1");
    app.add_option("--trunc-K", config.trunc_k, "representation window digits");
    app.add_option("--tol", config.tolerance, "tolerance of the suite's main checks");
    app.add_option("--seed", config.seed, "seed of randomized checks")->capture_default_str();
    app.add_option("--trials", config.trials, "randomized trials");
    app.add_option("--out", out, "directory for CSV output");

    std::vector<std::string> chosen;
    for (const auto& suite : suite_names())
        app.add_subcommand(suite, "run the " + suite + " suite (criterion " + std::to_string(suite_criterion(suite)) + ")")
            ->callback([&chosen, suite] { chosen = {suite}; });
    std::string named;
    auto* verify = app.add_subcommand("verify", "run a suite by name, or all of them");
    verify->add_option("suite", named, "suite name or 'all'")->required();
    verify->callback([&] { chosen = named == "all" ? suite_names() : std::vector<std::string>{named}; });
    std::optional<std::string> table_file;
    auto* table = app.add_subcommand("heat-table", "write a heat kernel CSV table");
    table->add_option("--file", table_file, "output file (default stdout)");

    CLI11_PARSE(app, argc, argv);
    if (out) config.out = *out;

    try {
        if (table->parsed()) {
            if (!table_file) {
                write_heat_table(std::cout, config);
                return 0;
            }
            std::ofstream file(*table_file);
            if (!file) throw DomainError("cannot write " + *table_file);
            write_heat_table(file, config);
            return 0;
        }
        return run(chosen, config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
