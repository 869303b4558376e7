#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ultrametric {

// Unset fields fall back to the suite's acceptance setting.
struct SuiteConfig {
    std::string suite;
    std::optional<std::string> group;  // qp | heisenberg | engel
    std::optional<int> prime;
    std::vector<double> alpha;
    std::optional<double> beta;
    std::optional<int> dimension;
    std::optional<int> level;
    std::optional<int> trunc_m;
    std::optional<int> trunc_k;
    std::optional<double> tolerance;
    std::uint64_t seed = 0;
    std::optional<int> trials;
    std::optional<std::filesystem::path> out;
};

struct Check {
    std::string name;
    double error = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    double seconds = 0.0;
};

struct Report {
    std::string suite;
    int criterion = 0;
    std::uint64_t seed = 0;
    std::vector<Check> checks;
    // first failing randomized input, verbatim
    std::optional<std::string> counterexample;
    // informational values that are reported but not asserted
    std::vector<std::string> notes;
    std::vector<std::filesystem::path> written;
    double seconds = 0.0;

    bool passed() const;
};

// Suite names in acceptance order; criterion n is suite_names()[n - 1].
const std::vector<std::string>& suite_names();
int suite_criterion(const std::string& suite);

// Throws DomainError naming the violated precondition.
void validate(const SuiteConfig& config);
Report run_suite(const SuiteConfig& config);
void print_report(std::ostream& out, const Report& report);

// Heat kernel table: Q_p^d as `t,shell,value,estimate_ratio`; H_1 as
// `t,x,y,z,re,im,trunc_M,trunc_K`; E_4 as `t,x,y1,y2,y3,re,im,trunc_M,trunc_K`.
void write_heat_table(std::ostream& out, const SuiteConfig& config);

}  // namespace ultrametric
