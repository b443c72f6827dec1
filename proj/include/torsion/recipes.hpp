#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "torsion/heat.hpp"
#include "torsion/profiles.hpp"
#include "torsion/spectrum.hpp"
#include "torsion/suites.hpp"
#include "torsion/zeta.hpp"

namespace torsion {

struct ConfigIssue {
    std::string path;
    std::string message;
};

// All violations found in one pass; path() is the first one.
class ConfigError : public ValidationError {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues);
    const std::vector<ConfigIssue>& issues() const { return issues_; }

private:
    std::vector<ConfigIssue> issues_;
};

struct ChiSpec {
    std::string name = "pow2";  // pow2 | linear | table
    std::vector<double> table;  // chi(1), chi(2), ...
    Chi make() const;
    json to_json() const;
};

struct MetricSpec {
    std::string kind = "fubini_study";  // fubini_study | pnorm | canonical | dynamical | sampled | sqrt_kink
    int degree = 1;
    int p = 6;
    ChiSpec chi;
    std::vector<std::complex<double>> coeffs{1.0, 0.0, 0.0};  // highest degree first
    int iterations = 10;
    json samples = nullptr;  // sampled: {grid: {u_min, u_max, n}, psi: [...]}
};

struct BaseSpec {
    std::string kind = "fubini_study";  // fubini_study | tx | canonical_tx
    double p = 2;
    double scale = 1;
};

struct FamilySpec {
    ChiSpec chi;
    int p_min = 2;
    int p_max = 9;
};

struct TGrid {
    double t_min = 0.01, t_max = 10;
    int count = 31;
    std::vector<double> points() const;  // geometric
};

struct EvalSpec {
    double u = 2.5;
    std::vector<double> t{0.25, 1, 4};
    double duhamel_t = 1;
};

struct ExperimentConfig {
    std::string recipe = "spectrum";
    MetricSpec metric;
    BaseSpec base;
    Discretization disc;
    FamilySpec family;
    TGrid t_grid;
    EvalSpec eval;
    std::string out = "out";
    std::uint64_t seed = 1;

    json to_json() const;
    std::string canonical() const;  // sorted keys, indent 2
};

const std::vector<std::string>& recipe_names();

// Fills defaults, checks types and ranges; throws ConfigError listing every violation.
ExperimentConfig validate(const json& j);
std::vector<ConfigIssue> config_issues(const json& j);

MetricProfile build_metric(const ExperimentConfig& c);
BaseProfile build_base(const BaseSpec& b);

struct RunResult {
    int exit_code = 0;  // 0 ok, 2 validation, 3 numerical assertion
    std::string message;
    std::vector<std::string> files;
    json summary = json::object();
};

// Runs the recipe and writes its artifacts into c.out; never throws for validation/numerical errors.
RunResult run(const ExperimentConfig& c, std::ostream& log);

}  // namespace torsion
