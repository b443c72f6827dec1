#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "torsion/recipes.hpp"

using torsion::json;

namespace {

struct Flags {
    std::string config, out;
    std::optional<std::uint64_t> seed;
    std::optional<int> grid, kmax;
    bool emit = false;
};

int fail_validation(const std::vector<torsion::ConfigIssue>& issues)
{
    for (const auto& i : issues) std::cerr << "error: " << i.path << ": " << i.message << '\n';
    return 2;
}

int execute(const std::string& recipe, const Flags& f)
{
    json j = json::object();
    if (!f.config.empty()) {
        std::ifstream in(f.config);
        if (!in) return fail_validation({{"config", "cannot open " + f.config}});
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            return fail_validation({{"config", e.what()}});
        }
        if (!j.is_object()) return fail_validation({{"config", "top level must be an object"}});
    }
    j["recipe"] = recipe;
    if (!f.out.empty()) j["out"] = f.out;
    if (f.seed) j["seed"] = *f.seed;
    if (f.grid) {
        if (!j.contains("grid") || !j["grid"].is_object()) j["grid"] = json::object();
        j["grid"]["n"] = *f.grid;
    }
    if (f.kmax) j["kmax"] = *f.kmax;

    torsion::ExperimentConfig c;
    try {
        c = torsion::validate(j);
    } catch (const torsion::ConfigError& e) {
        return fail_validation(e.issues());
    }
    if (f.emit) {
        std::cout << c.canonical();
        return 0;
    }
    const auto r = torsion::run(c, std::cerr);
    for (const auto& p : r.files) std::cerr << "wrote " << p << '\n';
    if (r.exit_code != 0) std::cerr << "error: " << r.message << '\n';
    std::cout << r.summary.dump(2) << '\n';
    return r.exit_code;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Spectra, heat traces and zeta-regularized torsion of radial metrics on O(m) over the sphere"};
    app.require_subcommand(1);
    Flags f;
    std::string chosen;
    for (const auto& name : torsion::recipe_names()) {
        auto* sub = app.add_subcommand(name, "run the " + name + " recipe");
        sub->add_option("--config", f.config, "JSON configuration file");
        sub->add_option("--out", f.out, "output directory");
        sub->add_option("--seed", f.seed, "seed for randomized suites");
        sub->add_option("--grid", f.grid, "number of grid nodes");
        sub->add_option("--kmax", f.kmax, "largest Fourier mode");
        sub->add_flag("--emit-config", f.emit, "print the resolved configuration and exit");
        sub->callback([&chosen, name] { chosen = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    return execute(chosen, f);
}
