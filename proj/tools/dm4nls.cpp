// dm4nls simulate <config>
// dm4nls check <config> --suite propagator|inequalities|conservation|all
// dm4nls average <config>

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dm4nls/experiments.hpp"

using namespace dm4nls;

namespace {

int simulate(const std::string& path) {
    const RunConfig cfg = load_config(path);
    const auto res = cmd_simulate(cfg);
    std::cout << "t_final " << detail::format_real(res.t_final) << "\n";
    std::cout << "mass_drift " << detail::format_real(res.mass_drift) << "\n";
    if (res.energy_drift) std::cout << "energy_drift " << detail::format_real(*res.energy_drift) << "\n";
    std::cout << "breakpoints " << res.breakpoints.size() << "\n";
    std::cout << "wall_time_s " << res.wall_time_s << "\n";
    std::cout << "summary " << res.summary_path.string() << "\n";
    return kExitOk;
}

int check(const std::string& path, const std::string& suite) {
    const RunConfig cfg = load_config(path);
    const auto results = cmd_check(cfg, suite);
    bool ok = true;
    for (const auto& r : results) {
        std::cout << r.to_json().dump() << "\n";
        if (!r.pass) {
            ok = false;
            std::cerr << "FAILED invariant " << r.suite << "/" << r.invariant << ": value "
                      << detail::format_real(r.value) << (r.lower_bound ? " not > " : " > ")
                      << detail::format_real(r.tolerance) << "\n";
        }
    }
    return ok ? kExitOk : kExitInvariant;
}

int average(const std::string& path) {
    const RunConfig cfg = load_config(path);
    const auto res = cmd_average(cfg);
    for (std::size_t i = 0; i < res.report.epsilons.size(); ++i)
        std::cout << "eps " << detail::format_real(res.report.epsilons[i]) << " sup_hs_error "
                  << detail::format_real(res.report.errors[i]) << "\n";
    if (res.report.fitted_rate) std::cout << "fitted_rate " << detail::format_real(*res.report.fitted_rate) << "\n";
    if (res.report.outside_stated_theorem) std::cout << "note outside stated theorem\n";
    std::cout << "monotone " << (res.monotone ? "true" : "false") << "\n";
    std::cout << "report " << res.csv_path.string() << "\n";
    if (!res.monotone) std::cerr << "errors are not monotone decreasing in eps\n";
    return res.monotone ? kExitOk : kExitInvariant;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pseudospectral fourth-order NLS-Hartree simulator with time-dependent dispersion"};
    app.require_subcommand(1);
    std::string config, suite = "all";

    auto* sim = app.add_subcommand("simulate", "Evolve the configured problem and write diagnostics");
    sim->add_option("config", config, "Run config file")->required();
    auto* chk = app.add_subcommand("check", "Run invariant suites and report JSONL pass/fail lines");
    chk->add_option("config", config, "Run config file")->required();
    chk->add_option("--suite", suite, "propagator|inequalities|conservation|all")
        ->check(CLI::IsMember({"propagator", "inequalities", "conservation", "all"}));
    auto* avg = app.add_subcommand("average", "Fast-dispersion averaging experiment");
    avg->add_option("config", config, "Run config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*sim) return simulate(config);
        if (*chk) return check(config, suite);
        if (*avg) return average(config);
    } catch (const StepAbort& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        std::cerr << "last good t: " << detail::format_real(e.last_good_t()) << "\n";
        if (!e.checkpoint_path().empty()) std::cerr << "last checkpoint: " << e.checkpoint_path() << "\n";
        return kExitNumerical;
    } catch (const NumericalError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}
