#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cqed/cli.hpp"

namespace {

int config_error(const std::string& message) {
    nlohmann::ordered_json j;
    j["error"]["category"] = "ConfigError";
    j["error"]["message"] = message;
    std::cerr << j.dump() << "\n";
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cavity metrology simulator: kicked-cavity master equations, "
                 "moment systems, Monte Carlo trajectories, and sensitivity scans"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "1.0.0");

    cqed::cli::Invocation inv;
    std::vector<std::string> sets;
    const auto add = [&](const std::string& name, const std::string& desc) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", inv.config_path, "key = value configuration file");
        sub->add_option("--set", sets, "override one key, e.g. --set g=3e5 (repeatable)");
        sub->add_option("--out", inv.out_flag, "output directory (beats $CQEDSIM_OUT)");
        sub->add_option("--format", inv.format_flag, "csv or json for tabular outputs");
    };
    add("steady", "solve for the steady state and report its moments");
    add("evolve", "integrate the master equation and sample moments over time");
    add("trajectories", "Monte Carlo ensemble of single-history kick simulations");
    add("scan", "sweep the atom flux and fit the sensitivity scaling");
    add("reconstruct", "rebuild the Gaussian steady state from closed-form moments");
    add("check-regime", "report the expansion parameters that justify the model");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return config_error(e.what());
    }

    inv.command = app.get_subcommands().front()->get_name();
    for (const std::string& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            return config_error("--set expects key=value, got '" + s + "'");
        inv.sets.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    if (const char* env = std::getenv("CQEDSIM_OUT")) {
        inv.env_out = env;
        inv.env_out_present = true;
    }
    return cqed::cli::run(inv, std::cerr);
}
