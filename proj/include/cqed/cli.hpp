#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "cqed/errors.hpp"
#include "cqed/lindblad.hpp"
#include "cqed/trajectory.hpp"

namespace cqed::cli {

// Filesystem failures map to their own exit code, distinct from computation.
struct IoError : Error {
    explicit IoError(const std::string& what) : Error("IoError", what) {}
};

// Raw command-line inputs.  The environment override is injected (rather
// than read from the process) so resolution stays testable.
struct Invocation {
    std::string command;
    std::string config_path;                                  // --config
    std::vector<std::pair<std::string, std::string>> sets;    // --set key=value, in order
    std::string out_flag;                                     // --out
    std::string format_flag;                                  // --format
    std::string env_out;                                      // $CQEDSIM_OUT
    bool env_out_present = false;
};

// Fully resolved and validated run description.  Precedence, lowest to
// highest: built-in defaults, config file, environment (output directory
// only), --set overrides, dedicated flags.
struct ResolvedConfig {
    std::string command;
    SystemParams params;
    GeneratorKind generator = GeneratorKind::EffectiveSecondOrder;
    SteadyMethod method = SteadyMethod::LongTime;
    int n_max = 0;  // resolved: always >= 1 after resolve()
    double t_final = 0.0;
    bool has_t_final = false;
    std::vector<double> sample_times;
    double reltol = 1e-10;
    double abstol = 1e-13;
    int trajectories = 1000;
    std::uint64_t seed = 0;
    bool has_seed = false;
    int threads = 1;
    InitialStateSpec initial;
    std::string initial_text = "vacuum";
    double regime_threshold = 0.1;
    double nc_min = 0.0;
    double nc_max = 0.0;
    int nc_points = 0;
    std::vector<double> lambdas{0.0, 0.3, 0.5};
    double fit_lo = 0.0;
    double fit_hi = 0.0;
    bool dump_state = false;
    bool dimensionless = false;
    double theta = 0.0;
    bool has_theta = false;
    std::string out_dir = ".";
    std::string format = "csv";
};

// Flat key = value file; '#' starts a comment; duplicate keys are rejected.
std::map<std::string, std::string> parse_config_file(const std::string& path);

// Merges all layers, rejects unknown keys and inconsistent combinations,
// derives the remaining quantities.  Throws ConfigError (or a more specific
// library error) before any computation happens.
ResolvedConfig resolve(const Invocation& inv);

// Each command writes its artifacts into cfg.out_dir and returns the paths.
std::vector<std::string> cmd_steady(const ResolvedConfig& cfg);
std::vector<std::string> cmd_evolve(const ResolvedConfig& cfg);
std::vector<std::string> cmd_trajectories(const ResolvedConfig& cfg);
std::vector<std::string> cmd_scan(const ResolvedConfig& cfg);
std::vector<std::string> cmd_reconstruct(const ResolvedConfig& cfg);
std::vector<std::string> cmd_check_regime(const ResolvedConfig& cfg);

// Full pipeline.  Written paths go to out, one per line.  On failure writes
// {"error": {"category", "message"}} to err and returns the exit code:
// 0 success, 2 configuration, 3 computation, 4 output I/O.
int run(const Invocation& inv, std::ostream& err, std::ostream& out);
int run(const Invocation& inv, std::ostream& err);  // paths to std::cout

}  // namespace cqed::cli
