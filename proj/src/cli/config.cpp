#include "cqed/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "cqed/errors.hpp"
#include "cqed/metrology.hpp"

namespace cqed::cli {
namespace {

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "units", "g", "g_tau", "tau", "r", "n_c", "kappa",
        "p_e", "lambda", "theta",
        "generator", "method", "n_max",
        "t_final", "sample_times", "reltol", "abstol",
        "trajectories", "seed", "threads", "initial_state",
        "regime_threshold",
        "nc_min", "nc_max", "nc_points", "lambdas", "fit_lo", "fit_hi",
        "dump_state", "out", "format",
    };
    return keys;
}

std::string trim(std::string s) {
    const auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && ws(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    while (!s.empty() && ws(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& raw, const char* want) {
    throw ConfigError("key '" + key + "' expects " + want + ", got '" + raw + "'");
}

double to_double(const std::string& key, const std::string& raw) {
    const std::string t = trim(raw);
    std::size_t pos = 0;
    double v = 0.0;
    bool ok = !t.empty();
    if (ok) {
        try {
            v = std::stod(t, &pos);
        } catch (const std::exception&) {
            ok = false;
        }
    }
    if (!ok || pos != t.size()) bad_value(key, raw, "a number");
    return v;
}

long long to_int(const std::string& key, const std::string& raw) {
    const std::string t = trim(raw);
    std::size_t pos = 0;
    long long v = 0;
    bool ok = !t.empty();
    if (ok) {
        try {
            v = std::stoll(t, &pos);
        } catch (const std::exception&) {
            ok = false;
        }
    }
    if (!ok || pos != t.size()) bad_value(key, raw, "an integer");
    return v;
}

std::uint64_t to_uint64(const std::string& key, const std::string& raw) {
    const std::string t = trim(raw);
    if (!t.empty() && t.front() == '-') bad_value(key, raw, "a non-negative integer");
    std::size_t pos = 0;
    std::uint64_t v = 0;
    bool ok = !t.empty();
    if (ok) {
        try {
            v = std::stoull(t, &pos);
        } catch (const std::exception&) {
            ok = false;
        }
    }
    if (!ok || pos != t.size()) bad_value(key, raw, "a non-negative integer");
    return v;
}

bool to_bool(const std::string& key, const std::string& raw) {
    const std::string t = trim(raw);
    if (t == "true") return true;
    if (t == "false") return false;
    bad_value(key, raw, "'true' or 'false'");
}

std::vector<double> to_list(const std::string& key, const std::string& raw) {
    std::vector<double> out;
    std::string item;
    std::size_t start = 0;
    while (start <= raw.size()) {
        const auto comma = raw.find(',', start);
        item = raw.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        out.push_back(to_double(key, item));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

double positive_double(const std::map<std::string, std::string>& kv, const std::string& key,
                       double fallback) {
    if (!kv.count(key)) return fallback;
    const double v = to_double(key, kv.at(key));
    if (!std::isfinite(v) || v <= 0.0) throw ConfigError("key '" + key + "' must be positive");
    return v;
}

void require_key(const std::map<std::string, std::string>& kv, const std::string& key,
                 const std::string& command) {
    if (!kv.count(key))
        throw ConfigError("command '" + command + "' requires key '" + key + "'");
}

InitialStateSpec parse_initial(const std::string& text) {
    InitialStateSpec init;
    if (text == "vacuum") {
        init.kind = InitialStateSpec::Kind::Vacuum;
    } else if (text == "steady") {
        init.kind = InitialStateSpec::Kind::Steady;
    } else if (text.rfind("fock:", 0) == 0) {
        init.kind = InitialStateSpec::Kind::Fock;
        const long long n = to_int("initial_state", text.substr(5));
        if (n < 0) throw ConfigError("fock occupation must be non-negative");
        init.fock_n = static_cast<int>(n);
    } else if (text.rfind("thermal:", 0) == 0) {
        init.kind = InitialStateSpec::Kind::Thermal;
        const double nbar = to_double("initial_state", text.substr(8));
        if (!std::isfinite(nbar) || nbar < 0.0)
            throw ConfigError("thermal occupation must be non-negative");
        init.nbar = nbar;
    } else {
        bad_value("initial_state", text, "vacuum | steady | fock:<n> | thermal:<nbar>");
    }
    return init;
}

void check_coherence_bound(double lambda, const AtomParams& atom) {
    if (lambda * lambda > atom.p_e * atom.p_g + 1e-12)
        throw ConfigError("lambda = " + std::to_string(lambda) +
                          " exceeds the coherence bound sqrt(p_e p_g)");
}

}  // namespace

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config file line " + std::to_string(lineno) +
                              " is not of the form 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config file line " + std::to_string(lineno) + " has an empty key");
        if (!kv.emplace(key, value).second)
            throw ConfigError("duplicate key '" + key + "' in config file");
    }
    return kv;
}

ResolvedConfig resolve(const Invocation& inv) {
    static const std::vector<std::string> commands = {
        "steady", "evolve", "trajectories", "scan", "reconstruct", "check-regime"};
    if (std::find(commands.begin(), commands.end(), inv.command) == commands.end())
        throw ConfigError("unknown command '" + inv.command + "'");

    // Layering, lowest to highest: config file, environment (output directory
    // only), --set in the order given, dedicated flags.
    std::map<std::string, std::string> kv;
    if (!inv.config_path.empty()) kv = parse_config_file(inv.config_path);
    if (inv.env_out_present) kv["out"] = inv.env_out;
    for (const auto& [k, v] : inv.sets) kv[trim(k)] = v;
    if (!inv.out_flag.empty()) kv["out"] = inv.out_flag;
    if (!inv.format_flag.empty()) kv["format"] = inv.format_flag;

    const auto& known = known_keys();
    for (const auto& [k, v] : kv)
        if (std::find(known.begin(), known.end(), k) == known.end())
            throw ConfigError("unknown key '" + k + "'");

    ResolvedConfig cfg;
    cfg.command = inv.command;

    const std::string units = kv.count("units") ? trim(kv.at("units")) : "si";
    if (units == "dimensionless") {
        cfg.dimensionless = true;
        if (kv.count("kappa"))
            throw ConfigError("'kappa' is fixed to 1 when units = dimensionless");
        cfg.params.kappa = 1.0;
    } else if (units == "si") {
        require_key(kv, "kappa", inv.command);
        cfg.params.kappa = positive_double(kv, "kappa", 0.0);
    } else {
        bad_value("units", units, "'si' or 'dimensionless'");
    }

    require_key(kv, "tau", inv.command);
    cfg.params.tau = positive_double(kv, "tau", 0.0);

    const bool has_g = kv.count("g") != 0;
    const bool has_gtau = kv.count("g_tau") != 0;
    if (has_g == has_gtau)
        throw ConfigError("exactly one of 'g' and 'g_tau' is required");
    cfg.params.g = has_g ? to_double("g", kv.at("g"))
                         : to_double("g_tau", kv.at("g_tau")) / cfg.params.tau;
    if (!std::isfinite(cfg.params.g) || cfg.params.g < 0.0)
        throw ConfigError("the coupling must be finite and non-negative");

    const bool has_r = kv.count("r") != 0;
    const bool has_nc = kv.count("n_c") != 0;
    if (has_r && has_nc) throw ConfigError("give only one of 'r' and 'n_c'");
    if (has_r) {
        cfg.params.r = to_double("r", kv.at("r"));
    } else if (has_nc) {
        cfg.params.r = to_double("n_c", kv.at("n_c")) * cfg.params.kappa;
    } else if (inv.command == "scan") {
        cfg.params.r = cfg.params.kappa;  // placeholder; the grid supplies r
    } else {
        throw ConfigError("exactly one of 'r' and 'n_c' is required");
    }
    if (!std::isfinite(cfg.params.r) || cfg.params.r < 0.0)
        throw ConfigError("the atom flux must be finite and non-negative");

    if (kv.count("theta")) {
        if (kv.count("lambda") || kv.count("p_e"))
            throw ConfigError("'theta' already determines 'p_e' and 'lambda'");
        cfg.theta = to_double("theta", kv.at("theta"));
        if (!std::isfinite(cfg.theta)) throw ConfigError("'theta' must be finite");
        cfg.has_theta = true;
        cfg.params.atom = theta_to_atom(cfg.theta);
    } else {
        const double p_e = kv.count("p_e") ? to_double("p_e", kv.at("p_e")) : 0.0;
        const double lam = kv.count("lambda") ? to_double("lambda", kv.at("lambda")) : 0.0;
        cfg.params.atom = AtomParams::with_excited(p_e, cxd(lam, 0.0));
    }
    cfg.params.atom.validate();
    cfg.params.validate();

    if (kv.count("generator")) {
        const std::string s = trim(kv.at("generator"));
        if (s == "full") cfg.generator = GeneratorKind::FullCoarseGrained;
        else if (s == "effective") cfg.generator = GeneratorKind::EffectiveSecondOrder;
        else if (s == "decay") cfg.generator = GeneratorKind::DecayOnly;
        else bad_value("generator", s, "'full', 'effective', or 'decay'");
    }
    if (kv.count("method")) {
        const std::string s = trim(kv.at("method"));
        if (s == "longtime") cfg.method = SteadyMethod::LongTime;
        else if (s == "nullspace") cfg.method = SteadyMethod::NullSpace;
        else bad_value("method", s, "'longtime' or 'nullspace'");
    }
    const std::string format = kv.count("format") ? trim(kv.at("format")) : "csv";
    if (format != "csv" && format != "json") bad_value("format", format, "'csv' or 'json'");
    cfg.format = format;

    if (kv.count("n_max")) {
        const long long n = to_int("n_max", kv.at("n_max"));
        if (n < 1 || n > 4096) throw ConfigError("'n_max' must be in [1, 4096]");
        cfg.n_max = static_cast<int>(n);
    } else {
        cfg.n_max = suggest_n_max(cfg.params);
    }

    if (kv.count("t_final")) {
        cfg.t_final = positive_double(kv, "t_final", 0.0);
        cfg.has_t_final = true;
    }
    const bool timed = inv.command == "evolve" || inv.command == "trajectories";
    if (timed && !cfg.has_t_final)
        throw ConfigError("command '" + inv.command + "' requires key 't_final'");

    if (kv.count("sample_times")) cfg.sample_times = to_list("sample_times", kv.at("sample_times"));
    else if (cfg.has_t_final) cfg.sample_times = {cfg.t_final};
    if (timed) {
        if (cfg.sample_times.empty()) throw ConfigError("'sample_times' must not be empty");
        for (std::size_t i = 0; i < cfg.sample_times.size(); ++i) {
            const double t = cfg.sample_times[i];
            if (!std::isfinite(t) || t < 0.0 || t > cfg.t_final)
                throw ConfigError("'sample_times' entries must lie in [0, t_final]");
            if (i > 0 && t <= cfg.sample_times[i - 1])
                throw ConfigError("'sample_times' must be strictly increasing");
        }
    }

    cfg.reltol = positive_double(kv, "reltol", cfg.reltol);
    cfg.abstol = positive_double(kv, "abstol", cfg.abstol);
    cfg.regime_threshold = positive_double(kv, "regime_threshold", cfg.regime_threshold);

    if (kv.count("trajectories")) {
        const long long n = to_int("trajectories", kv.at("trajectories"));
        if (n < 2 || n > 100000000) throw ConfigError("'trajectories' must be in [2, 1e8]");
        cfg.trajectories = static_cast<int>(n);
    }
    if (kv.count("seed")) {
        cfg.seed = to_uint64("seed", kv.at("seed"));
        cfg.has_seed = true;
    }
    if (inv.command == "trajectories" && !cfg.has_seed)
        throw ConfigError("command 'trajectories' requires key 'seed'");
    if (kv.count("threads")) {
        const long long n = to_int("threads", kv.at("threads"));
        if (n < 1 || n > 256) throw ConfigError("'threads' must be in [1, 256]");
        cfg.threads = static_cast<int>(n);
    }
    if (kv.count("initial_state")) cfg.initial_text = trim(kv.at("initial_state"));
    cfg.initial = parse_initial(cfg.initial_text);

    if (inv.command == "scan") {
        require_key(kv, "nc_min", inv.command);
        require_key(kv, "nc_max", inv.command);
        require_key(kv, "nc_points", inv.command);
        cfg.nc_min = to_double("nc_min", kv.at("nc_min"));
        cfg.nc_max = to_double("nc_max", kv.at("nc_max"));
        const long long points = to_int("nc_points", kv.at("nc_points"));
        if (!(cfg.nc_min > 0.0) || !std::isfinite(cfg.nc_min) || !std::isfinite(cfg.nc_max) ||
            cfg.nc_max < cfg.nc_min)
            throw ConfigError("the scan grid needs 0 < nc_min <= nc_max");
        if (points < 1 || points > 100000) throw ConfigError("'nc_points' must be in [1, 1e5]");
        if (points >= 2 && !(cfg.nc_max > cfg.nc_min))
            throw ConfigError("nc_max must exceed nc_min when nc_points >= 2");
        cfg.nc_points = static_cast<int>(points);
        if (kv.count("lambdas")) cfg.lambdas = to_list("lambdas", kv.at("lambdas"));
        if (cfg.lambdas.empty()) throw ConfigError("'lambdas' must not be empty");
        for (const double lam : cfg.lambdas) {
            if (!std::isfinite(lam)) throw ConfigError("'lambdas' entries must be finite");
            check_coherence_bound(lam, cfg.params.atom);
        }
        cfg.fit_lo = positive_double(kv, "fit_lo", cfg.nc_min);
        cfg.fit_hi = positive_double(kv, "fit_hi", cfg.nc_max);
        if (cfg.fit_hi < cfg.fit_lo) throw ConfigError("fit_hi must not be below fit_lo");
    }

    if (kv.count("dump_state")) cfg.dump_state = to_bool("dump_state", kv.at("dump_state"));
    if (kv.count("out")) {
        cfg.out_dir = kv.at("out");
        if (cfg.out_dir.empty()) throw ConfigError("'out' must not be empty");
    }
    return cfg;
}

}  // namespace cqed::cli
