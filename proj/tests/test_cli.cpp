#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cqed/cli.hpp"
#include "cqed/errors.hpp"

using namespace cqed;
using namespace cqed::cli;
using njson = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() /
               ("cqedsim_test_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string str() const { return path.string(); }
    std::string sub(const std::string& name) const { return (path / name).string(); }
};

using Sets = std::vector<std::pair<std::string, std::string>>;

Invocation make_inv(std::string command, Sets sets, std::string out = {}) {
    Invocation inv;
    inv.command = std::move(command);
    inv.sets = std::move(sets);
    inv.out_flag = std::move(out);
    return inv;
}

// kappa = 1/s, 10 atoms per cavity lifetime, g tau = 0.01, balanced coherent atom
Sets reference_sets() {
    return {{"kappa", "1"}, {"tau", "1e-7"}, {"g", "1e5"},
            {"r", "10"},    {"p_e", "0.5"}, {"lambda", "0.5"}};
}

struct RunOut {
    int code;
    std::string err;
};

RunOut run_quiet(const Invocation& inv) {
    std::ostringstream err;
    std::ostringstream out;
    const int code = run(inv, err, out);
    return {code, err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Csv {
    std::vector<std::string> meta;
    std::string header;
    std::vector<std::vector<std::string>> rows;
};

Csv parse_csv(const std::string& text) {
    Csv csv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.front() == '#') {
            csv.meta.push_back(line);
            continue;
        }
        if (csv.header.empty()) {
            csv.header = line;
            continue;
        }
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            cells.push_back(line.substr(
                start, comma == std::string::npos ? std::string::npos : comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        csv.rows.push_back(std::move(cells));
    }
    return csv;
}

bool has_meta(const Csv& csv, const std::string& line) {
    return std::find(csv.meta.begin(), csv.meta.end(), line) != csv.meta.end();
}

njson load_json(const fs::path& p) { return njson::parse(slurp(p)); }

}  // namespace

TEST_CASE("config files accept comments and blanks and reject malformed input") {
    TempDir dir("cfgfile");
    const auto file = dir.path / "run.cfg";

    {
        std::ofstream out(file);
        out << "# a comment\n\n  kappa = 1   # trailing note\n"
            << "tau=1e-7\n   g = 1e5\nr = 10\n";
    }
    const auto kv = parse_config_file(file.string());
    CHECK(kv.size() == 4);
    CHECK(kv.at("kappa") == "1");
    CHECK(kv.at("tau") == "1e-7");
    CHECK(kv.at("g") == "1e5");

    {
        std::ofstream out(file);
        out << "kappa = 1\nkappa = 2\n";
    }
    CHECK_THROWS_AS(parse_config_file(file.string()), ConfigError);

    {
        std::ofstream out(file);
        out << "just words\n";
    }
    CHECK_THROWS_AS(parse_config_file(file.string()), ConfigError);

    CHECK_THROWS_AS(parse_config_file(dir.sub("missing.cfg")), ConfigError);
}

TEST_CASE("override layering follows the documented precedence") {
    TempDir dir("layers");
    const auto file = dir.path / "run.cfg";
    {
        std::ofstream out(file);
        out << "kappa = 1\ntau = 1e-7\ng = 1e5\nr = 10\np_e = 0.5\n"
            << "out = " << dir.sub("from_file") << "\nformat = json\n";
    }

    Invocation inv;
    inv.command = "check-regime";
    inv.config_path = file.string();

    SUBCASE("the config file alone sets the output directory") {
        const auto cfg = resolve(inv);
        CHECK(cfg.out_dir == dir.sub("from_file"));
        CHECK(cfg.format == "json");
    }
    SUBCASE("the environment beats the file, later --set beats both, flags beat all") {
        inv.env_out = dir.sub("from_env");
        inv.env_out_present = true;
        CHECK(resolve(inv).out_dir == dir.sub("from_env"));

        inv.sets.push_back({"out", dir.sub("from_set1")});
        inv.sets.push_back({"out", dir.sub("from_set2")});
        CHECK(resolve(inv).out_dir == dir.sub("from_set2"));

        inv.out_flag = dir.sub("from_flag");
        CHECK(resolve(inv).out_dir == dir.sub("from_flag"));

        inv.format_flag = "csv";
        CHECK(resolve(inv).format == "csv");
    }
    SUBCASE("later --set wins over the file for physics keys too") {
        inv.sets.push_back({"g", "2e5"});
        const auto cfg = resolve(inv);
        CHECK(cfg.params.g == 2e5);
        CHECK(cfg.params.r == 10.0);
    }
}

TEST_CASE("invalid combinations are rejected before any computation") {
    const auto reject = [](Sets sets, const std::string& command = "check-regime") {
        CHECK_THROWS_AS(resolve(make_inv(command, std::move(sets))), ConfigError);
    };

    CHECK_THROWS_AS(resolve(make_inv("warp", reference_sets())), ConfigError);
    reject({{"kappa", "1"}, {"tau", "1e-7"}, {"g", "1e5"}, {"r", "10"}, {"bogus", "1"}});

    // coupling, flux, and decay-rate bookkeeping
    reject({{"kappa", "1"}, {"tau", "1e-7"}, {"r", "10"}});
    reject({{"kappa", "1"}, {"tau", "1e-7"}, {"g", "1e5"}, {"g_tau", "0.01"}, {"r", "10"}});
    reject({{"kappa", "1"}, {"tau", "1e-7"}, {"g", "1e5"}});
    reject({{"kappa", "1"}, {"tau", "1e-7"}, {"g", "1e5"}, {"r", "10"}, {"n_c", "10"}});
    reject({{"tau", "1e-7"}, {"g", "1e5"}, {"r", "10"}});  // SI units need kappa
    reject({{"units", "dimensionless"}, {"kappa", "1"}, {"tau", "1e-7"}, {"g", "1e5"}, {"r", "10"}});
    reject({{"units", "cgs"}, {"kappa", "1"}, {"tau", "1e-7"}, {"g", "1e5"}, {"r", "10"}});
    reject({{"kappa", "1"}, {"g", "1e5"}, {"r", "10"}});  // tau missing
    reject({{"kappa", "1"}, {"tau", "-1"}, {"g", "1e5"}, {"r", "10"}});
    reject({{"kappa", "1"}, {"tau", "1e-7"}, {"g", "abc"}, {"r", "10"}});

    // atom parametrization
    reject({{"kappa", "1"}, {"tau", "1e-7"}, {"g", "1e5"}, {"r", "10"},
            {"theta", "1.5"}, {"lambda", "0.1"}});
    reject({{"kappa", "1"}, {"tau", "1e-7"}, {"g", "1e5"}, {"r", "10"},
            {"theta", "1.5"}, {"p_e", "0.5"}});
    {
        Sets sets = {{"kappa", "1"}, {"tau", "1e-7"}, {"g", "1e5"}, {"r", "10"},
                     {"p_e", "0.5"}, {"lambda", "0.6"}};  // above sqrt(p_e p_g)
        CHECK_THROWS_AS(resolve(make_inv("check-regime", sets)), InvalidAtomState);
        sets[4] = {"p_e", "1.5"};
        sets[5] = {"lambda", "0"};
        CHECK_THROWS_AS(resolve(make_inv("check-regime", sets)), InvalidAtomState);
    }

    // enums and run controls
    const auto with = [](Sets extra, Sets base) {
        base.insert(base.end(), extra.begin(), extra.end());
        return base;
    };
    reject(with({{"generator", "exact"}}, reference_sets()));
    reject(with({{"method", "magic"}}, reference_sets()));
    reject(with({{"format", "yaml"}}, reference_sets()));
    reject(with({{"n_max", "0"}}, reference_sets()));
    reject(with({{"initial_state", "squeezed"}}, reference_sets()));
    reject(with({{"initial_state", "fock:-1"}}, reference_sets()));
    reject(with({{"initial_state", "thermal:-2"}}, reference_sets()));
    reject(with({{"regime_threshold", "0"}}, reference_sets()));
    reject(with({{"out", ""}}, reference_sets()));

    // timed commands
    reject(reference_sets(), "evolve");  // t_final missing
    reject(with({{"t_final", "1"}}, reference_sets()), "trajectories");  // seed missing
    reject(with({{"t_final", "1"}, {"seed", "1"}, {"trajectories", "1"}}, reference_sets()),
           "trajectories");
    reject(with({{"t_final", "1"}, {"seed", "-4"}}, reference_sets()), "trajectories");
    reject(with({{"t_final", "1"}, {"seed", "1"}, {"threads", "0"}}, reference_sets()),
           "trajectories");
    reject(with({{"t_final", "1"}, {"sample_times", "0.5,0.5"}}, reference_sets()), "evolve");
    reject(with({{"t_final", "1"}, {"sample_times", "0.5,2"}}, reference_sets()), "evolve");
    reject(with({{"t_final", "1"}, {"sample_times", ""}}, reference_sets()), "evolve");

    // scan grids
    reject(reference_sets(), "scan");  // no grid
    reject(with({{"nc_min", "0"}, {"nc_max", "10"}, {"nc_points", "3"}}, reference_sets()),
           "scan");
    reject(with({{"nc_min", "10"}, {"nc_max", "5"}, {"nc_points", "3"}}, reference_sets()),
           "scan");
    reject(with({{"nc_min", "5"}, {"nc_max", "5"}, {"nc_points", "3"}}, reference_sets()),
           "scan");
    reject(with({{"nc_min", "1"}, {"nc_max", "10"}, {"nc_points", "0"}}, reference_sets()),
           "scan");
    reject(with({{"nc_min", "1"}, {"nc_max", "10"}, {"nc_points", "3"}, {"lambdas", "0.9"}},
                reference_sets()),
           "scan");
    reject(with({{"nc_min", "1"}, {"nc_max", "10"}, {"nc_points", "3"}, {"fit_lo", "9"},
                 {"fit_hi", "2"}},
                reference_sets()),
           "scan");

    // scan does not require a flux key; everything else does
    Sets scan_ok = reference_sets();
    scan_ok.erase(scan_ok.begin() + 3);  // drop r
    scan_ok.insert(scan_ok.end(),
                   {{"nc_min", "1"}, {"nc_max", "10"}, {"nc_points", "3"}, {"lambdas", "0"}});
    CHECK_NOTHROW(resolve(make_inv("scan", scan_ok)));
}

TEST_CASE("the mixing angle and explicit populations are two spellings of one atom") {
    Sets explicit_sets = reference_sets();
    Sets theta_sets = {{"kappa", "1"}, {"tau", "1e-7"}, {"g", "1e5"}, {"r", "10"}};
    theta_sets.push_back({"theta", std::to_string(M_PI_2)});
    // std::to_string truncates; pass full precision through a stream instead
    theta_sets.back().second = [] {
        std::ostringstream ss;
        ss.precision(17);
        ss << M_PI_2;
        return ss.str();
    }();

    const auto a = resolve(make_inv("steady", explicit_sets));
    const auto b = resolve(make_inv("steady", theta_sets));
    CHECK(b.has_theta);
    CHECK(a.params.atom.p_e == b.params.atom.p_e);
    CHECK(a.params.atom.p_g == b.params.atom.p_g);
    CHECK(a.params.atom.lambda == b.params.atom.lambda);

    TempDir dir("theta");
    auto inv_a = make_inv("steady", explicit_sets, dir.sub("a"));
    auto inv_b = make_inv("steady", theta_sets, dir.sub("b"));
    REQUIRE(run_quiet(inv_a).code == 0);
    REQUIRE(run_quiet(inv_b).code == 0);
    CHECK(slurp(dir.path / "a" / "steady.json") == slurp(dir.path / "b" / "steady.json"));
}

TEST_CASE("dimensionless mode fixes the decay rate") {
    const auto cfg = resolve(make_inv(
        "check-regime",
        {{"units", "dimensionless"}, {"tau", "1e-7"}, {"g_tau", "0.01"}, {"n_c", "10"}}));
    CHECK(cfg.params.kappa == 1.0);
    CHECK(cfg.params.r == 10.0);
    CHECK(cfg.params.g == doctest::Approx(1e5).epsilon(1e-12));
    CHECK(cfg.dimensionless);

    const auto si = resolve(make_inv(
        "check-regime", {{"kappa", "2"}, {"tau", "1e-7"}, {"g", "1e5"}, {"n_c", "10"}}));
    CHECK(si.params.r == 20.0);
}

TEST_CASE("steady reports the reference point and the dark-coherence limit") {
    TempDir dir("steady");
    auto inv = make_inv("steady", reference_sets(), dir.sub("run1"));
    REQUIRE(run_quiet(inv).code == 0);
    const njson doc = load_json(dir.path / "run1" / "steady.json");

    CHECK(doc["schema_version"] == 1);
    CHECK(doc["command"] == "steady");
    CHECK(doc["config"]["n_c"] == 10.0);
    CHECK(doc["config"]["g_tau"] == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(doc["config"]["generator"] == "effective");
    CHECK(doc["config"]["derived"]["delta"] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(doc["config"]["derived"]["xi_re"] == doctest::Approx(0.05).epsilon(1e-12));

    CHECK(doc["moments"]["n_mean"].get<double>() ==
          doctest::Approx(0.0105).epsilon(1e-6));
    CHECK(doc["closed_form"]["n_mean"].get<double>() ==
          doctest::Approx(0.0105).epsilon(1e-12));
    CHECK(doc["approx"]["n_mean"].get<double>() == doctest::Approx(0.0105).epsilon(1e-12));
    CHECK(doc["closed_form"]["im_a"].get<double>() == doctest::Approx(-0.1).epsilon(1e-12));
    CHECK(doc["gaussian"]["q_parameter"].get<double>() ==
          doctest::Approx(1.001).epsilon(1e-9));
    CHECK(doc["gaussian"]["im_displacement"].get<double>() ==
          doctest::Approx(-0.1).epsilon(1e-9));
    CHECK(doc["mixture"]["single_photon_weight"].get<double>() ==
          doctest::Approx(5e-4).epsilon(1e-12));
    CHECK(doc["regime"]["ok"] == false);  // 1/(n_c tau g) = 10 at this point
    CHECK_FALSE(doc.contains("state"));

    SUBCASE("reruns are byte-identical") {
        inv.out_flag = dir.sub("run2");
        REQUIRE(run_quiet(inv).code == 0);
        CHECK(slurp(dir.path / "run1" / "steady.json") ==
              slurp(dir.path / "run2" / "steady.json"));
    }
    SUBCASE("no coherence means no displacement and no squeezing") {
        auto dark = make_inv("steady", reference_sets(), dir.sub("dark"));
        dark.sets.push_back({"lambda", "0"});
        REQUIRE(run_quiet(dark).code == 0);
        const njson d = load_json(dir.path / "dark" / "steady.json");
        CHECK(d["gaussian"]["squeeze"].get<double>() == 0.0);
        CHECK(d["gaussian"]["re_displacement"].get<double>() == 0.0);
        CHECK(d["gaussian"]["im_displacement"].get<double>() == 0.0);
    }
    SUBCASE("the density matrix dump is opt-in and well shaped") {
        auto dump = make_inv("steady", reference_sets(), dir.sub("dump"));
        dump.sets.push_back({"dump_state", "true"});
        dump.sets.push_back({"n_max", "8"});
        REQUIRE(run_quiet(dump).code == 0);
        const njson d = load_json(dir.path / "dump" / "steady.json");
        REQUIRE(d.contains("state"));
        CHECK(d["state"]["n_max"] == 8);
        CHECK(d["state"]["rho"].size() == 9);
        CHECK(d["state"]["rho"][0].size() == 9);
        CHECK(d["state"]["rho"][0][0].size() == 2);
    }
}

TEST_CASE("evolve traces pure decay when the drive is switched off") {
    TempDir dir("evolve");
    auto inv = make_inv("evolve", reference_sets(), dir.str());
    inv.sets.push_back({"generator", "decay"});
    inv.sets.push_back({"initial_state", "fock:1"});
    inv.sets.push_back({"t_final", "1"});
    inv.sets.push_back({"sample_times", "0.5,1"});
    REQUIRE(run_quiet(inv).code == 0);

    const Csv csv = parse_csv(slurp(dir.path / "evolve.csv"));
    CHECK(csv.header == "t,n_mean,re_a,im_a,n2_mean");
    REQUIRE(csv.rows.size() == 2);
    CHECK(has_meta(csv, "# schema_version = 1"));
    CHECK(has_meta(csv, "# command = evolve"));
    CHECK(has_meta(csv, "# generator = decay"));
    CHECK(has_meta(csv, "# initial_state = fock:1"));

    CHECK(std::stod(csv.rows[0][0]) == 0.5);
    CHECK(std::stod(csv.rows[0][1]) == doctest::Approx(std::exp(-0.5)).epsilon(1e-8));
    CHECK(std::stod(csv.rows[1][1]) == doctest::Approx(std::exp(-1.0)).epsilon(1e-8));
    CHECK(std::stod(csv.rows[1][2]) == 0.0);  // no field mean ever develops
    CHECK(std::stod(csv.rows[1][3]) == 0.0);

    SUBCASE("the json representation carries the same rows") {
        inv.format_flag = "json";
        REQUIRE(run_quiet(inv).code == 0);
        const njson doc = load_json(dir.path / "evolve.json");
        REQUIRE(doc["rows"].size() == 2);
        CHECK(doc["rows"][1]["t"] == 1.0);
        CHECK(doc["rows"][1]["n_mean"].get<double>() == std::stod(csv.rows[1][1]));
    }
}

TEST_CASE("trajectory tables are thread-count independent and schema-stable") {
    TempDir dir("mc");
    auto base = make_inv("trajectories", reference_sets(), "");
    base.sets.push_back({"g", "3e5"});  // overrides the reference coupling
    base.sets.push_back({"t_final", "2"});
    base.sets.push_back({"sample_times", "1,2"});
    base.sets.push_back({"trajectories", "64"});
    base.sets.push_back({"seed", "11"});

    auto one = base;
    one.out_flag = dir.sub("t1");
    one.sets.push_back({"threads", "1"});
    auto four = base;
    four.out_flag = dir.sub("t4");
    four.sets.push_back({"threads", "4"});
    REQUIRE(run_quiet(one).code == 0);
    REQUIRE(run_quiet(four).code == 0);

    const std::string body1 = slurp(dir.path / "t1" / "trajectories.csv");
    CHECK(body1 == slurp(dir.path / "t4" / "trajectories.csv"));
    CHECK(body1.find("threads") == std::string::npos);

    const Csv csv = parse_csv(body1);
    CHECK(csv.header ==
          "t,n_mean,n_stderr,re_a,im_a,re_a_stderr,im_a_stderr,n2_mean,n2_stderr");
    REQUIRE(csv.rows.size() == 2);
    CHECK(has_meta(csv, "# rng = philox4x32-10"));
    CHECK(has_meta(csv, "# crowded = false"));
    CHECK(has_meta(csv, "# seed = 11"));
    CHECK(has_meta(csv, "# trajectories = 64"));
    CHECK(std::stod(csv.rows[1][2]) > 0.0);  // occupation scatter is real

    SUBCASE("changing only the seed keeps the schema and changes the data") {
        auto reseeded = base;
        reseeded.out_flag = dir.sub("s12");
        for (auto& [k, v] : reseeded.sets)
            if (k == "seed") v = "12";
        REQUIRE(run_quiet(reseeded).code == 0);
        const Csv other = parse_csv(slurp(dir.path / "s12" / "trajectories.csv"));
        CHECK(other.header == csv.header);
        CHECK(other.rows.size() == csv.rows.size());
        CHECK(other.rows[1][1] != csv.rows[1][1]);
    }
}

TEST_CASE("a dark cavity decays exponentially through the full pipeline") {
    TempDir dir("dark");
    auto inv = make_inv("trajectories", reference_sets(), dir.str());
    inv.sets.push_back({"r", "0"});
    inv.sets.push_back({"initial_state", "fock:1"});
    inv.sets.push_back({"t_final", "2"});
    inv.sets.push_back({"sample_times", "0.5,1,2"});
    inv.sets.push_back({"trajectories", "8"});
    inv.sets.push_back({"seed", "3"});
    REQUIRE(run_quiet(inv).code == 0);

    const Csv csv = parse_csv(slurp(dir.path / "trajectories.csv"));
    REQUIRE(csv.rows.size() == 3);
    for (const auto& row : csv.rows) {
        const double t = std::stod(row[0]);
        CHECK(std::stod(row[1]) == doctest::Approx(std::exp(-t)).epsilon(1e-12));
        CHECK(std::stod(row[2]) == 0.0);  // every history is identical
        CHECK(std::stod(row[3]) == 0.0);
        CHECK(std::stod(row[4]) == 0.0);
    }
}

TEST_CASE("scan emits rows before fits and survives a degenerate window") {
    TempDir dir("scan");
    Sets sets = {{"kappa", "1"},  {"tau", "1e-7"},    {"g", "1e5"},
                 {"p_e", "0.5"},  {"nc_min", "1000"}, {"nc_max", "10000"},
                 {"nc_points", "6"}, {"lambdas", "0,0.5"}};

    auto inv = make_inv("scan", sets, dir.sub("fits"));
    REQUIRE(run_quiet(inv).code == 0);
    const Csv csv = parse_csv(slurp(dir.path / "fits" / "scan.csv"));
    CHECK(csv.header == "n_c,lambda,delta_g2_approx,delta_g2_exact,regime_ok");
    REQUIRE(csv.rows.size() == 12);
    CHECK(csv.rows[0][0] == "1000");
    CHECK(csv.rows[0][4] == "true");  // all three margins within 0.1 here
    CHECK(std::stod(csv.rows[0][2]) > 0.0);
    CHECK(std::stod(csv.rows[0][3]) > 0.0);  // exact path is live on this grid

    const njson fits = load_json(dir.path / "fits" / "scan_fits.json");
    REQUIRE(fits["fits"].size() == 2);
    CHECK(fits["fits"][0]["lambda"] == 0.0);
    CHECK(fits["fits"][0]["slope"].get<double>() == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(fits["fits"][1]["slope"].get<double>() == doctest::Approx(-2.0).epsilon(0.05));

    SUBCASE("the demonstrated flux reproduces the quoted sensitivity gain") {
        Sets ratio_sets = sets;
        ratio_sets[4] = {"nc_min", "10"};
        ratio_sets[5] = {"nc_max", "100"};
        ratio_sets[6] = {"nc_points", "2"};
        auto rinv = make_inv("scan", ratio_sets, dir.sub("ratio"));
        REQUIRE(run_quiet(rinv).code == 0);
        const Csv rcsv = parse_csv(slurp(dir.path / "ratio" / "scan.csv"));
        REQUIRE(rcsv.rows.size() == 4);
        // rows: (10, 0), (100, 0), (10, 0.5), (100, 0.5)
        const double flat = std::stod(rcsv.rows[0][2]);
        const double coherent = std::stod(rcsv.rows[2][2]);
        CHECK(flat == doctest::Approx(5.0e12).epsilon(1e-12));
        CHECK(flat / coherent == doctest::Approx(21.0).epsilon(1e-12));
    }
    SUBCASE("a single-point grid writes its row and then refuses the fit") {
        Sets single = sets;
        single[4] = {"nc_min", "1000"};
        single[5] = {"nc_max", "1000"};
        single[6] = {"nc_points", "1"};
        auto sinv = make_inv("scan", single, dir.sub("single"));
        const RunOut out = run_quiet(sinv);
        CHECK(out.code == 3);
        CHECK(njson::parse(out.err)["error"]["category"] == "EmptyWindow");
        const Csv scsv = parse_csv(slurp(dir.path / "single" / "scan.csv"));
        CHECK(scsv.rows.size() == 2);  // one per lambda, written before the fit
        CHECK_FALSE(fs::exists(dir.path / "single" / "scan_fits.json"));
    }
    SUBCASE("json format keeps rows and null exact entries typed") {
        auto jinv = make_inv("scan", sets, dir.sub("json"));
        jinv.format_flag = "json";
        REQUIRE(run_quiet(jinv).code == 0);
        const njson doc = load_json(dir.path / "json" / "scan.json");
        REQUIRE(doc["rows"].size() == 12);
        CHECK(doc["rows"][0]["n_c"] == 1000.0);
        CHECK(doc["rows"][0]["delta_g2_exact"].is_number());
        CHECK(fs::exists(dir.path / "json" / "scan_fits.json"));
    }
}

TEST_CASE("failures map to distinct exit codes and machine-readable categories") {
    TempDir dir("codes");

    SUBCASE("configuration stage exits with 2") {
        auto inv = make_inv("steady", {{"kappa", "1"}}, dir.str());
        const RunOut out = run_quiet(inv);
        CHECK(out.code == 2);
        const njson err = njson::parse(out.err);
        CHECK(err["error"]["category"] == "ConfigError");
        CHECK(err["error"]["message"].is_string());
        CHECK_FALSE(fs::exists(dir.path / "steady.json"));
    }
    SUBCASE("atom-state violations surface their own category") {
        auto inv = make_inv("steady", reference_sets(), dir.str());
        inv.sets.push_back({"p_e", "2"});
        const RunOut out = run_quiet(inv);
        CHECK(out.code == 2);
        CHECK(njson::parse(out.err)["error"]["category"] == "InvalidAtomState");
    }
    SUBCASE("computation stage exits with 3") {
        // gain r (g tau)^2 = 2 outruns kappa = 1: no steady state exists
        auto inv = make_inv("reconstruct",
                            {{"kappa", "1"}, {"tau", "1e-7"}, {"g", "1e6"},
                             {"r", "200"}, {"p_e", "1"}},
                            dir.str());
        const RunOut out = run_quiet(inv);
        CHECK(out.code == 3);
        CHECK(njson::parse(out.err)["error"]["category"] == "UnstableSystem");
    }
    SUBCASE("output stage exits with 4") {
        const auto blocker = dir.path / "blocker";
        std::ofstream(blocker) << "in the way";
        auto inv = make_inv("check-regime", reference_sets(),
                            (blocker / "sub").string());
        const RunOut out = run_quiet(inv);
        CHECK(out.code == 4);
        CHECK(njson::parse(out.err)["error"]["category"] == "IoError");
    }
}

TEST_CASE("check-regime and reconstruct documents carry the right numbers") {
    TempDir dir("docs");

    auto reg = make_inv("check-regime", reference_sets(), dir.sub("regime"));
    REQUIRE(run_quiet(reg).code == 0);
    const njson r = load_json(dir.path / "regime" / "check-regime.json");
    CHECK(r["regime"]["pump"].get<double>() == doctest::Approx(1e-3).epsilon(1e-12));
    CHECK(r["regime"]["inverse_drive"].get<double>() == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(r["regime"]["transit_duty"].get<double>() == doctest::Approx(1e-6).epsilon(1e-12));
    CHECK(r["regime"]["threshold"] == 0.1);
    CHECK(r["regime"]["ok"] == false);
    CHECK(r["regime"]["demonstrated_flux"] == false);

    auto rec = make_inv("reconstruct", reference_sets(), dir.sub("rec"));
    rec.sets.push_back({"dump_state", "true"});
    rec.sets.push_back({"n_max", "21"});
    REQUIRE(run_quiet(rec).code == 0);
    const njson g = load_json(dir.path / "rec" / "reconstruct.json");
    CHECK(g["moments"]["n_mean"].get<double>() == doctest::Approx(0.0105).epsilon(1e-12));
    CHECK(g["gaussian"]["q_parameter"].get<double>() == doctest::Approx(1.001).epsilon(1e-9));
    CHECK(g["gaussian"]["im_displacement"].get<double>() == doctest::Approx(-0.1).epsilon(1e-9));
    CHECK(g["mixture"]["re_alpha"].get<double>() == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(g["mixture"]["im_alpha"].get<double>() == doctest::Approx(-0.1).epsilon(1e-12));
    CHECK(g["mixture"]["single_photon_weight"].get<double>() ==
          doctest::Approx(5e-4).epsilon(1e-12));
    CHECK(g["state"]["rho"].size() == 22);
}

TEST_CASE("sample times default to the final time") {
    auto e = resolve(make_inv("evolve", [] {
        Sets s = reference_sets();
        s.push_back({"t_final", "3"});
        return s;
    }()));
    REQUIRE(e.sample_times.size() == 1);
    CHECK(e.sample_times[0] == 3.0);

    auto t = resolve(make_inv("trajectories", [] {
        Sets s = reference_sets();
        s.push_back({"t_final", "7"});
        s.push_back({"seed", "1"});
        return s;
    }()));
    REQUIRE(t.sample_times.size() == 1);
    CHECK(t.sample_times[0] == 7.0);
}
