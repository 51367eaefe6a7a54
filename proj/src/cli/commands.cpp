#include "cqed/cli.hpp"

#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "cqed/gaussian.hpp"
#include "cqed/metrology.hpp"
#include "cqed/moments.hpp"

namespace cqed::cli {
namespace {

using ojson = nlohmann::ordered_json;

// Shortest decimal that round-trips; deterministic across runs and platforms.
std::string num(double x) {
    std::array<char, 40> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), res.ptr);
}

const char* generator_name(GeneratorKind k) {
    switch (k) {
        case GeneratorKind::FullCoarseGrained: return "full";
        case GeneratorKind::EffectiveSecondOrder: return "effective";
        case GeneratorKind::DecayOnly: return "decay";
    }
    return "effective";
}

const char* method_name(SteadyMethod m) {
    return m == SteadyMethod::LongTime ? "longtime" : "nullspace";
}

// Everything that determines the numbers in an output file, in a fixed order.
// Runtime-only choices (thread count, output directory, format) are left out
// so reruns of the same physics produce byte-identical files.
ojson config_json(const ResolvedConfig& cfg) {
    const SystemParams& p = cfg.params;
    const bool scan = cfg.command == "scan";
    const bool timed = cfg.command == "evolve" || cfg.command == "trajectories";
    ojson j;
    j["units"] = cfg.dimensionless ? "dimensionless" : "si";
    j["g"] = p.g;
    j["g_tau"] = p.g_tau();
    j["tau"] = p.tau;
    if (!scan) {
        j["r"] = p.r;
        j["n_c"] = p.n_c();
    }
    j["kappa"] = p.kappa;
    j["p_e"] = p.atom.p_e;
    j["p_g"] = p.atom.p_g;
    j["lambda"] = p.atom.lambda.real();
    j["generator"] = generator_name(cfg.generator);
    j["method"] = method_name(cfg.method);
    j["n_max"] = cfg.n_max;
    j["initial_state"] = cfg.initial_text;
    if (timed) {
        j["t_final"] = cfg.t_final;
        j["sample_times"] = cfg.sample_times;
    }
    j["reltol"] = cfg.reltol;
    j["abstol"] = cfg.abstol;
    if (cfg.command == "trajectories") {
        j["trajectories"] = cfg.trajectories;
        j["seed"] = cfg.seed;
    }
    j["regime_threshold"] = cfg.regime_threshold;
    if (scan) {
        j["nc_min"] = cfg.nc_min;
        j["nc_max"] = cfg.nc_max;
        j["nc_points"] = cfg.nc_points;
        j["lambdas"] = cfg.lambdas;
        j["fit_lo"] = cfg.fit_lo;
        j["fit_hi"] = cfg.fit_hi;
    } else {
        ojson d;
        d["xi_re"] = p.xi().real();
        d["xi_im"] = p.xi().imag();
        d["alpha"] = p.alpha();
        d["gamma1"] = p.gamma1();
        d["gamma2"] = p.gamma2();
        d["delta"] = p.delta();
        j["derived"] = d;
    }
    return j;
}

std::string csv_value(const ojson& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ',';
            out += csv_value(v[i]);
        }
        return out;
    }
    if (v.is_number_float()) return num(v.get<double>());
    return v.dump();
}

void append_metadata(std::string& body, const ResolvedConfig& cfg) {
    body += "# schema_version = 1\n";
    body += "# command = " + cfg.command + "\n";
    const ojson echo = config_json(cfg);  // keep alive across the items() proxy
    for (const auto& [key, value] : echo.items()) {
        if (value.is_object()) {
            for (const auto& [k2, v2] : value.items())
                body += "# " + k2 + " = " + csv_value(v2) + "\n";
        } else {
            body += "# " + key + " = " + csv_value(value) + "\n";
        }
    }
}

std::string write_file(const ResolvedConfig& cfg, const std::string& name,
                       const std::string& body) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec)
        throw IoError("cannot create output directory '" + cfg.out_dir + "': " + ec.message());
    const fs::path path = fs::path(cfg.out_dir) / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << body;
    out.flush();
    if (!out) throw IoError("failed while writing '" + path.string() + "'");
    return path.string();
}

std::string json_body(const ojson& doc) { return doc.dump(2) + "\n"; }

ojson doc_skeleton(const ResolvedConfig& cfg) {
    ojson doc;
    doc["schema_version"] = 1;
    doc["command"] = cfg.command;
    doc["config"] = config_json(cfg);
    return doc;
}

ojson moments_json(const MomentVector& m) {
    ojson j;
    j["n_mean"] = m[kNumber].real();
    j["n2_mean"] = m[kNumberSq].real();
    j["n_var"] = number_variance(m);
    j["re_a"] = m[kAnn].real();
    j["im_a"] = m[kAnn].imag();
    j["re_a2"] = m[kAnnSq].real();
    j["im_a2"] = m[kAnnSq].imag();
    return j;
}

ojson closed_form_json(const ClosedFormMoments& c) {
    ojson j;
    j["n_mean"] = c.number;
    j["n2_mean"] = c.number_sq;
    j["n_var"] = c.number_var;
    j["re_a"] = c.field.real();
    j["im_a"] = c.field.imag();
    j["re_a2"] = c.field_sq.real();
    j["im_a2"] = c.field_sq.imag();
    return j;
}

ojson gaussian_json(const GaussianParams& gp) {
    ojson j;
    j["re_displacement"] = gp.displacement.real();
    j["im_displacement"] = gp.displacement.imag();
    j["squeeze"] = gp.squeeze;
    j["squeeze_phase"] = gp.squeeze_phase;
    j["q_parameter"] = gp.q_parameter;
    j["nbar"] = gp.nbar;
    j["rotation"] = gp.rotation;
    return j;
}

ojson mixture_json(const SteadyMixture& mix) {
    ojson j;
    j["re_alpha"] = mix.alpha.real();
    j["im_alpha"] = mix.alpha.imag();
    j["single_photon_weight"] = mix.single_photon_weight;
    return j;
}

ojson regime_json(const RegimeReport& r) {
    ojson j;
    j["pump"] = r.pump;
    j["inverse_drive"] = r.inverse_drive;
    j["decay_window"] = r.decay_window;
    j["transit_duty"] = r.transit_duty;
    j["decay_per_g"] = r.decay_per_g;
    j["threshold"] = r.threshold;
    j["ok"] = r.ok;
    j["demonstrated_flux"] = r.demonstrated_flux;
    return j;
}

ojson state_json(const CavityState& s) {
    const Eigen::MatrixXcd& rho = s.matrix();
    ojson rows = ojson::array();
    for (Eigen::Index i = 0; i < rho.rows(); ++i) {
        ojson row = ojson::array();
        for (Eigen::Index k = 0; k < rho.cols(); ++k)
            row.push_back(ojson::array({rho(i, k).real(), rho(i, k).imag()}));
        rows.push_back(std::move(row));
    }
    ojson j;
    j["n_max"] = s.trunc().n_max;
    j["entries"] = "[re, im] pairs, row major";
    j["rho"] = std::move(rows);
    return j;
}

void emit_error(std::ostream& err, const std::string& category, const std::string& message) {
    ojson j;
    j["error"]["category"] = category;
    j["error"]["message"] = message;
    err << j.dump() << "\n";
}

}  // namespace

std::vector<std::string> cmd_steady(const ResolvedConfig& cfg) {
    const SystemParams& p = cfg.params;
    SteadyOptions opt;
    opt.reltol = cfg.reltol;
    opt.abstol = cfg.abstol;
    const CavityState state =
        steady_state(p, cfg.generator, cfg.method, FockTruncation{cfg.n_max}, opt);

    ojson doc = doc_skeleton(cfg);
    doc["moments"] = moments_json(extract_moments(state));
    if (p.stable()) {
        doc["closed_form"] = closed_form_json(closed_form_moments(p));
        ojson approx;
        approx["n_mean"] = approx_mean_number(p);
        doc["approx"] = approx;
        doc["gaussian"] = gaussian_json(reconstruct(steady_moments(p)));
        doc["mixture"] = mixture_json(steady_mixture(p));
    }
    doc["regime"] = regime_json(check_regime(p, cfg.regime_threshold));
    if (cfg.dump_state) doc["state"] = state_json(state);
    return {write_file(cfg, "steady.json", json_body(doc))};
}

std::vector<std::string> cmd_evolve(const ResolvedConfig& cfg) {
    const SystemParams& p = cfg.params;
    CavityState state = make_initial_state(cfg.initial, p, FockTruncation{cfg.n_max});
    const EvolveOptions opt{cfg.reltol, cfg.abstol};

    struct Row {
        double t, n, re, im, n2;
    };
    std::vector<Row> rows;
    rows.reserve(cfg.sample_times.size());
    double prev = 0.0;
    for (const double t : cfg.sample_times) {
        if (t > prev) state = evolve(state, p, cfg.generator, t - prev, opt);
        prev = t;
        const MomentVector m = extract_moments(state);
        rows.push_back({t, m[kNumber].real(), m[kAnn].real(), m[kAnn].imag(),
                        m[kNumberSq].real()});
    }

    if (cfg.format == "csv") {
        std::string body;
        append_metadata(body, cfg);
        body += "t,n_mean,re_a,im_a,n2_mean\n";
        for (const Row& r : rows)
            body += num(r.t) + "," + num(r.n) + "," + num(r.re) + "," + num(r.im) + "," +
                    num(r.n2) + "\n";
        return {write_file(cfg, "evolve.csv", body)};
    }
    ojson doc = doc_skeleton(cfg);
    ojson arr = ojson::array();
    for (const Row& r : rows) {
        ojson row;
        row["t"] = r.t;
        row["n_mean"] = r.n;
        row["re_a"] = r.re;
        row["im_a"] = r.im;
        row["n2_mean"] = r.n2;
        arr.push_back(std::move(row));
    }
    doc["rows"] = std::move(arr);
    if (cfg.dump_state) doc["state"] = state_json(state);
    return {write_file(cfg, "evolve.json", json_body(doc))};
}

std::vector<std::string> cmd_trajectories(const ResolvedConfig& cfg) {
    TrajectoryConfig tc;
    tc.params = cfg.params;
    tc.trunc = FockTruncation{cfg.n_max};
    tc.t_final = cfg.t_final;
    tc.n_trajectories = cfg.trajectories;
    tc.seed = cfg.seed;
    tc.sample_times = cfg.sample_times;
    tc.initial = cfg.initial;
    const EnsembleResult res = ensemble_average(tc, cfg.threads);

    if (cfg.format == "csv") {
        std::string body;
        append_metadata(body, cfg);
        body += "# rng = " + res.rng + "\n";
        body += std::string("# crowded = ") + (res.crowded ? "true" : "false") + "\n";
        body += "t,n_mean,n_stderr,re_a,im_a,re_a_stderr,im_a_stderr,n2_mean,n2_stderr\n";
        for (std::size_t k = 0; k < res.times.size(); ++k) {
            const SampleStats& s = res.stats[k];
            body += num(res.times[k]) + "," + num(s.number_mean) + "," + num(s.number_stderr) +
                    "," + num(s.field_mean.real()) + "," + num(s.field_mean.imag()) + "," +
                    num(s.field_re_stderr) + "," + num(s.field_im_stderr) + "," +
                    num(s.number_sq_mean) + "," + num(s.number_sq_stderr) + "\n";
        }
        return {write_file(cfg, "trajectories.csv", body)};
    }
    ojson doc = doc_skeleton(cfg);
    doc["rng"] = res.rng;
    doc["crowded"] = res.crowded;
    ojson arr = ojson::array();
    for (std::size_t k = 0; k < res.times.size(); ++k) {
        const SampleStats& s = res.stats[k];
        ojson row;
        row["t"] = res.times[k];
        row["n_mean"] = s.number_mean;
        row["n_stderr"] = s.number_stderr;
        row["re_a"] = s.field_mean.real();
        row["im_a"] = s.field_mean.imag();
        row["re_a_stderr"] = s.field_re_stderr;
        row["im_a_stderr"] = s.field_im_stderr;
        row["n2_mean"] = s.number_sq_mean;
        row["n2_stderr"] = s.number_sq_stderr;
        arr.push_back(std::move(row));
    }
    doc["rows"] = std::move(arr);
    if (cfg.dump_state) doc["state"] = state_json(res.mean_state);
    return {write_file(cfg, "trajectories.json", json_body(doc))};
}

std::vector<std::string> cmd_scan(const ResolvedConfig& cfg) {
    const std::vector<double> grid = cfg.nc_points == 1
                                         ? std::vector<double>{cfg.nc_min}
                                         : log_spaced(cfg.nc_min, cfg.nc_max, cfg.nc_points);
    const std::vector<ScanRow> rows = scan_rows(cfg.params, grid, cfg.lambdas);

    std::vector<std::string> written;
    if (cfg.format == "csv") {
        std::string body;
        append_metadata(body, cfg);
        body += "n_c,lambda,delta_g2_approx,delta_g2_exact,regime_ok\n";
        for (const ScanRow& r : rows)
            body += num(r.n_c) + "," + num(r.lambda) + "," + num(r.delta_g2_approx) + "," +
                    num(r.delta_g2_exact) + "," + (r.regime_ok ? "true" : "false") + "\n";
        written.push_back(write_file(cfg, "scan.csv", body));
    } else {
        ojson doc = doc_skeleton(cfg);
        ojson arr = ojson::array();
        for (const ScanRow& r : rows) {
            ojson row;
            row["n_c"] = r.n_c;
            row["lambda"] = r.lambda;
            row["delta_g2_approx"] = r.delta_g2_approx;
            row["delta_g2_exact"] = r.delta_g2_exact;  // NaN serializes as null
            row["regime_ok"] = r.regime_ok;
            arr.push_back(std::move(row));
        }
        doc["rows"] = std::move(arr);
        written.push_back(write_file(cfg, "scan.json", json_body(doc)));
    }

    // Fits only after the rows are on disk: a degenerate window still leaves
    // the data behind.
    std::vector<SlopeFit> fits;
    fits.reserve(cfg.lambdas.size());
    for (const double lam : cfg.lambdas)
        fits.push_back(fit_loglog(rows, lam, cfg.fit_lo, cfg.fit_hi));

    ojson doc = doc_skeleton(cfg);
    ojson arr = ojson::array();
    for (const SlopeFit& f : fits) {
        ojson row;
        row["lambda"] = f.lambda;
        row["slope"] = f.slope;
        row["intercept"] = f.intercept;
        row["residual"] = f.residual;
        arr.push_back(std::move(row));
    }
    doc["fits"] = std::move(arr);
    written.push_back(write_file(cfg, "scan_fits.json", json_body(doc)));
    return written;
}

std::vector<std::string> cmd_reconstruct(const ResolvedConfig& cfg) {
    const SystemParams& p = cfg.params;
    const MomentVector m = steady_moments(p);
    const GaussianParams gp = reconstruct(m);

    ojson doc = doc_skeleton(cfg);
    doc["moments"] = moments_json(m);
    doc["gaussian"] = gaussian_json(gp);
    doc["mixture"] = mixture_json(steady_mixture(p));
    if (cfg.dump_state)
        doc["state"] = state_json(build_state(FockTruncation{cfg.n_max}, gp));
    return {write_file(cfg, "reconstruct.json", json_body(doc))};
}

std::vector<std::string> cmd_check_regime(const ResolvedConfig& cfg) {
    ojson doc = doc_skeleton(cfg);
    doc["regime"] = regime_json(check_regime(cfg.params, cfg.regime_threshold));
    return {write_file(cfg, "check-regime.json", json_body(doc))};
}

int run(const Invocation& inv, std::ostream& err, std::ostream& out) {
    ResolvedConfig cfg;
    try {
        cfg = resolve(inv);
    } catch (const Error& e) {
        emit_error(err, e.category(), e.what());
        return 2;
    } catch (const std::exception& e) {
        emit_error(err, "ConfigError", e.what());
        return 2;
    }
    try {
        std::vector<std::string> written;
        if (cfg.command == "steady") written = cmd_steady(cfg);
        else if (cfg.command == "evolve") written = cmd_evolve(cfg);
        else if (cfg.command == "trajectories") written = cmd_trajectories(cfg);
        else if (cfg.command == "scan") written = cmd_scan(cfg);
        else if (cfg.command == "reconstruct") written = cmd_reconstruct(cfg);
        else written = cmd_check_regime(cfg);
        for (const std::string& path : written) out << path << "\n";
        return 0;
    } catch (const IoError& e) {
        emit_error(err, e.category(), e.what());
        return 4;
    } catch (const Error& e) {
        emit_error(err, e.category(), e.what());
        return 3;
    } catch (const std::exception& e) {
        emit_error(err, "InternalError", e.what());
        return 3;
    }
}

int run(const Invocation& inv, std::ostream& err) { return run(inv, err, std::cout); }

}  // namespace cqed::cli
