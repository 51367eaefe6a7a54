#include "cqed/metrology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cqed/errors.hpp"

namespace cqed {

namespace {

double lambda_sq(const SystemParams& p) { return std::norm(p.atom.lambda); }

double require_photon_budget(const SystemParams& p) {
    if (!(p.kappa > 0.0)) throw InvalidState("photon budget n_c = r/kappa needs kappa > 0");
    if (!(p.r > 0.0)) throw InvalidState("photon budget n_c = r/kappa needs r > 0");
    return p.n_c();
}

// Shared by component_fluctuation and mixture_fluctuation so that the mixture
// endpoints reproduce the component values bit for bit.
double component_scale(const SystemParams& p) {
    const double nc = require_photon_budget(p);
    return 16.0 * nc * nc * p.tau * p.tau * lambda_sq(p);
}

}  // namespace

double mean_number_slope_g(const SystemParams& p) {
    p.validate();
    p.require_stable();
    if (!(p.g > 0.0)) throw ZeroSensitivity("occupation carries no signal at g = 0");
    const double u = p.gamma2() - p.gamma1();
    const double xi2 = std::norm(p.xi());
    return (2.0 / p.g) *
           (p.gamma1() * p.kappa / (u * u) + 4.0 * xi2 * (2.0 * p.kappa - u) / (u * u * u));
}

double mean_number_slope_g_fd(const SystemParams& p, double rel_step) {
    p.validate();
    p.require_stable();
    if (!(p.g > 0.0)) throw ZeroSensitivity("occupation carries no signal at g = 0");
    if (!(rel_step > 0.0)) throw InvalidState("finite-difference step must be positive");
    SystemParams up = p;
    SystemParams down = p;
    up.g = p.g * (1.0 + rel_step);
    down.g = p.g * (1.0 - rel_step);
    const double n_up = closed_form_moments(up).number;
    const double n_down = closed_form_moments(down).number;
    return (n_up - n_down) / (2.0 * p.g * rel_step);
}

FluctuationResult fluctuation(const SystemParams& p) {
    const double slope = mean_number_slope_g(p);
    if (slope == 0.0) throw ZeroSensitivity("occupation is stationary in g at these parameters");
    FluctuationResult out;
    out.derivative = slope;
    out.variance = closed_form_moments(p).number_var;
    out.delta_g2_exact = out.variance / (slope * slope);
    out.delta_g2_approx = fluctuation_approx(p);
    return out;
}

double fluctuation_approx(const SystemParams& p) {
    p.validate();
    const double nc = require_photon_budget(p);
    const double weight = p.atom.p_e + 4.0 * nc * lambda_sq(p);
    if (!(weight > 0.0)) throw ZeroSensitivity("no excited population and no coherence: nothing drives the field");
    return 1.0 / (4.0 * p.tau * p.tau * nc * weight);
}

double coherence_enhancement(const SystemParams& p) {
    p.validate();
    const double nc = require_photon_budget(p);
    if (!(p.atom.p_e > 0.0)) throw ZeroSensitivity("incoherent baseline is undefined at p_e = 0");
    return 1.0 + 4.0 * nc * lambda_sq(p) / p.atom.p_e;
}

double component_fluctuation(int component, const SystemParams& p) {
    p.validate();
    if (component < 1 || component > 2) throw InvalidState("the steady mixture has components 1 and 2");
    if (lambda_sq(p) == 0.0)
        throw ZeroCoherence("components are displaced by the atomic coherence; lambda = 0 leaves them blind to g");
    return (2.0 * component - 1.0) / component_scale(p);
}

double mixture_fluctuation(double weight, const SystemParams& p) {
    p.validate();
    if (!(weight >= 0.0 && weight <= 1.0)) throw InvalidState("mixture weight must lie in [0, 1]");
    const double l2 = lambda_sq(p);
    if (l2 == 0.0)
        throw ZeroCoherence("components are displaced by the atomic coherence; lambda = 0 leaves them blind to g");
    if (!(p.g > 0.0)) throw ZeroSensitivity("occupation carries no signal at g = 0");
    const double nc = p.n_c();
    const double nc2 = nc * nc;
    const double tau2 = p.tau * p.tau;
    const double first = (2.0 * weight + 1.0) / component_scale(p);
    const double second = (weight - weight * weight) / (64.0 * nc2 * nc2 * p.g * p.g * tau2 * tau2 * l2 * l2);
    return first + second;
}

RegimeReport check_regime(const SystemParams& p, double threshold) {
    p.validate();
    const double nc = p.n_c();
    const double gt = p.g_tau();
    RegimeReport rep;
    rep.pump = nc * gt * gt;
    rep.inverse_drive = 1.0 / (nc * p.tau * p.g);
    rep.decay_window = p.r * p.tau;  // n_c tau kappa with n_c = r/kappa substituted
    rep.transit_duty = p.r * p.tau;
    rep.decay_per_g = (p.g > 0.0) ? p.kappa / p.g : std::numeric_limits<double>::infinity();
    rep.threshold = threshold;
    rep.ok = rep.pump <= threshold && rep.inverse_drive <= threshold && rep.decay_window <= threshold;
    rep.demonstrated_flux = std::abs(nc - 7.3) <= 7.3 * 5e-3;
    return rep;
}

AtomParams theta_to_atom(double theta) {
    if (!std::isfinite(theta)) throw InvalidAtomState("mixing angle must be finite");
    // lambda = sin(theta)/2 taken as primary; the populations follow from the
    // pure-state constraints p_e + p_g = 1, p_e p_g = lambda^2.  Algebraically
    // identical to sin^2/cos^2 of the half angle, but exact where it matters:
    // theta = pi/2 lands on p_e = p_g = lambda = 1/2 bitwise, so the two ways
    // of specifying that atom produce identical downstream numbers.
    const double lambda = 0.5 * std::sin(theta);
    const double gap = std::sqrt(std::max(0.0, 1.0 - 4.0 * lambda * lambda));
    const bool upper = std::cos(theta) < 0.0;  // past pi/2 the excited state dominates
    AtomParams atom;
    atom.p_e = upper ? 0.5 * (1.0 + gap) : 0.5 * (1.0 - gap);
    atom.p_g = 1.0 - atom.p_e;
    atom.lambda = cxd(lambda, 0.0);
    return atom;
}

double local_scaling_exponent(const SystemParams& p) {
    p.validate();
    const double nc = require_photon_budget(p);
    const double coherent = 4.0 * nc * lambda_sq(p);
    const double weight = p.atom.p_e + coherent;
    if (!(weight > 0.0)) throw ZeroSensitivity("no excited population and no coherence: nothing drives the field");
    return -1.0 - coherent / weight;
}

std::vector<double> log_spaced(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi > lo) || count < 2)
        throw InvalidState("log grid needs 0 < lo < hi and at least two points");
    std::vector<double> out(static_cast<size_t>(count));
    const double step = std::log(hi / lo) / (count - 1);
    for (int k = 0; k < count; ++k) out[static_cast<size_t>(k)] = lo * std::exp(step * k);
    out.front() = lo;
    out.back() = hi;
    return out;
}

std::vector<ScanRow> scan_rows(const SystemParams& base, const std::vector<double>& n_c_grid,
                               const std::vector<double>& lambdas) {
    base.validate();
    if (!(base.kappa > 0.0)) throw InvalidState("flux scans set r = n_c * kappa and need kappa > 0");
    if (n_c_grid.empty() || lambdas.empty()) throw InvalidState("scan grid is empty");

    std::vector<ScanRow> rows;
    rows.reserve(n_c_grid.size() * lambdas.size());
    for (double lam : lambdas) {
        SystemParams p = base;
        p.atom.lambda = cxd(lam, 0.0);
        p.atom.validate();
        for (double nc : n_c_grid) {
            if (!(nc > 0.0)) throw InvalidState("n_c must be positive");
            p.r = nc * base.kappa;
            ScanRow row;
            row.n_c = nc;
            row.lambda = lam;
            row.delta_g2_approx = fluctuation_approx(p);
            row.delta_g2_exact = std::numeric_limits<double>::quiet_NaN();
            try {
                row.delta_g2_exact = fluctuation(p).delta_g2_exact;
            } catch (const UnstableSystem&) {
            } catch (const ZeroSensitivity&) {
            }
            row.regime_ok = check_regime(p).ok;
            rows.push_back(row);
        }
    }
    return rows;
}

ScanResult scan_and_fit(const SystemParams& base, const std::vector<double>& n_c_grid,
                        const std::vector<double>& lambdas, double fit_lo, double fit_hi) {
    ScanResult res;
    res.rows = scan_rows(base, n_c_grid, lambdas);
    res.fits.reserve(lambdas.size());
    for (double lam : lambdas) res.fits.push_back(fit_loglog(res.rows, lam, fit_lo, fit_hi));
    return res;
}

SlopeFit fit_loglog(const std::vector<ScanRow>& rows, double lambda, double fit_lo, double fit_hi) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (const ScanRow& row : rows) {
        if (row.lambda != lambda) continue;
        if (row.n_c < fit_lo || row.n_c > fit_hi) continue;
        xs.push_back(std::log10(row.n_c));
        ys.push_back(std::log10(row.delta_g2_approx));
    }
    if (xs.size() < 2) throw EmptyWindow("slope fit needs at least two scan points inside the window");

    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (size_t k = 0; k < xs.size(); ++k) {
        mx += xs[k];
        my += ys[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (size_t k = 0; k < xs.size(); ++k) {
        sxx += (xs[k] - mx) * (xs[k] - mx);
        sxy += (xs[k] - mx) * (ys[k] - my);
    }
    if (sxx == 0.0) throw EmptyWindow("slope fit needs at least two distinct n_c values inside the window");

    SlopeFit fit;
    fit.lambda = lambda;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (size_t k = 0; k < xs.size(); ++k) {
        const double r = ys[k] - (fit.intercept + fit.slope * xs[k]);
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

}  // namespace cqed
