#include "cqed/lindblad.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace cqed {

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

// Thermal-contact pair of dissipators: gain at rate `up` through a†, loss at
// rate `down` through a.  Creation is truncated to the retained levels, so the
// map annihilates the trace exactly.
void add_gain_loss(Eigen::MatrixXcd& out, const Eigen::MatrixXcd& rho, double up, double down) {
    const int d = rho.rows();
    for (int m = 0; m < d; ++m) {
        for (int n = 0; n < d; ++n) {
            cxd acc = 0.0;
            if (up != 0.0) {
                if (n >= 1 && m >= 1)
                    acc += up * std::sqrt(double(n) * double(m)) * rho(n - 1, m - 1);
                double wn = (n + 1 < d) ? double(n + 1) : 0.0;
                double wm = (m + 1 < d) ? double(m + 1) : 0.0;
                acc -= 0.5 * up * (wn + wm) * rho(n, m);
            }
            if (down != 0.0) {
                if (n + 1 < d && m + 1 < d)
                    acc += down * std::sqrt(double(n + 1) * double(m + 1)) * rho(n + 1, m + 1);
                acc -= 0.5 * down * double(n + m) * rho(n, m);
            }
            out(n, m) += acc;
        }
    }
}

// i [rho, H] with the linear drive H = xi a† + xi* a.
void add_drive(Eigen::MatrixXcd& out, const Eigen::MatrixXcd& rho, cxd xi) {
    if (xi == cxd(0.0)) return;
    const int d = rho.rows();
    const cxd i1(0.0, 1.0);
    const cxd xic = std::conj(xi);
    for (int m = 0; m < d; ++m) {
        for (int n = 0; n < d; ++n) {
            cxd rh = 0.0, hr = 0.0;
            if (m + 1 < d) rh += xi * std::sqrt(double(m + 1)) * rho(n, m + 1);
            if (m >= 1) rh += xic * std::sqrt(double(m)) * rho(n, m - 1);
            if (n >= 1) hr += xi * std::sqrt(double(n)) * rho(n - 1, m);
            if (n + 1 < d) hr += xic * std::sqrt(double(n + 1)) * rho(n + 1, m);
            out(n, m) += i1 * (rh - hr);
        }
    }
}

using Generator = std::function<Eigen::MatrixXcd(const Eigen::MatrixXcd&)>;

Generator bind_generator(const SystemParams& p, GeneratorKind kind, FockTruncation t) {
    switch (kind) {
        case GeneratorKind::DecayOnly:
            return [kappa = p.kappa](const Eigen::MatrixXcd& rho) {
                return apply_decay_dissipator(rho, kappa);
            };
        case GeneratorKind::EffectiveSecondOrder:
            return [xi = p.xi(), g1 = p.gamma1(), g2 = p.gamma2()](const Eigen::MatrixXcd& rho) {
                Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(rho.rows(), rho.cols());
                add_drive(out, rho, xi);
                add_gain_loss(out, rho, g1, g2);
                return out;
            };
        case GeneratorKind::FullCoarseGrained:
            return [kb = kick_blocks(t, p.g_tau()), atom = p.atom, r = p.r,
                    kappa = p.kappa](const Eigen::MatrixXcd& rho) {
                Eigen::MatrixXcd out = interaction_map_raw(rho, kb, atom);
                out -= rho;
                out *= r;
                out += apply_decay_dissipator(rho, kappa);
                return out;
            };
    }
    throw InvalidState("bind_generator: unknown generator kind");
}

double trace_norm(const Eigen::MatrixXcd& h) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().sum();
}

double relaxation_rate(const SystemParams& p, GeneratorKind kind) {
    if (kind == GeneratorKind::DecayOnly) {
        if (p.kappa <= 0.0)
            throw UnstableSystem("steady_state: decay-only dynamics need kappa > 0");
        return p.kappa;
    }
    p.require_stable();
    return -p.delta();
}

Eigen::MatrixXcd longtime_matrix(const Generator& gen, const SystemParams& p, GeneratorKind kind,
                                 FockTruncation trunc, const SteadyOptions& opt) {
    const int d = trunc.dim();
    const double chunk = 1.0 / relaxation_rate(p, kind);
    OdeOptions oo;
    oo.reltol = opt.reltol;
    oo.abstol = opt.abstol;
    auto watch_leak = [&](double, const Eigen::MatrixXcd& y) {
        double leak = std::real(y(d - 1, d - 1));
        if (leak > opt.leak_tol)
            throw TruncationTooSmall("steady_state: top level occupation " + fmt(leak) +
                                     " exceeds " + fmt(opt.leak_tol) + " at n_max = " +
                                     std::to_string(trunc.n_max));
    };
    Eigen::MatrixXcd rho = vacuum_state(trunc).matrix();
    for (int c = 0; c < opt.max_chunks; ++c) {
        Eigen::MatrixXcd next = integrate_dopri5(gen, rho, 0.0, chunk, oo, watch_leak);
        double change = trace_norm(next - rho);
        rho.swap(next);
        if (change < opt.trace_change_tol) {
            double resid = gen(rho).norm();
            if (resid <= opt.residual_tol) return rho;
        }
    }
    throw NoConvergence("steady_state: no fixed point after " + std::to_string(opt.max_chunks) +
                        " relaxation times (trace-norm change still above " +
                        fmt(opt.trace_change_tol) + " or residual above " +
                        fmt(opt.residual_tol) + ")");
}

}  // namespace

void SystemParams::validate() const {
    auto finite_nonneg = [](double v, const char* name) {
        if (!std::isfinite(v) || v < 0.0)
            throw InvalidState(std::string("SystemParams: ") + name + " must be finite and >= 0");
    };
    finite_nonneg(g, "g");
    finite_nonneg(tau, "tau");
    finite_nonneg(r, "r");
    finite_nonneg(kappa, "kappa");
    atom.validate();
}

void SystemParams::require_stable() const {
    if (!(delta() < 0.0))
        throw UnstableSystem("SystemParams: gain " + fmt(gamma1()) + " >= loss " + fmt(gamma2()) +
                             ", no steady state");
}

Eigen::MatrixXcd apply_decay_dissipator(const Eigen::MatrixXcd& rho, double kappa) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(rho.rows(), rho.cols());
    add_gain_loss(out, rho, 0.0, kappa);
    return out;
}

Eigen::MatrixXcd apply_generator(const Eigen::MatrixXcd& rho, const SystemParams& p,
                                 GeneratorKind kind) {
    if (rho.rows() != rho.cols())
        throw DimensionMismatch("apply_generator: matrix must be square");
    p.validate();
    return bind_generator(p, kind, FockTruncation{int(rho.rows()) - 1})(rho);
}

CavityState evolve(const CavityState& rho0, const SystemParams& p, GeneratorKind kind,
                   double t_final, const EvolveOptions& opt) {
    p.validate();
    if (t_final < 0.0) throw InvalidState("evolve: t_final must be >= 0");
    const FockTruncation trunc = rho0.trunc();
    const int d = trunc.dim();
    auto gen = bind_generator(p, kind, trunc);
    OdeOptions oo;
    oo.reltol = opt.reltol;
    oo.abstol = opt.abstol;
    const double leak_tol = rho0.leak_tol();
    Eigen::MatrixXcd y =
        integrate_dopri5(gen, rho0.matrix(), 0.0, t_final, oo,
                         [&](double t, const Eigen::MatrixXcd& m) {
                             double leak = std::real(m(d - 1, d - 1));
                             if (leak > leak_tol)
                                 throw TruncationTooSmall(
                                     "evolve: top level occupation " + fmt(leak) + " exceeds " +
                                     fmt(leak_tol) + " at t = " + fmt(t));
                         });
    return CavityState(trunc, std::move(y), CavityState::Check::Validate, leak_tol);
}

int suggest_n_max(const SystemParams& p) {
    p.validate();
    double a0 = p.delta() < 0.0 ? std::abs(2.0 * p.xi() / p.delta()) : 0.0;
    double a2 = a0 * a0;
    return int(std::ceil(a2 + 10.0 * std::sqrt(a2 + 1.0) + 10.0));
}

FockTruncation auto_truncation(const SystemParams& p, GeneratorKind kind,
                               const SteadyOptions& opt) {
    int n = suggest_n_max(p);
    auto mean_n = [&](int n_max) {
        FockTruncation t{n_max};
        Eigen::MatrixXcd rho = longtime_matrix(bind_generator(p, kind, t), p, kind, t, opt);
        double acc = 0.0;
        for (int k = 1; k <= n_max; ++k) acc += k * std::real(rho(k, k));
        return acc;
    };
    double n1 = mean_n(n);
    for (int iter = 0; iter < 5; ++iter) {
        double n2 = mean_n(2 * n);
        if (std::abs(n2 - n1) <= 1e-8 * std::abs(n2) + 5e-11) return FockTruncation{n};
        n *= 2;
        n1 = n2;
    }
    throw NoConvergence("auto_truncation: mean occupation did not settle after 5 doublings");
}

CavityState steady_state(const SystemParams& p, GeneratorKind kind, SteadyMethod method,
                         FockTruncation trunc, const SteadyOptions& opt) {
    p.validate();
    trunc.validate();
    auto gen = bind_generator(p, kind, trunc);
    if (method == SteadyMethod::LongTime) {
        Eigen::MatrixXcd rho = longtime_matrix(gen, p, kind, trunc, opt);
        return CavityState(trunc, std::move(rho), CavityState::Check::Validate, opt.leak_tol);
    }
    relaxation_rate(p, kind);  // rejects systems with no unique fixed point up front
    Eigen::MatrixXcd rho = steady_via_nullspace(gen, trunc.dim());
    double resid = gen(rho).norm();
    if (resid > opt.residual_tol)
        throw NoConvergence("steady_state: null-space residual " + fmt(resid) + " exceeds " +
                            fmt(opt.residual_tol));
    return CavityState(trunc, std::move(rho), CavityState::Check::Validate, opt.leak_tol);
}

CavityState steady_state(const SystemParams& p, GeneratorKind kind, SteadyMethod method,
                         const SteadyOptions& opt) {
    return steady_state(p, kind, method, auto_truncation(p, kind, opt), opt);
}

Eigen::MatrixXcd steady_via_nullspace(
    const std::function<Eigen::MatrixXcd(const Eigen::MatrixXcd&)>& apply, int dim) {
    if (dim < 1) throw InvalidState("steady_via_nullspace: dim must be >= 1");
    const int d2 = dim * dim;
    Eigen::MatrixXcd big(d2, d2);
    Eigen::MatrixXcd basis = Eigen::MatrixXcd::Zero(dim, dim);
    for (int j = 0; j < dim; ++j) {
        for (int i = 0; i < dim; ++i) {
            basis(i, j) = 1.0;
            Eigen::MatrixXcd out = apply(basis);
            if (out.rows() != dim || out.cols() != dim)
                throw DimensionMismatch("steady_via_nullspace: map changed matrix shape");
            big.col(j * dim + i) = Eigen::Map<Eigen::VectorXcd>(out.data(), d2);
            basis(i, j) = 0.0;
        }
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(big);
    if (es.info() != Eigen::Success)
        throw NoConvergence("steady_via_nullspace: eigensolver did not converge");
    const Eigen::VectorXcd& vals = es.eigenvalues();
    const double tol = 1e-8 * std::max(1.0, vals.cwiseAbs().maxCoeff());
    int kernel_index = -1;
    int count = 0;
    for (int k = 0; k < d2; ++k) {
        if (std::abs(vals(k)) <= tol) {
            ++count;
            kernel_index = k;
        }
    }
    if (count != 1)
        throw DegenerateNullSpace("steady_via_nullspace: " + std::to_string(count) +
                                  " kernel vectors within tolerance, expected exactly 1");
    Eigen::VectorXcd v = es.eigenvectors().col(kernel_index);
    Eigen::MatrixXcd x = Eigen::Map<Eigen::MatrixXcd>(v.data(), dim, dim);
    Eigen::MatrixXcd h = 0.5 * (x + x.adjoint().eval());
    double tr = std::real(h.trace());
    if (std::abs(tr) < 1e-8 * h.norm() * std::sqrt(double(dim)))
        throw DegenerateNullSpace("steady_via_nullspace: kernel vector is traceless");
    h /= tr;
    return h;
}

}  // namespace cqed
