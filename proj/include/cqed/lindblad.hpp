#pragma once

#include <Eigen/Dense>
#include <functional>

#include "cqed/atom.hpp"
#include "cqed/fock.hpp"
#include "cqed/ode.hpp"

namespace cqed {

// Physical parameters of the driven cavity: atoms prepared in `atom` cross the
// cavity at rate r, each interacting for a time tau with vacuum Rabi coupling g,
// while the cavity field decays at rate kappa.
struct SystemParams {
    double g = 0.0;
    double tau = 0.0;
    double r = 0.0;
    double kappa = 0.0;
    AtomParams atom;

    void validate() const;

    double g_tau() const { return g * tau; }
    double n_c() const { return r / kappa; }              // atoms per cavity lifetime
    cxd xi() const { return r * g_tau() * atom.lambda; }  // effective drive amplitude
    double alpha() const { return r * g_tau() * g_tau(); }
    double gamma1() const { return alpha() * atom.p_e; }            // incoherent gain
    double gamma2() const { return alpha() * atom.p_g + kappa; }    // incoherent loss
    double delta() const { return gamma1() - gamma2(); }

    bool stable() const { return delta() < 0.0; }
    void require_stable() const;
};

enum class GeneratorKind {
    FullCoarseGrained,     // r [M(tau) - 1] rho + decay
    EffectiveSecondOrder,  // coherent drive + two-bath gain/loss, O((g tau)^2)
    DecayOnly,             // cavity decay alone
};

enum class SteadyMethod {
    LongTime,   // integrate until the state stops moving
    NullSpace,  // kernel of the vectorized generator
};

// (kappa/2)(2 a rho a+ - a+a rho - rho a+a), applied bandwise in O(d^2).
Eigen::MatrixXcd apply_decay_dissipator(const Eigen::MatrixXcd& rho, double kappa);

// Action of the chosen generator on an arbitrary (not necessarily Hermitian)
// matrix, in O(d^2).
Eigen::MatrixXcd apply_generator(const Eigen::MatrixXcd& rho, const SystemParams& p,
                                 GeneratorKind kind);

struct EvolveOptions {
    double reltol = 1e-10;
    double abstol = 1e-13;
};

CavityState evolve(const CavityState& rho0, const SystemParams& p, GeneratorKind kind,
                   double t_final, const EvolveOptions& opt = {});

struct SteadyOptions {
    double reltol = 1e-10;
    double abstol = 1e-13;
    double trace_change_tol = 1e-11;  // per relaxation time, LongTime stop test
    double residual_tol = 1e-10;      // ||G(rho)||_F acceptance bound
    int max_chunks = 400;
    double leak_tol = 1e-8;
};

int suggest_n_max(const SystemParams& p);
FockTruncation auto_truncation(const SystemParams& p, GeneratorKind kind,
                               const SteadyOptions& opt = {});

CavityState steady_state(const SystemParams& p, GeneratorKind kind, SteadyMethod method,
                         FockTruncation trunc, const SteadyOptions& opt = {});
// Picks the truncation automatically (drive-based guess, then doubling probe).
CavityState steady_state(const SystemParams& p, GeneratorKind kind, SteadyMethod method,
                         const SteadyOptions& opt = {});

// Kernel extraction for a general linear map on dim x dim matrices.  Builds the
// dim^2 x dim^2 matrix column by column, finds its one-dimensional null space,
// and returns the Hermitized, unit-trace representative.  Throws
// DegenerateNullSpace when the kernel is not one-dimensional.
Eigen::MatrixXcd steady_via_nullspace(
    const std::function<Eigen::MatrixXcd(const Eigen::MatrixXcd&)>& apply, int dim);

}  // namespace cqed
