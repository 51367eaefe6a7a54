#pragma once

#include "cqed/fock.hpp"
#include "cqed/lindblad.hpp"
#include "cqed/moments.hpp"

namespace cqed {

// Displaced squeezed thermal state recovered from first and second field
// moments: rho = D(z) S(r, theta) rho_th(nbar) S† D†.
struct GaussianParams {
    cxd displacement;     // z
    double squeeze = 0.0;       // r >= 0
    double squeeze_phase = 0.0; // theta, phase of the squeezing axis
    double q_parameter = 1.0;   // Q = 2 nbar + 1, width of the symmetric quadrature
    double nbar = 0.0;          // thermal occupation (Q - 1) / 2
    double rotation = 0.0;      // residual phase-space rotation; zero by convention
};

// Inverts the Gaussian moment relations.  Throws UnphysicalMoments when the
// covariances cannot come from a quantum state (tau0 < 1/2 or saturated
// squeezing 2|mu| >= tau0).
GaussianParams reconstruct(const MomentVector& m);

CavityState build_state(FockTruncation t, const GaussianParams& gp);

// exp((zeta* a^2 - zeta a†^2)/2)
CavityOperator squeeze_operator(FockTruncation t, cxd zeta);

// In the demonstrated regime the steady state is, to leading order, a mixture
// of a coherent state |alpha> and the displaced one-photon state D(alpha)|1>.
struct SteadyMixture {
    cxd alpha;                  // -2 i n_c lambda g tau
    double single_photon_weight;  // p_e n_c (g tau)^2
};
SteadyMixture steady_mixture(const SystemParams& p);
CavityState build_mixture(FockTruncation t, const SteadyMixture& mix);

}  // namespace cqed
