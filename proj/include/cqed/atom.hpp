#pragma once

#include <Eigen/Dense>

#include "cqed/fock.hpp"

namespace cqed {

// Two-level atom prepared as rho_a = [[p_e, lambda], [conj(lambda), p_g]] in
// the {|e>, |g>} basis.  lambda may be complex; its phase propagates directly
// into the phase of the induced cavity drive.
struct AtomParams {
    double p_e = 0.0;
    double p_g = 1.0;
    cxd lambda = 0.0;

    void validate() const;
    static AtomParams with_excited(double p_e, cxd lambda = 0.0) {
        return AtomParams{p_e, 1.0 - p_e, lambda};
    }
};

Eigen::Matrix2cd atom_density(const AtomParams& atom);

// Resonant atom-field coupling unitary for one transit of duration tau,
// parametrized by the pulse area g_tau = g * tau.  Layout is atom-major:
// index = atom * dim + n with atom 0 = |e>, 1 = |g>.  The level |e, n_max>
// has no partner |g, n_max + 1> inside the truncation; it evolves with its
// cosine diagonal only, and the resulting unitarity defect is reported by
// boundary_defect().
struct JointOperator {
    FockTruncation trunc;
    Eigen::MatrixXcd m;
    double boundary_defect() const;  // max-norm deviation of U†U from 1
};

JointOperator jc_unitary(FockTruncation t, double g_tau);

// The four field-space blocks of the kick unitary.  All are banded:
//   U_ee = diag cos(g_tau sqrt(n+1)),  U_gg = diag cos(g_tau sqrt(n)),
//   U_eg(n-1, n) = -i sin(g_tau sqrt(n)),  U_ge(n+1, n) = -i sin(g_tau sqrt(n+1)).
struct KickBlocks {
    FockTruncation trunc;
    double g_tau = 0.0;
    Eigen::VectorXd cos_e, cos_g, sin_up;
};

KickBlocks kick_blocks(FockTruncation t, double g_tau);

// One-kick channel rho -> Tr_atom[ U (rho_a ⊗ rho) U† ], O(dim^2) via the
// block structure.  Valid for arbitrary (not necessarily Hermitian) input.
Eigen::MatrixXcd interaction_map_raw(const Eigen::MatrixXcd& rho, const KickBlocks& kb,
                                     const AtomParams& atom);

// Checked wrapper: the trace defect (probability leaked past the boundary
// level by this kick) must stay below defect_tol.
CavityState interaction_map(const CavityState& rho, const AtomParams& atom, double g_tau,
                            double defect_tol = 1e-8);

}  // namespace cqed
