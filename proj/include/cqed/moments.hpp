#pragma once

#include <Eigen/Dense>

#include "cqed/fock.hpp"
#include "cqed/lindblad.hpp"

namespace cqed {

// The second-order master equation closes on eight field moments; this is
// their fixed ordering.
enum MomentIndex : int {
    kNumberSq = 0,  // <(a†a)^2>
    kCreAnnCre = 1, // <a† a a†>
    kAnnCreAnn = 2, // <a a† a>
    kCreSq = 3,     // <a†^2>
    kNumber = 4,    // <a†a>
    kAnnSq = 5,     // <a^2>
    kCre = 6,       // <a†>
    kAnn = 7,       // <a>
};

using MomentVector = Eigen::Matrix<cxd, 8, 1>;
using MomentMatrix = Eigen::Matrix<cxd, 8, 8>;

// dA/dt = drift * A + source.  The drift is upper triangular with diagonal
// {2d, 3d/2, 3d/2, d, d, d, d/2, d/2}, d = gamma1 - gamma2, so the system is
// stable exactly when the loss rate wins.
MomentMatrix moment_drift(const SystemParams& p);
MomentVector moment_source(const SystemParams& p);

MomentVector steady_moments(const SystemParams& p);  // throws UnstableSystem if d >= 0
MomentVector evolve_moments(const MomentVector& m0, const SystemParams& p, double t);
MomentVector extract_moments(const CavityState& s);

double number_variance(const MomentVector& m);

// Steady-state moments in closed form.
struct ClosedFormMoments {
    cxd field;         // <a>   = 2 i xi / d
    cxd field_sq;      // <a^2> = -4 xi^2 / d^2
    double number;     // <a†a>
    double number_sq;  // <(a†a)^2>
    double number_var;
};
ClosedFormMoments closed_form_moments(const SystemParams& p);

// Leading-order occupation n_c (g tau)^2 p_e + 4 n_c^2 (g tau)^2 |lambda|^2.
double approx_mean_number(const SystemParams& p);

}  // namespace cqed
