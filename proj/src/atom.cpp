#include "cqed/atom.hpp"

#include <cmath>

namespace cqed {

void AtomParams::validate() const {
    if (!(p_e >= 0.0 && p_e <= 1.0) || !(p_g >= 0.0 && p_g <= 1.0))
        throw InvalidAtomState("atom populations must lie in [0, 1]");
    if (std::abs(p_e + p_g - 1.0) > 1e-12)
        throw InvalidAtomState("atom populations must sum to 1, got " +
                               std::to_string(p_e + p_g));
    if (std::norm(lambda) > p_e * p_g + 1e-12)
        throw InvalidAtomState("|lambda|^2 = " + std::to_string(std::norm(lambda)) +
                               " exceeds p_e * p_g = " + std::to_string(p_e * p_g) +
                               " (atom density matrix not positive)");
}

Eigen::Matrix2cd atom_density(const AtomParams& atom) {
    atom.validate();
    Eigen::Matrix2cd rho;
    rho << atom.p_e, atom.lambda, std::conj(atom.lambda), atom.p_g;
    return rho;
}

KickBlocks kick_blocks(FockTruncation t, double g_tau) {
    t.validate();
    int d = t.dim();
    KickBlocks kb{t, g_tau, Eigen::VectorXd(d), Eigen::VectorXd(d), Eigen::VectorXd(d)};
    for (int n = 0; n < d; ++n) {
        kb.cos_e(n) = std::cos(g_tau * std::sqrt(double(n + 1)));
        kb.cos_g(n) = std::cos(g_tau * std::sqrt(double(n)));
        kb.sin_up(n) = std::sin(g_tau * std::sqrt(double(n + 1)));
    }
    return kb;
}

JointOperator jc_unitary(FockTruncation t, double g_tau) {
    KickBlocks kb = kick_blocks(t, g_tau);
    int d = t.dim();
    const cxd mi(0.0, -1.0);
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(2 * d, 2 * d);
    for (int n = 0; n < d; ++n) {
        u(n, n) = kb.cos_e(n);          // <e,n|U|e,n>
        u(d + n, d + n) = kb.cos_g(n);  // <g,n|U|g,n>
    }
    for (int n = 1; n < d; ++n) u(n - 1, d + n) = mi * kb.sin_up(n - 1);  // <e,n-1|U|g,n>
    for (int n = 0; n + 1 < d; ++n) u(d + n + 1, n) = mi * kb.sin_up(n);  // <g,n+1|U|e,n>
    return {t, std::move(u)};
}

double JointOperator::boundary_defect() const {
    int d = trunc.dim();
    return (m.adjoint() * m - Eigen::MatrixXcd::Identity(2 * d, 2 * d)).cwiseAbs().maxCoeff();
}

Eigen::MatrixXcd interaction_map_raw(const Eigen::MatrixXcd& rho, const KickBlocks& kb,
                                     const AtomParams& atom) {
    int d = kb.trunc.dim();
    if (rho.rows() != d || rho.cols() != d)
        throw DimensionMismatch("interaction_map: state dimension " + std::to_string(rho.rows()) +
                                " vs kick blocks " + std::to_string(d));
    const Eigen::VectorXd& ce = kb.cos_e;
    const Eigen::VectorXd& cg = kb.cos_g;
    const Eigen::VectorXd& s = kb.sin_up;
    const double pe = atom.p_e, pg = atom.p_g;
    const cxd lam = atom.lambda, lamc = std::conj(atom.lambda);
    const cxd i1(0.0, 1.0);

    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d, d);
    for (int n = 0; n < d; ++n) {
        for (int m = 0; m < d; ++m) {
            cxd acc = pe * ce(n) * ce(m) * rho(n, m)       // U_ee rho U_ee†
                      + pg * cg(n) * cg(m) * rho(n, m);    // U_gg rho U_gg†
            if (n + 1 < d && m + 1 < d)
                acc += pg * s(n) * s(m) * rho(n + 1, m + 1);  // U_eg rho U_eg†
            if (n >= 1 && m >= 1)
                acc += pe * s(n - 1) * s(m - 1) * rho(n - 1, m - 1);  // U_ge rho U_ge†
            // cross terms carry the atomic coherence into the field
            if (m + 1 < d) acc += lam * ce(n) * (i1 * s(m)) * rho(n, m + 1);  // U_ee rho U_eg†
            if (n >= 1) acc += lam * (-i1 * s(n - 1)) * cg(m) * rho(n - 1, m);  // U_ge rho U_gg†
            if (n + 1 < d)
                acc += lamc * (-i1 * s(n)) * ce(m) * rho(n + 1, m);  // U_eg rho U_ee†
            if (m >= 1) acc += lamc * cg(n) * (i1 * s(m - 1)) * rho(n, m - 1);  // U_gg rho U_ge†
            out(n, m) = acc;
        }
    }
    return out;
}

CavityState interaction_map(const CavityState& rho, const AtomParams& atom, double g_tau,
                            double defect_tol) {
    atom.validate();
    KickBlocks kb = kick_blocks(rho.trunc(), g_tau);
    Eigen::MatrixXcd out = interaction_map_raw(rho.matrix(), kb, atom);
    double trace_defect = std::abs(out.trace() - rho.matrix().trace());
    if (trace_defect > defect_tol)
        throw TruncationTooSmall("interaction_map: kick leaked " + std::to_string(trace_defect) +
                                 " probability past n_max = " + std::to_string(rho.trunc().n_max));
    // trace defect was gated above (and may legitimately sit below defect_tol
    // but above the constructor's 1e-10), so skip the generic re-validation
    return CavityState(rho.trunc(), std::move(out), CavityState::Check::Trust, rho.leak_tol());
}

}  // namespace cqed
