#include "cqed/gaussian.hpp"

#include <cmath>
#include <string>

namespace cqed {

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

}  // namespace

GaussianParams reconstruct(const MomentVector& m) {
    const cxd z = m(kAnn);
    // <a^2> = z^2 - 2 mu*, so mu carries the squeezing correlation
    const cxd mu = std::conj(0.5 * (z * z - m(kAnnSq)));
    const double tau0 = std::real(m(kNumber)) + 0.5 - std::norm(z);
    const double two_mu = 2.0 * std::abs(mu);

    if (tau0 < 0.5 - 1e-10)
        throw UnphysicalMoments("reconstruct: symmetric width " + fmt(tau0) +
                                " below the vacuum floor 1/2");
    if (two_mu >= tau0)
        throw UnphysicalMoments("reconstruct: correlation 2|mu| = " + fmt(two_mu) +
                                " saturates the width " + fmt(tau0));

    const double ratio = two_mu / tau0;
    const double x0 = std::atanh(ratio);

    GaussianParams gp;
    gp.displacement = z;
    gp.squeeze = 0.5 * x0;
    gp.squeeze_phase = (two_mu > 0.0) ? -std::arg(mu) : 0.0;
    gp.q_parameter = 2.0 * std::sqrt(tau0 * tau0 - 4.0 * std::norm(mu));
    gp.nbar = 0.5 * (gp.q_parameter - 1.0);
    gp.rotation = 0.0;
    return gp;
}

CavityOperator squeeze_operator(FockTruncation t, cxd zeta) {
    t.validate();
    const int d = t.dim();
    // generator K = (zeta* a^2 - zeta a†^2)/2 is anti-Hermitian; exponentiate
    // through the Hermitian -iK
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(d, d);
    const cxd i1(0.0, 1.0);
    for (int n = 0; n + 2 < d; ++n) {
        double w = 0.5 * std::sqrt(double(n + 1) * double(n + 2));
        h(n, n + 2) = -i1 * std::conj(zeta) * w;   // -i K on the a^2 band
        h(n + 2, n) = i1 * zeta * w;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    Eigen::VectorXcd phase(d);
    for (int k = 0; k < d; ++k) phase(k) = std::exp(i1 * es.eigenvalues()(k));
    Eigen::MatrixXcd s = es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
    return {t, std::move(s)};
}

CavityState build_state(FockTruncation t, const GaussianParams& gp) {
    if (gp.squeeze < 0.0 || !std::isfinite(gp.squeeze))
        throw InvalidState("build_state: squeeze must be finite and >= 0");
    if (gp.nbar < 0.0 || !std::isfinite(gp.nbar))
        throw InvalidState("build_state: nbar must be finite and >= 0");

    Eigen::MatrixXcd rho = thermal_state(t, gp.nbar).matrix();
    if (gp.squeeze > 0.0) {
        const cxd zeta = gp.squeeze * std::exp(cxd(0.0, gp.squeeze_phase));
        const Eigen::MatrixXcd s = squeeze_operator(t, zeta).m;
        rho = s * rho * s.adjoint();
    }
    const Eigen::MatrixXcd d = displacement(t, gp.displacement).m;
    rho = d * rho * d.adjoint();
    return CavityState(t, std::move(rho));
}

SteadyMixture steady_mixture(const SystemParams& p) {
    p.validate();
    const cxd i1(0.0, 1.0);
    SteadyMixture mix;
    mix.alpha = -2.0 * i1 * p.n_c() * p.atom.lambda * p.g_tau();
    mix.single_photon_weight = p.atom.p_e * p.n_c() * p.g_tau() * p.g_tau();
    return mix;
}

CavityState build_mixture(FockTruncation t, const SteadyMixture& mix) {
    const double x = mix.single_photon_weight;
    if (x < 0.0 || x > 1.0)
        throw InvalidState("build_mixture: weight " + fmt(x) + " outside [0, 1]");
    const Eigen::MatrixXcd d = displacement(t, mix.alpha).m;
    Eigen::VectorXcd coh = d.col(0);   // D|0>
    Eigen::VectorXcd kicked = d.col(1);  // D|1>
    Eigen::MatrixXcd rho =
        (1.0 - x) * (coh * coh.adjoint()) + x * (kicked * kicked.adjoint());
    return CavityState(t, std::move(rho));
}

}  // namespace cqed
