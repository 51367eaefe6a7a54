#include "cqed/moments.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace cqed {

MomentMatrix moment_drift(const SystemParams& p) {
    p.validate();
    const cxd i1(0.0, 1.0);
    const cxd xi = p.xi();
    const cxd xic = std::conj(xi);
    const double g1 = p.gamma1();
    const double g2 = p.gamma2();
    const double d = g1 - g2;
    const double s1 = 3.0 * g1 + g2;
    const double s2 = g1 + g2;

    MomentMatrix m = MomentMatrix::Zero();
    m(kNumberSq, kNumberSq) = 2.0 * d;
    m(kNumberSq, kCreAnnCre) = -2.0 * i1 * xi;
    m(kNumberSq, kAnnCreAnn) = 2.0 * i1 * xic;
    m(kNumberSq, kNumber) = s1;
    m(kNumberSq, kCre) = i1 * xi;
    m(kNumberSq, kAnn) = -i1 * xic;

    m(kCreAnnCre, kCreAnnCre) = 1.5 * d;
    m(kCreAnnCre, kCreSq) = -i1 * xi;
    m(kCreAnnCre, kNumber) = 2.0 * i1 * xic;
    m(kCreAnnCre, kCre) = s2;

    m(kAnnCreAnn, kAnnCreAnn) = 1.5 * d;
    m(kAnnCreAnn, kAnnSq) = i1 * xic;
    m(kAnnCreAnn, kNumber) = -2.0 * i1 * xi;
    m(kAnnCreAnn, kAnn) = s2;

    m(kCreSq, kCreSq) = d;
    m(kCreSq, kCre) = 2.0 * i1 * xic;

    m(kNumber, kNumber) = d;
    m(kNumber, kCre) = -i1 * xi;
    m(kNumber, kAnn) = i1 * xic;

    m(kAnnSq, kAnnSq) = d;
    m(kAnnSq, kAnn) = -2.0 * i1 * xi;

    m(kCre, kCre) = 0.5 * d;
    m(kAnn, kAnn) = 0.5 * d;
    return m;
}

MomentVector moment_source(const SystemParams& p) {
    p.validate();
    const cxd i1(0.0, 1.0);
    const cxd xi = p.xi();
    const cxd xic = std::conj(xi);
    MomentVector b;
    b << cxd(p.gamma1()), i1 * xic, -i1 * xi, cxd(0.0), cxd(p.gamma1()), cxd(0.0), i1 * xic,
        -i1 * xi;
    return b;
}

MomentVector steady_moments(const SystemParams& p) {
    p.require_stable();
    MomentMatrix m = moment_drift(p);
    MomentVector b = moment_source(p);
    return m.triangularView<Eigen::Upper>().solve((-b).eval());
}

MomentVector evolve_moments(const MomentVector& m0, const SystemParams& p, double t) {
    if (t < 0.0) throw InvalidState("evolve_moments: t must be >= 0");
    // affine flow via the augmented homogeneous system d/dt (A, 1) = [[M, B], [0, 0]] (A, 1)
    Eigen::Matrix<cxd, 9, 9> aug = Eigen::Matrix<cxd, 9, 9>::Zero();
    aug.topLeftCorner<8, 8>() = moment_drift(p);
    aug.topRightCorner<8, 1>() = moment_source(p);
    Eigen::Matrix<cxd, 9, 9> flow = (t * aug).exp();
    Eigen::Matrix<cxd, 9, 1> state;
    state << m0, cxd(1.0);
    return (flow * state).head<8>();
}

MomentVector extract_moments(const CavityState& s) {
    const Eigen::MatrixXcd& rho = s.matrix();
    const int d = rho.rows();
    MomentVector m = MomentVector::Zero();
    for (int n = 0; n < d; ++n) {
        const double nn = double(n);
        m(kNumber) += nn * rho(n, n);
        m(kNumberSq) += nn * nn * rho(n, n);
        if (n >= 1) {
            // Tr[rho a] picks up rho(n, n-1), Tr[rho a†] its mirror
            m(kAnn) += std::sqrt(nn) * rho(n, n - 1);
            m(kCre) += std::sqrt(nn) * rho(n - 1, n);
            m(kAnnCreAnn) += nn * std::sqrt(nn) * rho(n, n - 1);
            m(kCreAnnCre) += nn * std::sqrt(nn) * rho(n - 1, n);
        }
        if (n + 2 < d) {
            double w = std::sqrt(double(n + 1) * double(n + 2));
            m(kAnnSq) += w * rho(n + 2, n);
            m(kCreSq) += w * rho(n, n + 2);
        }
    }
    return m;
}

double number_variance(const MomentVector& m) {
    double n = std::real(m(kNumber));
    return std::real(m(kNumberSq)) - n * n;
}

ClosedFormMoments closed_form_moments(const SystemParams& p) {
    p.require_stable();
    const cxd i1(0.0, 1.0);
    const cxd xi = p.xi();
    const double g1 = p.gamma1();
    const double g2 = p.gamma2();
    const double d = g1 - g2;   // negative
    const double u = -d;        // loss minus gain
    const double x2 = std::norm(xi);

    ClosedFormMoments out;
    out.field = 2.0 * i1 * xi / d;
    out.field_sq = -4.0 * xi * xi / (d * d);
    out.number = g1 / u + 4.0 * x2 / (u * u);
    out.number_sq = g1 * (g1 + g2) / (d * d) - 4.0 * (3.0 * g1 + g2) * x2 / (d * d * d) +
                    16.0 * x2 * x2 / (d * d * d * d);
    out.number_var = g1 * g2 / (u * u) + 4.0 * x2 * (g1 + g2) / (u * u * u);
    return out;
}

double approx_mean_number(const SystemParams& p) {
    p.validate();
    const double nc = p.n_c();
    const double gt2 = p.g_tau() * p.g_tau();
    return nc * gt2 * p.atom.p_e + 4.0 * nc * nc * gt2 * std::norm(p.atom.lambda);
}

}  // namespace cqed
