#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "cqed/fock.hpp"
#include "cqed/lindblad.hpp"
#include "cqed/moments.hpp"

using namespace cqed;
using Eigen::MatrixXcd;

namespace {

const cxd i1(0.0, 1.0);

SystemParams make_params(double g_tau, double p_e, cxd lambda, double r = 10.0,
                         double kappa = 1.0) {
    SystemParams p;
    p.tau = 1e-7;
    p.g = g_tau / p.tau;
    p.r = r;
    p.kappa = kappa;
    p.atom = AtomParams::with_excited(p_e, lambda);
    return p;
}

Eigen::MatrixXcd random_density(int dim, int support, std::mt19937_64& rng) {
    auto u = [&] { return double(rng() >> 11) * 0x1p-53; };
    MatrixXcd g = MatrixXcd::Zero(dim, dim);
    for (int j = 0; j < support; ++j)
        for (int i = 0; i < support; ++i) g(i, j) = cxd(2 * u() - 1, 2 * u() - 1);
    MatrixXcd rho = g * g.adjoint();
    rho /= rho.trace().real();
    return rho;
}

// dense-operator version of every tracked moment
MomentVector dense_moments(const Eigen::MatrixXcd& rho, FockTruncation t) {
    const MatrixXcd a = annihilation(t).m;
    const MatrixXcd ad = creation(t).m;
    const MatrixXcd nn = ad * a;
    MomentVector m;
    m(kNumberSq) = (rho * nn * nn).trace();
    m(kCreAnnCre) = (rho * ad * a * ad).trace();
    m(kAnnCreAnn) = (rho * a * ad * a).trace();
    m(kCreSq) = (rho * ad * ad).trace();
    m(kNumber) = (rho * nn).trace();
    m(kAnnSq) = (rho * a * a).trace();
    m(kCre) = (rho * ad).trace();
    m(kAnn) = (rho * a).trace();
    return m;
}

// index map induced by hermitian conjugation of the tracked operators
constexpr int kConjPartner[8] = {kNumberSq,  kAnnCreAnn, kCreAnnCre, kAnnSq,
                                 kNumber,    kCreSq,     kAnn,       kCre};

}  // namespace

TEST_CASE("drift matrix structure") {
    const SystemParams p = make_params(0.03, 0.4, 0.3 * std::exp(cxd(0.0, 0.7)));
    const MomentMatrix m = moment_drift(p);
    const MomentVector b = moment_source(p);
    const double d = p.delta();

    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < i; ++j) CHECK(m(i, j) == cxd(0.0));

    const double diag[8] = {2 * d, 1.5 * d, 1.5 * d, d, d, d, 0.5 * d, 0.5 * d};
    for (int i = 0; i < 8; ++i) CHECK(std::abs(m(i, i) - cxd(diag[i])) < 1e-15);

    // conjugating every tracked operator must map the system onto itself
    for (int i = 0; i < 8; ++i) {
        CHECK(std::abs(b(kConjPartner[i]) - std::conj(b(i))) < 1e-15);
        for (int j = 0; j < 8; ++j)
            CHECK(std::abs(m(kConjPartner[i], kConjPartner[j]) - std::conj(m(i, j))) < 1e-15);
    }
}

TEST_CASE("moment flow agrees with the density-matrix generator at random states") {
    const SystemParams p = make_params(0.03, 0.45, 0.25 * std::exp(cxd(0.0, -0.3)), 8.0);
    const FockTruncation t{12};
    const MomentMatrix md = moment_drift(p);
    const MomentVector b = moment_source(p);

    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 10; ++rep) {
        MatrixXcd rho = rep == 0 ? vacuum_state(t).matrix() : random_density(t.dim(), t.dim() - 4, rng);
        MatrixXcd drho = apply_generator(rho, p, GeneratorKind::EffectiveSecondOrder);
        MomentVector lhs = dense_moments(drho, t);  // d<X>/dt via the generator
        MomentVector rhs = md * dense_moments(rho, t) + b;
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("steady moments match closed forms") {
    SUBCASE("pulse area 0.01, balanced") {
        const SystemParams p = make_params(0.01, 0.5, 0.5);
        const MomentVector m = steady_moments(p);
        CHECK(std::abs(m(kAnn) - cxd(0.0, -0.1)) < 1e-15);
        CHECK(std::abs(m(kAnnSq) - cxd(-0.01)) < 1e-15);
        CHECK(std::real(m(kNumber)) == doctest::Approx(0.0105).epsilon(1e-13));
        CHECK(std::real(m(kNumberSq)) == doctest::Approx(0.0106205).epsilon(1e-12));
        CHECK(number_variance(m) == doctest::Approx(0.01051025).epsilon(1e-12));

        const ClosedFormMoments c = closed_form_moments(p);
        CHECK(std::abs(c.field - m(kAnn)) < 1e-15);
        CHECK(std::abs(c.field_sq - m(kAnnSq)) < 1e-15);
        CHECK(c.number == doctest::Approx(std::real(m(kNumber))).epsilon(1e-13));
        CHECK(c.number_sq == doctest::Approx(std::real(m(kNumberSq))).epsilon(1e-13));
        CHECK(c.number_var == doctest::Approx(number_variance(m)).epsilon(1e-13));
    }

    SUBCASE("pulse area 0.03, balanced") {
        const SystemParams p = make_params(0.03, 0.5, 0.5);
        const MomentVector m = steady_moments(p);
        CHECK(std::abs(m(kAnn) - cxd(0.0, -0.3)) < 1e-15);
        CHECK(std::real(m(kNumber)) == doctest::Approx(0.0945).epsilon(1e-13));
        CHECK(std::real(m(kNumberSq)) == doctest::Approx(0.1042605).epsilon(1e-12));
        CHECK(number_variance(m) == doctest::Approx(0.09533025).epsilon(1e-12));
    }

    SUBCASE("asymmetric populations and complex coherence") {
        const SystemParams p = make_params(0.02, 0.3, 0.2 * std::exp(cxd(0.0, 1.1)), 12.0);
        const MomentVector m = steady_moments(p);
        const ClosedFormMoments c = closed_form_moments(p);
        CHECK(std::abs(c.field - m(kAnn)) < 1e-15);
        CHECK(std::abs(c.field_sq - m(kAnnSq)) < 1e-14);
        CHECK(c.number == doctest::Approx(std::real(m(kNumber))).epsilon(1e-13));
        CHECK(c.number_sq == doctest::Approx(std::real(m(kNumberSq))).epsilon(1e-12));
        CHECK(c.number_var == doctest::Approx(number_variance(m)).epsilon(1e-12));
    }
}

TEST_CASE("linear solve agrees with hand back-substitution and leaves no residual") {
    const SystemParams p = make_params(0.03, 0.35, cxd(0.2, 0.25), 9.0);
    const MomentMatrix md = moment_drift(p);
    const MomentVector b = moment_source(p);
    const MomentVector m = steady_moments(p);

    CHECK((md * m + b).norm() <= 1e-12 * b.norm());

    MomentVector hand = MomentVector::Zero();
    for (int i = 7; i >= 0; --i) {
        cxd acc = -b(i);
        for (int j = i + 1; j < 8; ++j) acc -= md(i, j) * hand(j);
        hand(i) = acc / md(i, i);
    }
    CHECK((hand - m).cwiseAbs().maxCoeff() < 1e-14 * (1.0 + hand.cwiseAbs().maxCoeff()));

    for (int i = 0; i < 8; ++i)
        CHECK(std::abs(m(kConjPartner[i]) - std::conj(m(i))) < 1e-14);
}

TEST_CASE("unstable parameters are rejected by the solvers only") {
    SystemParams p = make_params(1.0, 1.0, 0.0, 30.0);  // gain 30, loss 1
    CHECK_FALSE(p.stable());
    CHECK_THROWS_AS(steady_moments(p), UnstableSystem);
    CHECK_THROWS_AS(closed_form_moments(p), UnstableSystem);
    CHECK_NOTHROW(moment_drift(p));
    MomentVector m0 = MomentVector::Zero();
    CHECK_NOTHROW(evolve_moments(m0, p, 0.1));  // finite-time growth is fine
}

TEST_CASE("moments extracted from reference states") {
    const FockTruncation t{24};
    const cxd alpha(0.35, -0.2);
    const double a2 = std::norm(alpha);
    MomentVector m = extract_moments(coherent_state(t, alpha));
    CHECK(std::abs(m(kAnn) - alpha) < 1e-12);
    CHECK(std::abs(m(kCre) - std::conj(alpha)) < 1e-12);
    CHECK(std::abs(m(kAnnSq) - alpha * alpha) < 1e-12);
    CHECK(std::real(m(kNumber)) == doctest::Approx(a2).epsilon(1e-10));
    CHECK(std::real(m(kNumberSq)) == doctest::Approx(a2 + a2 * a2).epsilon(1e-10));
    CHECK(std::abs(m(kAnnCreAnn) - (a2 + 1.0) * alpha) < 1e-12);
    CHECK(std::abs(m(kCreAnnCre) - std::conj(m(kAnnCreAnn))) < 1e-14);

    MomentVector h = extract_moments(thermal_state(FockTruncation{40}, 0.6));
    CHECK(std::real(h(kNumber)) == doctest::Approx(0.6).epsilon(1e-9));
    CHECK(std::real(h(kNumberSq)) == doctest::Approx(2 * 0.36 + 0.6).epsilon(1e-9));
    CHECK(std::abs(h(kAnn)) < 1e-15);
    CHECK(std::abs(h(kAnnSq)) < 1e-15);

    // banded sums equal dense operator traces on arbitrary matrices
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 5; ++rep) {
        const FockTruncation tt{9};
        MatrixXcd rho = random_density(tt.dim(), tt.dim(), rng);
        CavityState s(tt, rho, CavityState::Check::Trust);
        CHECK((extract_moments(s) - dense_moments(rho, tt)).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("moment evolution tracks the density-matrix evolution") {
    const SystemParams p = make_params(0.03, 0.5, 0.5);
    const FockTruncation t{24};

    MomentVector m0 = MomentVector::Zero();  // vacuum
    CHECK((evolve_moments(m0, p, 0.0) - m0).norm() == 0.0);

    CavityState rho = vacuum_state(t);
    double t_now = 0.0;
    for (double ts : {0.3, 0.7, 1.5, 3.0, 8.0}) {
        rho = evolve(rho, p, GeneratorKind::EffectiveSecondOrder, ts - t_now);
        t_now = ts;
        MomentVector lin = evolve_moments(m0, p, ts);
        MomentVector ext = extract_moments(rho);
        for (int i = 0; i < 8; ++i)
            CHECK(std::abs(lin(i) - ext(i)) <= 1e-6 * (1.0 + std::abs(ext(i))));
    }
    // by t = 8 the flow has essentially reached the fixed point
    CHECK((evolve_moments(m0, p, 60.0) - steady_moments(p)).cwiseAbs().maxCoeff() < 1e-12);

    // additivity of the affine flow
    std::mt19937_64 rng(17);
    MomentVector m1;
    for (int i = 0; i < 8; ++i)
        m1(i) = cxd(double(rng() >> 11) * 0x1p-53, double(rng() >> 11) * 0x1p-53);
    MomentVector two_leg = evolve_moments(evolve_moments(m1, p, 0.4), p, 1.1);
    MomentVector one_leg = evolve_moments(m1, p, 1.5);
    CHECK((two_leg - one_leg).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(evolve_moments(m0, p, -1.0), InvalidState);
}

TEST_CASE("leading-order occupation") {
    CHECK(approx_mean_number(make_params(0.01, 0.5, 0.5)) ==
          doctest::Approx(0.0105).epsilon(1e-14));
    // seven-ish atoms per lifetime, the demonstrated operating point
    CHECK(approx_mean_number(make_params(0.01, 0.5, 0.5, 7.3)) ==
          doctest::Approx(5.694e-3).epsilon(1e-12));
    // at balanced populations the approximation is exact (loss-minus-gain is kappa)
    SystemParams pb = make_params(0.01, 0.5, 0.5);
    CHECK(approx_mean_number(pb) == doctest::Approx(closed_form_moments(pb).number).epsilon(1e-13));
    // away from balance it deviates at relative order n_c (g tau)^2
    SystemParams pa = make_params(0.01, 0.3, 0.2, 20.0);
    double band = pa.n_c() * pa.g_tau() * pa.g_tau();
    double exact = closed_form_moments(pa).number;
    double approx = approx_mean_number(pa);
    CHECK(std::abs(approx - exact) <= 2.0 * band * exact);
    CHECK(std::abs(approx - exact) > 0.01 * band * exact);
}
