#include "cqed/fock.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace cqed {

namespace {

void check_square(const Eigen::MatrixXcd& m, int dim, const char* who) {
    if (m.rows() != dim || m.cols() != dim)
        throw DimensionMismatch(std::string(who) + ": matrix is " + std::to_string(m.rows()) +
                                "x" + std::to_string(m.cols()) + ", expected " +
                                std::to_string(dim) + "x" + std::to_string(dim));
}

}  // namespace

CavityState::CavityState(FockTruncation t, Eigen::MatrixXcd rho, Check check, double leak_tol)
    : trunc_(t), rho_(std::move(rho)), leak_tol_(leak_tol) {
    t.validate();
    check_square(rho_, t.dim(), "CavityState");
    if (check == Check::Trust) return;

    double herm = (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
    if (herm > 1e-12)
        throw InvalidState("CavityState: not Hermitian, max |rho - rho^dag| = " +
                           std::to_string(herm));
    double tr_err = std::abs(rho_.trace() - cxd(1.0, 0.0));
    if (tr_err > 1e-10)
        throw InvalidState("CavityState: trace differs from 1 by " + std::to_string(tr_err));
    if (leakage() > leak_tol_)
        throw TruncationTooSmall("CavityState: top-level occupancy " +
                                 std::to_string(leakage()) + " exceeds leak tolerance " +
                                 std::to_string(leak_tol_));
}

double CavityState::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

CavityState CavityState::clipped() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho_);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    double tr = ev.sum();
    if (tr <= 0.0) throw InvalidState("CavityState::clipped: state has no positive weight");
    Eigen::MatrixXcd out =
        es.eigenvectors() * (ev / tr).asDiagonal() * es.eigenvectors().adjoint();
    return CavityState(trunc_, std::move(out), Check::Validate, leak_tol_);
}

CavityOperator annihilation(FockTruncation t) {
    t.validate();
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(t.dim(), t.dim());
    for (int n = 1; n <= t.n_max; ++n) a(n - 1, n) = std::sqrt(double(n));
    return {t, std::move(a)};
}

CavityOperator creation(FockTruncation t) {
    CavityOperator a = annihilation(t);
    return {t, a.m.adjoint()};
}

CavityOperator number_operator(FockTruncation t) {
    t.validate();
    Eigen::MatrixXcd n = Eigen::MatrixXcd::Zero(t.dim(), t.dim());
    for (int k = 0; k <= t.n_max; ++k) n(k, k) = double(k);
    return {t, std::move(n)};
}

int displacement_min_n_max(cxd alpha) {
    double a2 = std::norm(alpha);
    return int(std::ceil(a2 + 10.0 * std::sqrt(a2 + 1.0)));
}

CavityOperator displacement(FockTruncation t, cxd alpha) {
    t.validate();
    if (t.n_max < displacement_min_n_max(alpha))
        throw TruncationTooSmall("displacement: |alpha|^2 = " + std::to_string(std::norm(alpha)) +
                                 " needs n_max >= " +
                                 std::to_string(displacement_min_n_max(alpha)) + ", got " +
                                 std::to_string(t.n_max));
    // generator G = alpha a† - alpha* a is anti-Hermitian; exponentiate via
    // the Hermitian matrix H = -iG, so D = exp(iH) is unitary by construction.
    CavityOperator a = annihilation(t);
    Eigen::MatrixXcd g = alpha * a.m.adjoint() - std::conj(alpha) * a.m;
    Eigen::MatrixXcd h = cxd(0.0, -1.0) * g;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    Eigen::VectorXcd phases = (cxd(0.0, 1.0) * es.eigenvalues().cast<cxd>()).array().exp();
    Eigen::MatrixXcd d = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
    return {t, std::move(d)};
}

CavityState vacuum_state(FockTruncation t) { return fock_state(t, 0); }

CavityState fock_state(FockTruncation t, int n, double leak_tol) {
    t.validate();
    if (n < 0 || n > t.n_max)
        throw DimensionMismatch("fock_state: level " + std::to_string(n) +
                                " outside truncation n_max = " + std::to_string(t.n_max));
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(t.dim(), t.dim());
    rho(n, n) = 1.0;
    return CavityState(t, std::move(rho), CavityState::Check::Validate, leak_tol);
}

CavityState coherent_state(FockTruncation t, cxd alpha) {
    CavityOperator d = displacement(t, alpha);
    Eigen::VectorXcd ket = d.m.col(0);
    return CavityState(t, ket * ket.adjoint());
}

CavityState thermal_state(FockTruncation t, double nbar) {
    t.validate();
    if (nbar < 0.0) throw InvalidState("thermal_state: nbar must be >= 0");
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(t.dim(), t.dim());
    if (nbar == 0.0) {
        rho(0, 0) = 1.0;
        return CavityState(t, std::move(rho), CavityState::Check::Trust);
    }
    double q = nbar / (1.0 + nbar);
    double w = 1.0, norm = 0.0;
    for (int n = 0; n <= t.n_max; ++n, w *= q) {
        rho(n, n) = w;
        norm += w;
    }
    rho /= norm;
    // renormalized over the kept levels; leakage scales as q^n_max
    return CavityState(t, std::move(rho), CavityState::Check::Trust);
}

cxd expectation(const CavityState& s, const CavityOperator& op) {
    if (s.trunc() != op.trunc)
        throw DimensionMismatch("expectation: state n_max = " + std::to_string(s.trunc().n_max) +
                                ", operator n_max = " + std::to_string(op.trunc.n_max));
    return (s.matrix() * op.m).trace();
}

double fidelity(const CavityState& a, const CavityState& b) {
    if (a.trunc() != b.trunc()) throw DimensionMismatch("fidelity: truncations differ");
    // Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, evaluated on the
    // support of rho: eig(sqrt(L) V† sigma V sqrt(L)) with rho = V L V†.  Working
    // in the reduced space keeps noise eigenvalues of rank-deficient states from
    // polluting the square roots.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ea(a.matrix());
    const Eigen::VectorXd& ev = ea.eigenvalues();
    double cut = ev.maxCoeff() * ev.size() * 1e-15;
    std::vector<int> keep;
    for (int i = 0; i < ev.size(); ++i)
        if (ev(i) > cut) keep.push_back(i);
    if (keep.empty()) throw InvalidState("fidelity: first state has no positive weight");

    int k = int(keep.size());
    Eigen::MatrixXcd v(a.matrix().rows(), k);
    Eigen::VectorXd sqrt_l(k);
    for (int i = 0; i < k; ++i) {
        v.col(i) = ea.eigenvectors().col(keep[i]);
        sqrt_l(i) = std::sqrt(ev(keep[i]));
    }
    Eigen::MatrixXcd reduced =
        sqrt_l.asDiagonal() * (v.adjoint() * b.matrix() * v) * sqrt_l.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> em(reduced, Eigen::EigenvaluesOnly);
    double root_sum = em.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    return root_sum * root_sum;
}

double trace_distance(const CavityState& a, const CavityState& b) {
    if (a.trunc() != b.trunc()) throw DimensionMismatch("trace_distance: truncations differ");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a.matrix() - b.matrix(),
                                                       Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace cqed
