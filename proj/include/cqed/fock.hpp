#pragma once

#include <Eigen/Dense>
#include <complex>

#include "cqed/errors.hpp"

namespace cqed {

using cxd = std::complex<double>;

// Truncated single-mode Fock space keeping levels |0>..|n_max>.
struct FockTruncation {
    int n_max = 0;

    int dim() const { return n_max + 1; }
    void validate() const {
        if (n_max < 1)
            throw InvalidState("FockTruncation: n_max must be >= 1, got " + std::to_string(n_max));
    }
    friend bool operator==(FockTruncation a, FockTruncation b) { return a.n_max == b.n_max; }
    friend bool operator!=(FockTruncation a, FockTruncation b) { return !(a == b); }
};

struct CavityOperator {
    FockTruncation trunc;
    Eigen::MatrixXcd m;
};

// Density matrix on a truncated Fock space.  Construction checks hermiticity,
// unit trace and occupancy of the top level ("leakage"); positivity is
// report-only (min_eigenvalue / clipped) so that integrator defects surface
// instead of being masked.
class CavityState {
public:
    enum class Check { Validate, Trust };

    CavityState(FockTruncation t, Eigen::MatrixXcd rho, Check check = Check::Validate,
                double leak_tol = 1e-8);

    const Eigen::MatrixXcd& matrix() const { return rho_; }
    FockTruncation trunc() const { return trunc_; }
    double leak_tol() const { return leak_tol_; }

    // population of the highest retained level
    double leakage() const { return std::real(rho_(trunc_.n_max, trunc_.n_max)); }
    double min_eigenvalue() const;
    // negative eigenvalues projected out, trace renormalized
    CavityState clipped() const;

private:
    FockTruncation trunc_;
    Eigen::MatrixXcd rho_;
    double leak_tol_;
};

CavityOperator annihilation(FockTruncation t);
CavityOperator creation(FockTruncation t);
CavityOperator number_operator(FockTruncation t);

// Smallest n_max for which a displacement by alpha is well represented.
int displacement_min_n_max(cxd alpha);
// exp(alpha a† - alpha* a), via eigendecomposition of the Hermitian generator.
CavityOperator displacement(FockTruncation t, cxd alpha);

CavityState vacuum_state(FockTruncation t);
CavityState fock_state(FockTruncation t, int n, double leak_tol = 1e-8);
CavityState coherent_state(FockTruncation t, cxd alpha);
CavityState thermal_state(FockTruncation t, double nbar);

cxd expectation(const CavityState& s, const CavityOperator& op);
// Uhlmann fidelity, squared convention: F(pure,pure) = |<psi|phi>|^2.
double fidelity(const CavityState& a, const CavityState& b);
double trace_distance(const CavityState& a, const CavityState& b);

}  // namespace cqed
