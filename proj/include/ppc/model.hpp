#pragma once

// =============================================================================
// Coupled-resonator model: bare modes, the effective non-Hermitian system
// matrix, its eigenmodes, and the exact lossless-circuit picture they
// approximate.
//
// All frequencies and rates are angular frequencies in GHz. Circuit
// inductances/capacitances are in arbitrary consistent units; only the
// products L*C and ratios M/L enter any observable.
// =============================================================================

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ppc/errors.hpp"

namespace ppc {

using Complex = std::complex<double>;

/// One bare resonator: resonance frequency and intrinsic loss rate.
struct Mode {
    std::string label;
    double omega = 0.0;             ///< bare angular resonance frequency, GHz
    double intrinsic_damping = 0.0; ///< loss rate, GHz, >= 0

    Mode() = default;
    Mode(std::string label_, double omega_, double intrinsic_damping_);
};

/// N coupled modes sharing one extrinsic (feedline) damping rate and a
/// symmetric complex coupling matrix with zero diagonal.
///
/// Real coupling parts encode coherent exchange (level repulsion), imaginary
/// parts dissipative exchange (level attraction). Immutable after
/// construction; safe to share between threads.
class CoupledSystem {
public:
    CoupledSystem(std::vector<Mode> modes, double extrinsic_damping,
                  Eigen::MatrixXcd coupling);

    const std::vector<Mode>& modes() const { return modes_; }
    double extrinsic_damping() const { return gamma_; }
    const Eigen::MatrixXcd& coupling() const { return coupling_; }
    int size() const { return static_cast<int>(modes_.size()); }

    /// Complex frequency of mode i: omega_i - i*(intrinsic_i + gamma).
    Complex effective_frequency(int i) const;

    /// Copy with mode frequencies replaced (dampings and couplings kept).
    CoupledSystem with_frequencies(const std::vector<double>& omegas) const;

private:
    std::vector<Mode> modes_;
    double gamma_ = 0.0;
    Eigen::MatrixXcd coupling_;
};

/// One hybrid eigenmode: complex eigenvalue (real part = resonance position,
/// -imag = decay rate) and unit-norm amplitude weights over the bare modes.
struct Eigenmode {
    Complex eigenvalue;
    Eigen::VectorXcd amplitudes;
};

/// Exact lossless-circuit description: the matrix whose determinant roots in
/// omega are the bare-circuit resonances. Entries are k_i - L_i*omega^2 on
/// the diagonal and -M_ij*omega^2 off it, with k_i = 1/C_i.
class CircuitMatrix {
public:
    CircuitMatrix(Eigen::VectorXd inductances, Eigen::VectorXd capacitances,
                  Eigen::MatrixXd mutual);

    const Eigen::VectorXd& inductances() const { return inductance_; }
    const Eigen::VectorXd& capacitances() const { return capacitance_; }
    const Eigen::MatrixXd& mutual() const { return mutual_; }
    int size() const { return static_cast<int>(inductance_.size()); }

    /// Stiffness k_i = 1/C_i.
    double stiffness(int i) const { return 1.0 / capacitance_[i]; }

    /// Decoupled resonance 1/sqrt(L_i C_i).
    double bare_frequency(int i) const;

    /// The circuit matrix evaluated at a given omega.
    Eigen::MatrixXd at(double omega) const;

private:
    Eigen::VectorXd inductance_;
    Eigen::VectorXd capacitance_;
    Eigen::MatrixXd mutual_;
};

/// Build the effective system matrix H: diagonal entries are the complex mode
/// frequencies omega_i - i*(alpha_i + gamma), off-diagonal entries the
/// couplings Delta_ij. Symmetric (not Hermitian).
Eigen::MatrixXcd effective_matrix(const CoupledSystem& sys);

/// Eigenvalues/eigenvectors of a complex square matrix, sorted ascending by
/// real part (ties by imaginary part). Amplitudes are normalized to unit
/// Euclidean norm. Throws ComputeError if the solver fails to converge or a
/// residual ||H v - lambda v|| exceeds 1e-9 * ||H||.
std::vector<Eigenmode> eigenmodes(const Eigen::MatrixXcd& matrix);

/// The N physical resonances of the lossless circuit: positive roots of
/// det M(omega) = 0, found by expanding the determinant as a degree-N
/// polynomial in omega^2 and root-finding it. Ascending order. Throws
/// ComputeError when fewer than N positive real roots exist (over-coupled
/// or unphysical circuit).
std::vector<double> circuit_polynomial_roots(const CircuitMatrix& circuit);

/// First-order estimate of the effective couplings implied by the mutual
/// inductances: Delta_ij = M_ij * sqrt(omega_i*omega_j) / (2*sqrt(L_i*L_j)),
/// chosen so that at degeneracy the effective-matrix splitting 2*Delta_ij
/// reproduces the circuit root splitting to first order in M_ij. Requires
/// weak coupling (M_ij^2 <= 0.1 * L_i * L_j).
Eigen::MatrixXd perturbative_coupling(const CircuitMatrix& circuit);

} // namespace ppc
