#include "ppc/model.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace ppc {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw std::invalid_argument(what);
    }
}

bool is_finite(double x) { return std::isfinite(x); }
bool is_finite(const Complex& z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
}

} // namespace

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

Mode::Mode(std::string label_, double omega_, double intrinsic_damping_)
    : label(std::move(label_)), omega(omega_), intrinsic_damping(intrinsic_damping_) {
    require(is_finite(omega) && omega > 0.0, "mode '" + label + "': omega must be finite and > 0");
    require(is_finite(intrinsic_damping) && intrinsic_damping >= 0.0,
            "mode '" + label + "': intrinsic_damping must be finite and >= 0");
}

CoupledSystem::CoupledSystem(std::vector<Mode> modes, double extrinsic_damping,
                             Eigen::MatrixXcd coupling)
    : modes_(std::move(modes)), gamma_(extrinsic_damping), coupling_(std::move(coupling)) {
    const int n = static_cast<int>(modes_.size());
    require(n >= 2, "CoupledSystem needs at least 2 modes");
    require(is_finite(gamma_) && gamma_ >= 0.0, "extrinsic_damping must be finite and >= 0");
    require(coupling_.rows() == n && coupling_.cols() == n,
            "coupling matrix must be N x N with N = number of modes");
    for (int i = 0; i < n; ++i) {
        require(coupling_(i, i) == Complex(0.0, 0.0), "coupling diagonal must be zero");
        for (int j = 0; j < n; ++j) {
            require(is_finite(coupling_(i, j)), "coupling entries must be finite");
            require(coupling_(i, j) == coupling_(j, i), "coupling matrix must be symmetric");
        }
    }
}

Complex CoupledSystem::effective_frequency(int i) const {
    const Mode& m = modes_[static_cast<std::size_t>(i)];
    return Complex(m.omega, -(m.intrinsic_damping + gamma_));
}

CoupledSystem CoupledSystem::with_frequencies(const std::vector<double>& omegas) const {
    require(omegas.size() == modes_.size(), "with_frequencies: size mismatch");
    std::vector<Mode> updated = modes_;
    for (std::size_t i = 0; i < updated.size(); ++i) {
        updated[i] = Mode(updated[i].label, omegas[i], updated[i].intrinsic_damping);
    }
    return CoupledSystem(std::move(updated), gamma_, coupling_);
}

CircuitMatrix::CircuitMatrix(Eigen::VectorXd inductances, Eigen::VectorXd capacitances,
                             Eigen::MatrixXd mutual)
    : inductance_(std::move(inductances)), capacitance_(std::move(capacitances)),
      mutual_(std::move(mutual)) {
    const int n = static_cast<int>(inductance_.size());
    require(n >= 1, "CircuitMatrix needs at least 1 resonator");
    require(capacitance_.size() == n, "inductance/capacitance size mismatch");
    require(mutual_.rows() == n && mutual_.cols() == n, "mutual matrix must be N x N");
    for (int i = 0; i < n; ++i) {
        require(is_finite(inductance_[i]) && inductance_[i] > 0.0, "inductances must be > 0");
        require(is_finite(capacitance_[i]) && capacitance_[i] > 0.0, "capacitances must be > 0");
        require(mutual_(i, i) == 0.0, "mutual diagonal must be zero");
        for (int j = 0; j < n; ++j) {
            require(is_finite(mutual_(i, j)), "mutual entries must be finite");
            require(mutual_(i, j) == mutual_(j, i), "mutual matrix must be symmetric");
        }
    }
}

double CircuitMatrix::bare_frequency(int i) const {
    return 1.0 / std::sqrt(inductance_[i] * capacitance_[i]);
}

Eigen::MatrixXd CircuitMatrix::at(double omega) const {
    const int n = size();
    const double w2 = omega * omega;
    Eigen::MatrixXd m = -w2 * mutual_;
    for (int i = 0; i < n; ++i) {
        m(i, i) = stiffness(i) - inductance_[i] * w2;
    }
    return m;
}

// ---------------------------------------------------------------------------
// Effective matrix and eigenmodes
// ---------------------------------------------------------------------------

Eigen::MatrixXcd effective_matrix(const CoupledSystem& sys) {
    const int n = sys.size();
    Eigen::MatrixXcd h = sys.coupling();
    for (int i = 0; i < n; ++i) {
        h(i, i) = sys.effective_frequency(i);
    }
    return h;
}

std::vector<Eigenmode> eigenmodes(const Eigen::MatrixXcd& matrix) {
    const int n = static_cast<int>(matrix.rows());
    require(matrix.cols() == n, "eigenmodes: matrix must be square");
    require(n >= 2, "eigenmodes: need at least a 2x2 matrix");
    require(matrix.allFinite(), "eigenmodes: matrix entries must be finite");

    std::vector<Eigenmode> result;
    result.reserve(static_cast<std::size_t>(n));

    bool diagonal = true;
    for (int i = 0; i < n && diagonal; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i != j && matrix(i, j) != Complex(0.0, 0.0)) {
                diagonal = false;
                break;
            }
        }
    }

    if (diagonal) {
        // Decoupled system: eigenvalues are the diagonal entries exactly.
        for (int i = 0; i < n; ++i) {
            Eigenmode m;
            m.eigenvalue = matrix(i, i);
            m.amplitudes = Eigen::VectorXcd::Zero(n);
            m.amplitudes[i] = Complex(1.0, 0.0);
            result.push_back(std::move(m));
        }
    } else {
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(matrix, /*computeEigenvectors=*/true);
        if (solver.info() != Eigen::Success) {
            throw ComputeError("eigenmodes: eigen solver did not converge");
        }
        const double scale = matrix.norm();
        for (int k = 0; k < n; ++k) {
            Eigenmode m;
            m.eigenvalue = solver.eigenvalues()[k];
            m.amplitudes = solver.eigenvectors().col(k).normalized();
            const double residual = (matrix * m.amplitudes - m.eigenvalue * m.amplitudes).norm();
            if (!is_finite(m.eigenvalue) || residual > 1e-9 * scale) {
                throw ComputeError("eigenmodes: eigenpair residual exceeds tolerance");
            }
            result.push_back(std::move(m));
        }
    }

    std::sort(result.begin(), result.end(), [](const Eigenmode& a, const Eigenmode& b) {
        if (a.eigenvalue.real() != b.eigenvalue.real()) {
            return a.eigenvalue.real() < b.eigenvalue.real();
        }
        return a.eigenvalue.imag() < b.eigenvalue.imag();
    });
    return result;
}

// ---------------------------------------------------------------------------
// Circuit polynomial roots
// ---------------------------------------------------------------------------

namespace {

// Monic characteristic polynomial det(x I - B) by the Faddeev-LeVerrier
// recurrence. Coefficients ascending: c[0] + c[1] x + ... + c[n] x^n.
std::vector<double> characteristic_polynomial(const Eigen::MatrixXd& b) {
    const int n = static_cast<int>(b.rows());
    std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
    c[static_cast<std::size_t>(n)] = 1.0;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k <= n; ++k) {
        m = b * m + c[static_cast<std::size_t>(n - k + 1)] * Eigen::MatrixXd::Identity(n, n);
        c[static_cast<std::size_t>(n - k)] = -(b * m).trace() / static_cast<double>(k);
    }
    return c;
}

// Roots of a monic real polynomial via its companion matrix.
std::vector<Complex> companion_roots(const std::vector<double>& coeffs) {
    const int n = static_cast<int>(coeffs.size()) - 1;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) {
        companion(i, i - 1) = 1.0;
    }
    for (int i = 0; i < n; ++i) {
        companion(i, n - 1) = -coeffs[static_cast<std::size_t>(i)];
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw ComputeError("companion_roots: eigen solver did not converge");
    }
    std::vector<Complex> roots(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        roots[static_cast<std::size_t>(i)] = solver.eigenvalues()[i];
    }
    return roots;
}

} // namespace

std::vector<double> circuit_polynomial_roots(const CircuitMatrix& circuit) {
    const int n = circuit.size();
    std::vector<double> roots;
    roots.reserve(static_cast<std::size_t>(n));

    if (circuit.mutual().isZero(0.0)) {
        // Decoupled limit: roots are exactly 1/sqrt(L_i C_i).
        for (int i = 0; i < n; ++i) {
            roots.push_back(circuit.bare_frequency(i));
        }
        std::sort(roots.begin(), roots.end());
        return roots;
    }

    // det M(omega) = det(K - x A) with x = omega^2, A = diag(L) + mutual.
    // Roots in x are those of the monic characteristic polynomial of A^-1 K.
    Eigen::MatrixXd a = circuit.mutual();
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        a(i, i) = circuit.inductances()[i];
        k(i, i) = circuit.stiffness(i);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) {
        throw ComputeError("circuit_polynomial_roots: singular inductance matrix (unphysical circuit)");
    }
    const std::vector<double> poly = characteristic_polynomial(lu.solve(k));
    const std::vector<Complex> x_roots = companion_roots(poly);

    double scale = 0.0;
    for (const Complex& x : x_roots) {
        scale = std::max(scale, std::abs(x));
    }
    for (const Complex& x : x_roots) {
        if (x.real() > 0.0 && std::abs(x.imag()) <= 1e-8 * std::max(1.0, scale)) {
            roots.push_back(std::sqrt(x.real()));
        }
    }
    if (static_cast<int>(roots.size()) != n) {
        throw ComputeError("circuit_polynomial_roots: fewer than N positive real roots "
                           "(over-coupled or unphysical circuit)");
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

Eigen::MatrixXd perturbative_coupling(const CircuitMatrix& circuit) {
    const int n = circuit.size();
    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double m = circuit.mutual()(i, j);
            const double ll = circuit.inductances()[i] * circuit.inductances()[j];
            if (m * m > 0.1 * ll) {
                throw ComputeError("perturbative_coupling: mutual inductance too strong for "
                                   "the weak-coupling expansion (M_ij^2 > 0.1 L_i L_j)");
            }
            const double wi = circuit.bare_frequency(i);
            const double wj = circuit.bare_frequency(j);
            delta(i, j) = m * std::sqrt(wi * wj) / (2.0 * std::sqrt(ll));
            delta(j, i) = delta(i, j);
        }
    }
    return delta;
}

} // namespace ppc
