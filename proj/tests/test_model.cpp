#include <doctest.h>

#include <random>

#include "ppc/model.hpp"
#include "oracles.hpp"

using ppc::Complex;

namespace {

ppc::CoupledSystem two_mode(double omega_a, double omega_b, double alpha_a, double alpha_b,
                            double gamma, Complex delta) {
    Eigen::MatrixXcd coupling = Eigen::MatrixXcd::Zero(2, 2);
    coupling(0, 1) = coupling(1, 0) = delta;
    return ppc::CoupledSystem({ppc::Mode("A", omega_a, alpha_a), ppc::Mode("B", omega_b, alpha_b)},
                              gamma, coupling);
}

ppc::CoupledSystem random_system(std::mt19937_64& rng, int n) {
    auto uniform = [&](double lo, double hi) {
        return lo + (hi - lo) * static_cast<double>(rng()) / (static_cast<double>(rng.max()) + 1.0);
    };
    std::vector<ppc::Mode> modes;
    for (int i = 0; i < n; ++i) {
        modes.emplace_back("m" + std::to_string(i), uniform(2.0, 12.0), uniform(0.0, 0.08));
    }
    Eigen::MatrixXcd coupling = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            coupling(i, j) = coupling(j, i) =
                Complex(uniform(-0.3, 0.3), uniform(-0.05, 0.05));
        }
    }
    return ppc::CoupledSystem(std::move(modes), uniform(0.0, 0.03), coupling);
}

oracle::CMatrix to_oracle(const Eigen::MatrixXcd& m) {
    oracle::CMatrix out = oracle::cmatrix(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
        }
    }
    return out;
}

} // namespace

TEST_CASE("Mode and CoupledSystem invariants") {
    CHECK_THROWS_AS(ppc::Mode("x", -1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ppc::Mode("x", 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ppc::Mode("x", 5.0, -0.1), std::invalid_argument);

    Eigen::MatrixXcd coupling = Eigen::MatrixXcd::Zero(2, 2);
    std::vector<ppc::Mode> modes{ppc::Mode("A", 5.0, 0.01), ppc::Mode("B", 6.0, 0.02)};

    CHECK_THROWS_AS(ppc::CoupledSystem({ppc::Mode("A", 5.0, 0.01)}, 0.0,
                                       Eigen::MatrixXcd::Zero(1, 1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(ppc::CoupledSystem(modes, -0.1, coupling), std::invalid_argument);

    Eigen::MatrixXcd asym = coupling;
    asym(0, 1) = Complex(0.1, 0.0);
    CHECK_THROWS_AS(ppc::CoupledSystem(modes, 0.0, asym), std::invalid_argument);

    Eigen::MatrixXcd diag = coupling;
    diag(0, 0) = Complex(0.1, 0.0);
    CHECK_THROWS_AS(ppc::CoupledSystem(modes, 0.0, diag), std::invalid_argument);
}

TEST_CASE("effective_matrix: decoupled diagonal and paper dampings") {
    // All couplings zero, gamma = 0: exactly diag(omega_i - i*alpha_i).
    Eigen::MatrixXcd coupling = Eigen::MatrixXcd::Zero(3, 3);
    const ppc::CoupledSystem sys(
        {ppc::Mode("A", 5.0, 0.02387), ppc::Mode("B", 4.8, 0.03579), ppc::Mode("C", 5.2, 0.03290)},
        0.0, coupling);
    const Eigen::MatrixXcd h = ppc::effective_matrix(sys);
    CHECK(h(0, 0) == Complex(5.0, -0.02387));
    CHECK(h(1, 1) == Complex(4.8, -0.03579));
    CHECK(h(2, 2) == Complex(5.2, -0.03290));
    CHECK(h(0, 1) == Complex(0.0, 0.0));
}

TEST_CASE("effective_matrix is symmetric for random systems") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 4);
        const Eigen::MatrixXcd h = ppc::effective_matrix(random_system(rng, n));
        CHECK((h - h.transpose()).norm() == 0.0);
    }
}

TEST_CASE("eigenmodes: degenerate two-mode splitting is exactly 2*Delta") {
    const auto sys = two_mode(5.0, 5.0, 0.02, 0.02, 0.0, Complex(0.1, 0.0));
    const auto modes = ppc::eigenmodes(ppc::effective_matrix(sys));
    REQUIRE(modes.size() == 2);
    CHECK(modes[0].eigenvalue.real() == doctest::Approx(4.9).epsilon(1e-12));
    CHECK(modes[1].eigenvalue.real() == doctest::Approx(5.1).epsilon(1e-12));
    const double gap = modes[1].eigenvalue.real() - modes[0].eigenvalue.real();
    CHECK(std::abs(gap - 0.2) <= 1e-10);
}

TEST_CASE("eigenmodes: dissipatively coupled pair against the quadratic oracle") {
    // omega_A = omega_B = 5, dampings 0.02 / 0.04, Delta = 0.05i.
    const auto sys = two_mode(5.0, 5.0, 0.02, 0.04, 0.0, Complex(0.0, 0.05));
    const auto modes = ppc::eigenmodes(ppc::effective_matrix(sys));
    REQUIRE(modes.size() == 2);

    const auto [lo, hi] = oracle::eigenvalues_2x2(Complex(5.0, -0.02), Complex(0.0, 0.05),
                                                  Complex(0.0, 0.05), Complex(5.0, -0.04));
    CHECK(std::abs(modes[0].eigenvalue - lo) <= 1e-12);
    CHECK(std::abs(modes[1].eigenvalue - hi) <= 1e-12);

    // Frozen values from the quadratic: 5 - 0.03i -/+ i*sqrt(0.0026).
    CHECK(modes[0].eigenvalue.real() == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(modes[0].eigenvalue.imag() == doctest::Approx(-0.080990195135927845).epsilon(1e-10));
    CHECK(modes[1].eigenvalue.imag() == doctest::Approx(0.020990195135927845).epsilon(1e-10));
}

TEST_CASE("eigenmodes: three-mode system against the expanded-cubic oracle") {
    Eigen::MatrixXcd coupling = Eigen::MatrixXcd::Zero(3, 3);
    coupling(0, 1) = coupling(1, 0) = Complex(0.08, 0.0);
    coupling(1, 2) = coupling(2, 1) = Complex(0.08, 0.0);
    coupling(0, 2) = coupling(2, 0) = Complex(0.08, 0.0);
    const ppc::CoupledSystem sys(
        {ppc::Mode("A", 5.0, 0.02387), ppc::Mode("B", 4.8, 0.03579), ppc::Mode("C", 5.2, 0.03290)},
        0.0, coupling);
    const Eigen::MatrixXcd h = ppc::effective_matrix(sys);

    // Cubic coefficients written out from trace, principal 2x2 minors, and the
    // determinant; rooted independently of the eigen solver.
    const Complex a = h(0, 0), b = h(1, 1), c = h(2, 2);
    const Complex dab = h(0, 1), dbc = h(1, 2), dca = h(0, 2);
    const Complex c2 = -(a + b + c);
    const Complex c1 = a * b + b * c + c * a - dab * dab - dbc * dbc - dca * dca;
    const Complex c0 = -(a * b * c + 2.0 * dab * dbc * dca - a * dbc * dbc - b * dca * dca -
                         c * dab * dab);
    std::vector<Complex> roots = oracle::durand_kerner({c0, c1, c2, Complex(1.0)});
    oracle::sort_roots(roots);

    const auto modes = ppc::eigenmodes(h);
    REQUIRE(modes.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::abs(modes[i].eigenvalue - roots[i]) <= 1e-9);
    }
}

TEST_CASE("eigenmodes: zero-coupling eigenvalues are the complex frequencies exactly") {
    const auto sys = two_mode(4.0, 6.0, 0.01, 0.03, 0.005, Complex(0.0, 0.0));
    const auto modes = ppc::eigenmodes(ppc::effective_matrix(sys));
    CHECK(modes[0].eigenvalue == sys.effective_frequency(0));
    CHECK(modes[1].eigenvalue == sys.effective_frequency(1));
    CHECK(modes[0].amplitudes[0] == Complex(1.0, 0.0));
}

TEST_CASE("eigenmodes: trace conservation, residuals, unit amplitudes on random systems") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 4);
        const auto sys = random_system(rng, n);
        const Eigen::MatrixXcd h = ppc::effective_matrix(sys);
        const auto modes = ppc::eigenmodes(h);
        REQUIRE(static_cast<int>(modes.size()) == n);

        Complex sum(0.0);
        for (const auto& m : modes) {
            sum += m.eigenvalue;
            CHECK(std::abs(m.amplitudes.norm() - 1.0) <= 1e-12);
            CHECK((h * m.amplitudes - m.eigenvalue * m.amplitudes).norm() <= 1e-9 * h.norm());
        }
        const Complex trace = h.trace();
        CHECK(std::abs(sum - trace) <= 1e-9 * std::abs(trace));
    }
}

TEST_CASE("eigenmodes: oracle equivalence on random systems") {
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 4);
        const Eigen::MatrixXcd h = ppc::effective_matrix(random_system(rng, n));
        const auto modes = ppc::eigenmodes(h);
        const auto reference = oracle::eigenvalues(to_oracle(h));
        for (std::size_t i = 0; i < reference.size(); ++i) {
            CHECK(std::abs(modes[i].eigenvalue - reference[i]) <= 1e-9);
        }
    }
}

TEST_CASE("eigenmodes: exceptional-point coalescence at the critical tuning") {
    // Coherent coupling with damping mismatch 2*Delta at degeneracy.
    {
        const auto sys = two_mode(5.0, 5.0, 0.0, 0.1, 0.01, Complex(0.05, 0.0));
        const auto modes = ppc::eigenmodes(ppc::effective_matrix(sys));
        CHECK(std::abs(modes[0].eigenvalue - modes[1].eigenvalue) <= 1e-6 * 5.0);
    }
    // Dissipative coupling i*Gamma with detuning 2*Gamma at equal dampings.
    {
        const auto sys = two_mode(4.95, 5.05, 0.02, 0.02, 0.01, Complex(0.0, 0.05));
        const auto modes = ppc::eigenmodes(ppc::effective_matrix(sys));
        CHECK(std::abs(modes[0].eigenvalue - modes[1].eigenvalue) <= 1e-6 * 5.0);
    }
}

TEST_CASE("eigenmodes rejects bad input") {
    Eigen::MatrixXcd bad(2, 2);
    bad << Complex(1.0, 0.0), Complex(std::nan(""), 0.0), Complex(0.0, 0.0), Complex(1.0, 0.0);
    CHECK_THROWS_AS(ppc::eigenmodes(bad), std::invalid_argument);
    CHECK_THROWS_AS(ppc::eigenmodes(Eigen::MatrixXcd::Identity(1, 1)), std::invalid_argument);
    CHECK_THROWS_AS(ppc::eigenmodes(Eigen::MatrixXcd::Identity(2, 3)), std::invalid_argument);
}

TEST_CASE("circuit_polynomial_roots: decoupled limit is exact") {
    Eigen::VectorXd inductance(3);
    inductance << 1.0, 2.0, 0.5;
    Eigen::VectorXd capacitance(3);
    capacitance << 1.0, 0.25, 2.0;
    const ppc::CircuitMatrix circuit(inductance, capacitance, Eigen::MatrixXd::Zero(3, 3));
    const auto roots = ppc::circuit_polynomial_roots(circuit);
    REQUIRE(roots.size() == 3);
    // bare frequencies: 1, sqrt(2), 1 -> sorted {1, 1, sqrt(2)}
    CHECK(roots[0] == 1.0);
    CHECK(roots[1] == 1.0);
    CHECK(roots[2] == 1.0 / std::sqrt(0.5));
}

TEST_CASE("circuit_polynomial_roots: symmetric pair splits as 1/sqrt(L -/+ M)") {
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(2);
    Eigen::MatrixXd mutual = Eigen::MatrixXd::Zero(2, 2);
    mutual(0, 1) = mutual(1, 0) = 0.1;
    const ppc::CircuitMatrix circuit(ones, ones, mutual);
    const auto roots = ppc::circuit_polynomial_roots(circuit);
    REQUIRE(roots.size() == 2);
    CHECK(roots[0] == doctest::Approx(1.0 / std::sqrt(1.1)).epsilon(1e-12));
    CHECK(roots[1] == doctest::Approx(1.0 / std::sqrt(0.9)).epsilon(1e-12));
}

TEST_CASE("circuit_polynomial_roots: three resonators against grid-plus-bisection oracle") {
    Eigen::VectorXd inductance(3);
    inductance << 1.0, 1.4, 0.8;
    Eigen::VectorXd capacitance(3);
    capacitance << 0.9, 1.1, 1.3;
    Eigen::MatrixXd mutual = Eigen::MatrixXd::Zero(3, 3);
    mutual(0, 1) = mutual(1, 0) = 0.05;
    mutual(1, 2) = mutual(2, 1) = 0.03;
    mutual(0, 2) = mutual(2, 0) = 0.04;
    const ppc::CircuitMatrix circuit(inductance, capacitance, mutual);

    const auto roots = ppc::circuit_polynomial_roots(circuit);
    const auto reference = oracle::circuit_roots_bisection(
        {1.0, 1.4, 0.8}, {0.9, 1.1, 1.3},
        {{0.0, 0.05, 0.04}, {0.05, 0.0, 0.03}, {0.04, 0.03, 0.0}}, 3.0);
    REQUIRE(roots.size() == reference.size());
    for (std::size_t i = 0; i < roots.size(); ++i) {
        CHECK(roots[i] == doctest::Approx(reference[i]).epsilon(1e-9));
    }
}

TEST_CASE("circuit_polynomial_roots reports over-coupled circuits") {
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(2);
    Eigen::MatrixXd mutual = Eigen::MatrixXd::Zero(2, 2);
    mutual(0, 1) = mutual(1, 0) = 1.2; // |M| > L: indefinite kinetic matrix
    const ppc::CircuitMatrix circuit(ones, ones, mutual);
    CHECK_THROWS_AS(ppc::circuit_polynomial_roots(circuit), ppc::ComputeError);
}

TEST_CASE("perturbative_coupling: decoupled limit and first-order splitting") {
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(2);

    CHECK(ppc::perturbative_coupling(ppc::CircuitMatrix(ones, ones, Eigen::MatrixXd::Zero(2, 2)))
              .isZero(0.0));

    // Symmetric pair: 2*Delta must match the circuit splitting to first order,
    // with the residual shrinking like M^2.
    auto splitting_residual = [&](double m) {
        Eigen::MatrixXd mutual = Eigen::MatrixXd::Zero(2, 2);
        mutual(0, 1) = mutual(1, 0) = m;
        const ppc::CircuitMatrix circuit(ones, ones, mutual);
        const auto roots = ppc::circuit_polynomial_roots(circuit);
        const double delta = ppc::perturbative_coupling(circuit)(0, 1);
        return std::abs((roots[1] - roots[0]) - 2.0 * delta);
    };
    const double r_big = splitting_residual(0.08);
    const double r_small = splitting_residual(0.04);
    CHECK(r_big <= 1.0 * 0.08 * 0.08);       // residual bounded by O(M^2)
    CHECK(r_small <= 0.3 * r_big);            // and shrinking at least quadratically
}

TEST_CASE("perturbative_coupling rejects strong coupling") {
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(2);
    Eigen::MatrixXd mutual = Eigen::MatrixXd::Zero(2, 2);
    mutual(0, 1) = mutual(1, 0) = 0.4; // M^2 = 0.16 > 0.1 * L_i * L_j
    CHECK_THROWS_AS(ppc::perturbative_coupling(ppc::CircuitMatrix(ones, ones, mutual)),
                    ppc::ComputeError);
}

TEST_CASE("perturbative_coupling: effective model reproduces circuit roots at weak coupling") {
    Eigen::VectorXd inductance(3);
    inductance << 1.0, 1.3, 0.7;
    Eigen::VectorXd capacitance(3);
    capacitance << 1.0, 0.8, 1.2;
    Eigen::MatrixXd mutual = Eigen::MatrixXd::Zero(3, 3);
    const double ratio = 0.02; // max M_ij / sqrt(L_i L_j)
    mutual(0, 1) = mutual(1, 0) = ratio * std::sqrt(inductance[0] * inductance[1]);
    mutual(1, 2) = mutual(2, 1) = ratio * std::sqrt(inductance[1] * inductance[2]);
    mutual(0, 2) = mutual(2, 0) = ratio * std::sqrt(inductance[0] * inductance[2]);
    const ppc::CircuitMatrix circuit(inductance, capacitance, mutual);

    const Eigen::MatrixXd delta = ppc::perturbative_coupling(circuit);
    std::vector<ppc::Mode> modes;
    for (int i = 0; i < 3; ++i) {
        modes.emplace_back("m" + std::to_string(i), circuit.bare_frequency(i), 0.0);
    }
    const ppc::CoupledSystem sys(std::move(modes), 0.0, delta.cast<ppc::Complex>());
    const auto eig = ppc::eigenmodes(ppc::effective_matrix(sys));
    const auto roots = ppc::circuit_polynomial_roots(circuit);
    for (std::size_t i = 0; i < roots.size(); ++i) {
        CHECK(std::abs(eig[i].eigenvalue.real() - roots[i]) <= 0.01 * roots[i]);
    }
}
