#pragma once

// =============================================================================
// Transmission-spectrum synthesis.
//
// The adopted transmission model is the resolvent form
//
//     S21(omega) = 1 - i*gamma * d^T (omega*I - H)^-1 d
//
// with H the effective system matrix and d the feedline drive vector
// normalized to unit Euclidean norm. This is a modeling choice: it is the
// minimal linear-response form whose dips sit at the hybrid eigenfrequencies
// and whose depths encode the hybridization weights. For real drives and a
// loss matrix diag(alpha_i) - Im(Delta) that is positive semidefinite the
// formula is provably passive (|S21| <= 1 for all real omega).
// =============================================================================

#include <optional>
#include <vector>

#include "ppc/model.hpp"

namespace ppc {

/// Uniform frequency grid, GHz.
class FrequencyGrid {
public:
    FrequencyGrid() : FrequencyGrid(0.0, 1.0, 2) {}
    FrequencyGrid(double start, double stop, int points);

    double start() const { return start_; }
    double stop() const { return stop_; }
    int points() const { return points_; }
    double step() const { return (stop_ - start_) / (points_ - 1); }
    double frequency(int i) const { return start_ + step() * i; }
    std::vector<double> frequencies() const;

private:
    double start_;
    double stop_;
    int points_;
};

/// Complex S21 samples on one grid, for one sweep point.
struct SpectrumTrace {
    FrequencyGrid grid;
    Eigen::VectorXcd s21;
    std::optional<double> sweep_value; ///< the L value that produced this trace, mm

    std::vector<double> magnitudes() const;
};

/// Per-mode law mapping the geometric sweep parameter L (mm) to a bare
/// frequency (GHz): either a constant or the inverse law omega(L) = a/L + b.
struct ModeLaw {
    enum class Kind { Fixed, Inverse };

    Kind kind = Kind::Fixed;
    double omega = 0.0; ///< Fixed: constant frequency, GHz
    double a = 0.0;     ///< Inverse: GHz*mm
    double b = 0.0;     ///< Inverse: GHz

    static ModeLaw fixed(double omega);
    static ModeLaw inverse(double a, double b);

    double operator()(double l) const;
};

/// Laws for every mode of a system plus the declared L domain.
class GeometryMap {
public:
    GeometryMap(std::vector<ModeLaw> laws, double l_min = 4.0, double l_max = 18.0);

    const std::vector<ModeLaw>& laws() const { return laws_; }
    double l_min() const { return l_min_; }
    double l_max() const { return l_max_; }

private:
    std::vector<ModeLaw> laws_;
    double l_min_;
    double l_max_;
};

/// Traces plus per-mode bare-frequency tracks across an L sweep.
struct SweepResult {
    std::vector<double> l_values;              ///< mm, ascending
    std::vector<SpectrumTrace> traces;         ///< one per L, shared grid
    std::vector<std::vector<double>> mode_tracks; ///< [mode][l index], GHz; empty for data-only results
};

struct SweepOptions {
    bool parallel = true; ///< evaluate sweep points with OpenMP; serial otherwise
};

/// Evaluate the transmission trace of a system on a grid. The drive vector
/// (length N) is normalized internally; it must be nonzero, and gamma must be
/// positive. Throws ComputeError if a sample comes out non-finite.
SpectrumTrace s21(const CoupledSystem& sys, const FrequencyGrid& grid,
                  const Eigen::VectorXcd& drive);

/// Bare mode frequencies at sweep parameter l. Rejects l outside the declared
/// domain unless override_domain is set.
std::vector<double> map_geometry(const GeometryMap& gm, double l, bool override_domain = false);

/// One trace per L value with bare frequencies updated through the geometry
/// map; couplings and dampings held fixed. Sweep points are independent and
/// evaluated in parallel by default; results are assembled in input order.
SweepResult sweep(const CoupledSystem& sys_template, const GeometryMap& gm,
                  const std::vector<double>& l_values, const FrequencyGrid& grid,
                  const Eigen::VectorXcd& drive, const SweepOptions& options = {});

/// Smallest eigenvalue of the loss matrix diag(alpha_i) - Im(coupling).
/// Non-negative margin plus a real drive guarantees |S21| <= 1.
double passivity_margin(const CoupledSystem& sys);

/// True when the system is passive for real drives (see passivity_margin).
bool is_passive(const CoupledSystem& sys);

/// Add seeded Gaussian noise (standard deviation sigma) to the linear |S21|
/// of every trace; phases are discarded. Deterministic for a given seed.
void add_noise(SweepResult& sweep, double sigma, std::uint64_t seed);

} // namespace ppc
