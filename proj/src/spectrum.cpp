#include "ppc/spectrum.hpp"

#include <cmath>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ppc {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw std::invalid_argument(what);
    }
}

} // namespace

FrequencyGrid::FrequencyGrid(double start, double stop, int points)
    : start_(start), stop_(stop), points_(points) {
    require(std::isfinite(start_) && std::isfinite(stop_) && start_ < stop_,
            "FrequencyGrid: start must be finite and < stop");
    require(points_ >= 2, "FrequencyGrid: needs at least 2 points");
}

std::vector<double> FrequencyGrid::frequencies() const {
    std::vector<double> f(static_cast<std::size_t>(points_));
    for (int i = 0; i < points_; ++i) {
        f[static_cast<std::size_t>(i)] = frequency(i);
    }
    return f;
}

std::vector<double> SpectrumTrace::magnitudes() const {
    std::vector<double> m(static_cast<std::size_t>(s21.size()));
    for (Eigen::Index i = 0; i < s21.size(); ++i) {
        m[static_cast<std::size_t>(i)] = std::abs(s21[i]);
    }
    return m;
}

ModeLaw ModeLaw::fixed(double omega) {
    ModeLaw law;
    law.kind = Kind::Fixed;
    law.omega = omega;
    return law;
}

ModeLaw ModeLaw::inverse(double a, double b) {
    ModeLaw law;
    law.kind = Kind::Inverse;
    law.a = a;
    law.b = b;
    return law;
}

double ModeLaw::operator()(double l) const {
    return kind == Kind::Fixed ? omega : a / l + b;
}

GeometryMap::GeometryMap(std::vector<ModeLaw> laws, double l_min, double l_max)
    : laws_(std::move(laws)), l_min_(l_min), l_max_(l_max) {
    require(!laws_.empty(), "GeometryMap: needs at least one law");
    require(std::isfinite(l_min_) && std::isfinite(l_max_) && 0.0 < l_min_ && l_min_ < l_max_,
            "GeometryMap: invalid L domain");
    // The laws are monotone in L, so positivity at both endpoints covers the
    // whole declared domain.
    for (const ModeLaw& law : laws_) {
        require(std::isfinite(law(l_min_)) && std::isfinite(law(l_max_)),
                "GeometryMap: law not finite over the L domain");
        require(law(l_min_) > 0.0 && law(l_max_) > 0.0,
                "GeometryMap: law must stay positive over the L domain");
    }
}

std::vector<double> map_geometry(const GeometryMap& gm, double l, bool override_domain) {
    if (!std::isfinite(l) || l <= 0.0) {
        throw ConfigError("map_geometry: L must be finite and > 0");
    }
    if (!override_domain && (l < gm.l_min() || l > gm.l_max())) {
        throw ConfigError("map_geometry: L = " + std::to_string(l) + " outside the declared domain [" +
                          std::to_string(gm.l_min()) + ", " + std::to_string(gm.l_max()) + "] mm");
    }
    std::vector<double> freqs;
    freqs.reserve(gm.laws().size());
    for (const ModeLaw& law : gm.laws()) {
        freqs.push_back(law(l));
    }
    return freqs;
}

SpectrumTrace s21(const CoupledSystem& sys, const FrequencyGrid& grid,
                  const Eigen::VectorXcd& drive) {
    const int n = sys.size();
    require(drive.size() == n, "s21: drive vector length must match mode count");
    require(drive.allFinite(), "s21: drive entries must be finite");
    const double drive_norm = drive.norm();
    require(drive_norm > 0.0, "s21: drive vector must be nonzero");
    require(sys.extrinsic_damping() > 0.0, "s21: extrinsic damping must be > 0 for a driven system");

    const Eigen::VectorXcd d = drive / drive_norm;
    const Eigen::MatrixXcd h = effective_matrix(sys);
    const Complex i_gamma(0.0, sys.extrinsic_damping());

    SpectrumTrace trace;
    trace.grid = grid;
    trace.s21.resize(grid.points());

    Eigen::MatrixXcd shifted(n, n);
    for (int k = 0; k < grid.points(); ++k) {
        shifted = -h;
        shifted.diagonal().array() += Complex(grid.frequency(k), 0.0);
        const Eigen::VectorXcd x = shifted.partialPivLu().solve(d);
        const Complex value = Complex(1.0, 0.0) - i_gamma * (d.transpose() * x)(0);
        if (!std::isfinite(value.real()) || !std::isfinite(value.imag())) {
            throw ComputeError("s21: non-finite sample at omega = " +
                               std::to_string(grid.frequency(k)));
        }
        trace.s21[k] = value;
    }
    return trace;
}

SweepResult sweep(const CoupledSystem& sys_template, const GeometryMap& gm,
                  const std::vector<double>& l_values, const FrequencyGrid& grid,
                  const Eigen::VectorXcd& drive, const SweepOptions& options) {
    require(!l_values.empty(), "sweep: l_values must be non-empty");
    for (std::size_t i = 1; i < l_values.size(); ++i) {
        require(l_values[i] > l_values[i - 1], "sweep: l_values must be strictly ascending");
    }
    require(static_cast<int>(gm.laws().size()) == sys_template.size(),
            "sweep: geometry map size must match mode count");

    const int n_l = static_cast<int>(l_values.size());
    const int n_modes = sys_template.size();

    SweepResult result;
    result.l_values = l_values;
    result.traces.resize(static_cast<std::size_t>(n_l));
    result.mode_tracks.assign(static_cast<std::size_t>(n_modes),
                              std::vector<double>(static_cast<std::size_t>(n_l)));

    // Resolve geometry up front so domain errors surface with their L value
    // before any spectra are computed.
    std::vector<std::vector<double>> bare(static_cast<std::size_t>(n_l));
    for (int i = 0; i < n_l; ++i) {
        try {
            bare[static_cast<std::size_t>(i)] = map_geometry(gm, l_values[static_cast<std::size_t>(i)]);
        } catch (const std::exception& e) {
            throw ConfigError("sweep at L = " + std::to_string(l_values[static_cast<std::size_t>(i)]) +
                              " mm: " + e.what());
        }
        for (int m = 0; m < n_modes; ++m) {
            result.mode_tracks[static_cast<std::size_t>(m)][static_cast<std::size_t>(i)] =
                bare[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)];
        }
    }

    std::vector<std::string> errors(static_cast<std::size_t>(n_l));
    bool failed = false;

#pragma omp parallel for schedule(dynamic) if (options.parallel)
    for (int i = 0; i < n_l; ++i) {
        try {
            const CoupledSystem sys = sys_template.with_frequencies(bare[static_cast<std::size_t>(i)]);
            SpectrumTrace trace = s21(sys, grid, drive);
            trace.sweep_value = l_values[static_cast<std::size_t>(i)];
            result.traces[static_cast<std::size_t>(i)] = std::move(trace);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(i)] = e.what();
#pragma omp atomic write
            failed = true;
        }
    }

    if (failed) {
        for (int i = 0; i < n_l; ++i) {
            if (!errors[static_cast<std::size_t>(i)].empty()) {
                throw ComputeError("sweep at L = " +
                                   std::to_string(l_values[static_cast<std::size_t>(i)]) + " mm: " +
                                   errors[static_cast<std::size_t>(i)]);
            }
        }
    }
    return result;
}

double passivity_margin(const CoupledSystem& sys) {
    const int n = sys.size();
    Eigen::MatrixXd loss = -sys.coupling().imag();
    for (int i = 0; i < n; ++i) {
        loss(i, i) = sys.modes()[static_cast<std::size_t>(i)].intrinsic_damping;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(loss, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

bool is_passive(const CoupledSystem& sys) {
    return passivity_margin(sys) >= -1e-12;
}

void add_noise(SweepResult& sweep, double sigma, std::uint64_t seed) {
    require(std::isfinite(sigma) && sigma >= 0.0, "add_noise: sigma must be finite and >= 0");
    if (sigma == 0.0) {
        return;
    }
    std::mt19937_64 rng(seed);
    const double inv = 1.0 / (static_cast<double>(rng.max()) + 1.0);
    // Box-Muller on raw engine output: deterministic across platforms, unlike
    // std::normal_distribution.
    auto normal = [&]() {
        const double u1 = (static_cast<double>(rng()) + 1.0) * inv;
        const double u2 = static_cast<double>(rng()) * inv;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    };
    for (SpectrumTrace& trace : sweep.traces) {
        for (Eigen::Index i = 0; i < trace.s21.size(); ++i) {
            const double mag = std::max(0.0, std::abs(trace.s21[i]) + sigma * normal());
            trace.s21[i] = Complex(mag, 0.0);
        }
    }
}

} // namespace ppc
