#pragma once

// =============================================================================
// Project configuration: modes with geometry laws, couplings, damping, grid,
// sweep plan, drive, and an optional fit specification. Loaded from JSON with
// strict schema checking (unknown keys are errors) and validated against the
// model invariants at load time.
// =============================================================================

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ppc/spectrum.hpp"

namespace ppc {

struct ModeConfig {
    std::string label;
    double intrinsic_damping = 0.0;
    ModeLaw law;
};

enum class FitObjective { TraceResidual, BranchResidual };

struct FitParameter {
    std::string name;
    double initial = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

struct FitSpec {
    FitObjective objective = FitObjective::TraceResidual;
    std::vector<FitParameter> free;
    std::vector<std::pair<std::string, double>> fixed;
};

class ProjectConfig {
public:
    std::string preset; ///< preset this config was derived from, if any
    std::vector<ModeConfig> modes;
    double extrinsic_damping = 0.0;
    Eigen::MatrixXcd coupling; ///< symmetric, zero diagonal, one row/col per mode
    Eigen::VectorXcd drive;    ///< per-mode feedline amplitudes
    FrequencyGrid grid;
    std::vector<double> l_values; ///< sweep plan, may be empty
    double l_min = 4.0;
    double l_max = 18.0;
    std::optional<FitSpec> fit;

    /// Checks every model invariant; throws ConfigError on violation.
    void validate() const;

    GeometryMap geometry() const;
    CoupledSystem system_at(double l, bool override_domain = false) const;
    int mode_index(const std::string& label) const; ///< -1 when absent
};

std::vector<std::string> preset_names();

/// Built-in named parameter sets. "paper-fig4" is the three-mode CSRR system:
/// fixed mode A at 5 GHz, modes B and C on inverse laws calibrated so that B
/// crosses A near L = 7.8 mm (coherent A-B coupling, level repulsion) and C
/// crosses A near L = 14.5 mm (dissipative A-C coupling, level attraction).
ProjectConfig preset_config(const std::string& name);

ProjectConfig load_config(const std::string& path);
void save_config(const ProjectConfig& config, const std::string& path);

/// JSON text of a config (used by save_config, reports, and --verbose).
std::string config_to_json(const ProjectConfig& config);

} // namespace ppc
