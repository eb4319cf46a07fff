#pragma once

// =============================================================================
// Parameter recovery by nonlinear least squares: bounded Nelder-Mead simplex
// with multi-start, over either per-point |S21| residuals (trace mode) or
// extracted-peak frequency residuals (branch mode).
// =============================================================================

#include <map>
#include <string>
#include <vector>

#include "ppc/analysis.hpp"
#include "ppc/config.hpp"

namespace ppc {

struct FitResult {
    std::map<std::string, double> parameters;  ///< free + fixed, at the optimum
    double residual_norm = 0.0;                ///< root-mean-square residual
    int iterations = 0;                        ///< simplex iterations of the winning start
    bool converged = false;
    std::map<std::string, double> sensitivity; ///< diagonal curvature of the squared residual
    std::vector<double> start_residuals;       ///< per-start final residuals, start order
    int best_start = 0;
};

struct FitOptions {
    int starts = 8;
    std::uint64_t seed = 0;
    int max_iterations = 2000; ///< per start
    bool parallel = true;      ///< run starts concurrently
    double min_depth = 0.02;   ///< peak threshold for the branch objective
};

/// One fitting task: a model template, the parameters to vary, and the data
/// to match. The model is evaluated on the data's own grid and L values.
class FitProblem {
public:
    FitProblem(ProjectConfig base, FitSpec spec, SweepResult data, double min_depth = 0.02);

    /// Residual vector at the given parameter values. The map must contain
    /// exactly the declared free and fixed parameters.
    Eigen::VectorXd objective(const std::map<std::string, double>& params) const;

    /// Root-mean-square of objective().
    double residual_norm(const std::map<std::string, double>& params) const;

    /// Multi-start bounded simplex descent. Deterministic for a fixed seed,
    /// independent of how many threads run the starts.
    FitResult fit(const FitOptions& options = {}) const;

    const FitSpec& spec() const { return spec_; }
    const SweepResult& data() const { return data_; }

    /// Copy of the base config with the parameter values applied.
    ProjectConfig configure(const std::map<std::string, double>& params) const;

private:
    ProjectConfig base_;
    FitSpec spec_;
    SweepResult data_;
    double min_depth_;
    std::vector<std::vector<Peak>> data_peaks_; ///< per trace, for the branch objective
};

/// Convenience wrappers matching the operation names used elsewhere.
inline Eigen::VectorXd objective(const FitProblem& problem,
                                 const std::map<std::string, double>& params) {
    return problem.objective(params);
}
inline FitResult fit(const FitProblem& problem, const FitOptions& options = {}) {
    return problem.fit(options);
}

} // namespace ppc
