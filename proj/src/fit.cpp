#include "ppc/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "ppc/analysis.hpp"

namespace ppc {

namespace {

bool starts_with(const std::string& s, const std::string& prefix) {
    return s.rfind(prefix, 0) == 0;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Parameter naming scheme (labels lowercased):
//   gamma                      extrinsic damping
//   damping_<label>            intrinsic damping of one mode
//   omega_<label>              constant frequency of a fixed-law mode
//   geom_<label>_a|_b          inverse-law coefficients of one mode
//   delta_<l1>_<l2>_re|_im     one coupling component
void apply_parameter(ProjectConfig& config, const std::string& name, double value) {
    if (name == "gamma") {
        config.extrinsic_damping = value;
        return;
    }
    if (starts_with(name, "damping_")) {
        const int idx = config.mode_index(name.substr(8));
        if (idx < 0) {
            throw ConfigError("fit parameter '" + name + "': unknown mode label");
        }
        config.modes[static_cast<std::size_t>(idx)].intrinsic_damping = value;
        return;
    }
    if (starts_with(name, "omega_")) {
        const int idx = config.mode_index(name.substr(6));
        if (idx < 0) {
            throw ConfigError("fit parameter '" + name + "': unknown mode label");
        }
        ModeLaw& law = config.modes[static_cast<std::size_t>(idx)].law;
        if (law.kind != ModeLaw::Kind::Fixed) {
            throw ConfigError("fit parameter '" + name + "': mode does not use a fixed law");
        }
        law.omega = value;
        return;
    }
    if (starts_with(name, "geom_") && (ends_with(name, "_a") || ends_with(name, "_b"))) {
        const std::string label = name.substr(5, name.size() - 7);
        const int idx = config.mode_index(label);
        if (idx < 0) {
            throw ConfigError("fit parameter '" + name + "': unknown mode label");
        }
        ModeLaw& law = config.modes[static_cast<std::size_t>(idx)].law;
        if (law.kind != ModeLaw::Kind::Inverse) {
            throw ConfigError("fit parameter '" + name + "': mode does not use an inverse law");
        }
        (ends_with(name, "_a") ? law.a : law.b) = value;
        return;
    }
    if (starts_with(name, "delta_") && (ends_with(name, "_re") || ends_with(name, "_im"))) {
        const std::string middle = name.substr(6, name.size() - 9);
        // Try every split of the middle into two known labels.
        for (std::size_t pos = middle.find('_'); pos != std::string::npos;
             pos = middle.find('_', pos + 1)) {
            const int ia = config.mode_index(middle.substr(0, pos));
            const int ib = config.mode_index(middle.substr(pos + 1));
            if (ia >= 0 && ib >= 0 && ia != ib) {
                Complex delta = config.coupling(ia, ib);
                if (ends_with(name, "_re")) {
                    delta = Complex(value, delta.imag());
                } else {
                    delta = Complex(delta.real(), value);
                }
                config.coupling(ia, ib) = delta;
                config.coupling(ib, ia) = delta;
                return;
            }
        }
        throw ConfigError("fit parameter '" + name + "': cannot resolve mode pair");
    }
    throw ConfigError("unknown fit parameter '" + name + "'");
}

// Bounded parameters enter the simplex through x = lo + (hi-lo)*(sin u + 1)/2,
// which keeps the search unconstrained.
struct BoundTransform {
    double lo = 0.0;
    double hi = 1.0;

    double to_x(double u) const { return lo + (hi - lo) * 0.5 * (std::sin(u) + 1.0); }
    double to_u(double x) const {
        const double t = std::clamp(2.0 * (x - lo) / (hi - lo) - 1.0, -1.0, 1.0);
        return std::asin(t);
    }
};

struct SimplexOutcome {
    Eigen::VectorXd x;
    double value = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

// Standard Nelder-Mead on the transformed coordinates. The convergence flag
// is set once the best residual improves by less than 1e-10 (relative) over a
// full cycle of dim+1 iterations.
template <typename F>
SimplexOutcome nelder_mead(F&& objective, const Eigen::VectorXd& u0, int max_iterations) {
    const int dim = static_cast<int>(u0.size());
    const int cycle = dim + 1;
    const double initial_step = 0.3;

    std::vector<Eigen::VectorXd> vertex(static_cast<std::size_t>(dim) + 1, u0);
    std::vector<double> value(static_cast<std::size_t>(dim) + 1);
    for (int j = 0; j < dim; ++j) {
        vertex[static_cast<std::size_t>(j) + 1][j] += initial_step;
    }
    for (std::size_t v = 0; v < vertex.size(); ++v) {
        value[v] = objective(vertex[v]);
    }

    auto order = [&]() {
        std::vector<std::size_t> idx(vertex.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            idx[i] = i;
        }
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
        std::vector<Eigen::VectorXd> sv;
        std::vector<double> sf;
        sv.reserve(idx.size());
        sf.reserve(idx.size());
        for (const std::size_t i : idx) {
            sv.push_back(vertex[i]);
            sf.push_back(value[i]);
        }
        vertex = std::move(sv);
        value = std::move(sf);
    };

    order();
    SimplexOutcome out;
    double cycle_best = value.front();
    int iteration = 0;
    for (; iteration < max_iterations; ++iteration) {
        if (iteration > 0 && iteration % cycle == 0) {
            const double improvement = cycle_best - value.front();
            if (improvement <= 1e-10 * std::max(value.front(), 1e-30) + 1e-16) {
                out.converged = true;
                break;
            }
            cycle_best = value.front();
        }

        const std::size_t worst = vertex.size() - 1;
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
        for (std::size_t v = 0; v < worst; ++v) {
            centroid += vertex[v];
        }
        centroid /= static_cast<double>(worst);

        const Eigen::VectorXd reflected = centroid + (centroid - vertex[worst]);
        const double f_reflected = objective(reflected);
        if (f_reflected < value.front()) {
            const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - vertex[worst]);
            const double f_expanded = objective(expanded);
            if (f_expanded < f_reflected) {
                vertex[worst] = expanded;
                value[worst] = f_expanded;
            } else {
                vertex[worst] = reflected;
                value[worst] = f_reflected;
            }
        } else if (f_reflected < value[worst - 1]) {
            vertex[worst] = reflected;
            value[worst] = f_reflected;
        } else {
            const bool outside = f_reflected < value[worst];
            const Eigen::VectorXd contracted =
                outside ? centroid + 0.5 * (reflected - centroid)
                        : centroid + 0.5 * (vertex[worst] - centroid);
            const double f_contracted = objective(contracted);
            if (f_contracted < std::min(f_reflected, value[worst])) {
                vertex[worst] = contracted;
                value[worst] = f_contracted;
            } else {
                for (std::size_t v = 1; v < vertex.size(); ++v) {
                    vertex[v] = vertex[0] + 0.5 * (vertex[v] - vertex[0]);
                    value[v] = objective(vertex[v]);
                }
            }
        }
        order();
    }

    out.x = vertex.front();
    out.value = value.front();
    out.iterations = iteration;
    return out;
}

} // namespace

FitProblem::FitProblem(ProjectConfig base, FitSpec spec, SweepResult data, double min_depth)
    : base_(std::move(base)), spec_(std::move(spec)), data_(std::move(data)),
      min_depth_(min_depth) {
    if (spec_.free.empty()) {
        throw std::invalid_argument("FitProblem: no free parameters");
    }
    if (data_.traces.empty() || data_.traces.size() != data_.l_values.size()) {
        throw std::invalid_argument("FitProblem: data must be non-empty and consistent");
    }
    const FrequencyGrid& grid = data_.traces.front().grid;
    for (const SpectrumTrace& trace : data_.traces) {
        if (trace.grid.start() != grid.start() || trace.grid.stop() != grid.stop() ||
            trace.grid.points() != grid.points()) {
            throw ConfigError("FitProblem: data traces do not share one frequency grid");
        }
        if (trace.s21.size() != grid.points()) {
            throw ConfigError("FitProblem: trace length does not match its grid");
        }
    }

    double mean = 0.0;
    double count = 0.0;
    for (const SpectrumTrace& trace : data_.traces) {
        for (const double m : trace.magnitudes()) {
            mean += m;
            count += 1.0;
        }
    }
    mean /= count;
    double variance = 0.0;
    for (const SpectrumTrace& trace : data_.traces) {
        for (const double m : trace.magnitudes()) {
            variance += (m - mean) * (m - mean);
        }
    }
    if (variance / count < 1e-18) {
        throw std::invalid_argument("FitProblem: degenerate data (constant traces)");
    }

    if (spec_.objective == FitObjective::BranchResidual) {
        data_peaks_.reserve(data_.traces.size());
        for (const SpectrumTrace& trace : data_.traces) {
            data_peaks_.push_back(find_peaks(trace, min_depth_));
        }
    }

    // Surfaces unknown parameter names immediately, and checks coverage.
    std::map<std::string, double> initial;
    for (const FitParameter& p : spec_.free) {
        initial[p.name] = p.initial;
    }
    for (const auto& [name, value] : spec_.fixed) {
        initial[name] = value;
    }
    const Eigen::Index residual_size = objective(initial).size();
    if (residual_size < 3 * static_cast<Eigen::Index>(spec_.free.size())) {
        throw std::invalid_argument(
            "FitProblem: data must cover at least 3 points per free parameter");
    }
}

ProjectConfig FitProblem::configure(const std::map<std::string, double>& params) const {
    std::size_t expected = spec_.free.size() + spec_.fixed.size();
    if (params.size() != expected) {
        throw std::invalid_argument("FitProblem: params must cover exactly the declared set");
    }
    ProjectConfig config = base_;
    for (const FitParameter& p : spec_.free) {
        const auto it = params.find(p.name);
        if (it == params.end()) {
            throw std::invalid_argument("FitProblem: missing parameter '" + p.name + "'");
        }
        apply_parameter(config, p.name, it->second);
    }
    for (const auto& [name, value] : spec_.fixed) {
        const auto it = params.find(name);
        if (it == params.end()) {
            throw std::invalid_argument("FitProblem: missing fixed parameter '" + name + "'");
        }
        (void)value;
        apply_parameter(config, name, it->second);
    }
    return config;
}

Eigen::VectorXd FitProblem::objective(const std::map<std::string, double>& params) const {
    const ProjectConfig config = configure(params);
    const FrequencyGrid& grid = data_.traces.front().grid;

    if (spec_.objective == FitObjective::TraceResidual) {
        Eigen::VectorXd residual(static_cast<Eigen::Index>(data_.traces.size()) * grid.points());
        Eigen::Index at = 0;
        for (std::size_t li = 0; li < data_.traces.size(); ++li) {
            const CoupledSystem sys = config.system_at(data_.l_values[li], /*override_domain=*/true);
            const SpectrumTrace model = s21(sys, grid, config.drive);
            for (int k = 0; k < grid.points(); ++k) {
                residual[at++] = std::abs(model.s21[k]) - std::abs(data_.traces[li].s21[k]);
            }
        }
        return residual;
    }

    // Branch residual: for every data peak, the distance to the nearest model
    // peak; a missing model peak costs the whole grid span.
    const double span = grid.stop() - grid.start();
    std::vector<double> entries;
    for (std::size_t li = 0; li < data_.traces.size(); ++li) {
        const CoupledSystem sys = config.system_at(data_.l_values[li], /*override_domain=*/true);
        const SpectrumTrace model_trace = s21(sys, grid, config.drive);
        const std::vector<Peak> model_peaks = find_peaks(model_trace, min_depth_);
        for (const Peak& data_peak : data_peaks_[li]) {
            if (model_peaks.empty()) {
                entries.push_back(span);
                continue;
            }
            double best = std::numeric_limits<double>::infinity();
            double signed_best = span;
            for (const Peak& model_peak : model_peaks) {
                const double diff = model_peak.frequency - data_peak.frequency;
                if (std::abs(diff) < best) {
                    best = std::abs(diff);
                    signed_best = diff;
                }
            }
            entries.push_back(signed_best);
        }
    }
    return Eigen::Map<Eigen::VectorXd>(entries.data(), static_cast<Eigen::Index>(entries.size()));
}

double FitProblem::residual_norm(const std::map<std::string, double>& params) const {
    const Eigen::VectorXd r = objective(params);
    return std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
}

FitResult FitProblem::fit(const FitOptions& options) const {
    if (options.starts < 1) {
        throw std::invalid_argument("FitOptions: starts must be >= 1");
    }
    const int dim = static_cast<int>(spec_.free.size());

    std::vector<BoundTransform> transform(static_cast<std::size_t>(dim));
    for (int j = 0; j < dim; ++j) {
        transform[static_cast<std::size_t>(j)] = {spec_.free[static_cast<std::size_t>(j)].lower,
                                                  spec_.free[static_cast<std::size_t>(j)].upper};
    }

    auto params_at = [&](const Eigen::VectorXd& u) {
        std::map<std::string, double> params;
        for (int j = 0; j < dim; ++j) {
            params[spec_.free[static_cast<std::size_t>(j)].name] =
                transform[static_cast<std::size_t>(j)].to_x(u[j]);
        }
        for (const auto& [name, value] : spec_.fixed) {
            params[name] = value;
        }
        return params;
    };
    auto evaluate = [&](const Eigen::VectorXd& u) -> double {
        try {
            return residual_norm(params_at(u));
        } catch (const std::exception&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    // All start points are drawn up front so the result does not depend on
    // how the starts are scheduled across threads.
    std::vector<Eigen::VectorXd> starts;
    starts.reserve(static_cast<std::size_t>(options.starts));
    {
        Eigen::VectorXd u0(dim);
        for (int j = 0; j < dim; ++j) {
            u0[j] = transform[static_cast<std::size_t>(j)].to_u(
                spec_.free[static_cast<std::size_t>(j)].initial);
        }
        starts.push_back(u0);
        std::mt19937_64 rng(options.seed);
        const double inv = 1.0 / (static_cast<double>(rng.max()) + 1.0);
        for (int s = 1; s < options.starts; ++s) {
            Eigen::VectorXd u(dim);
            for (int j = 0; j < dim; ++j) {
                const BoundTransform& t = transform[static_cast<std::size_t>(j)];
                const double x = t.lo + (t.hi - t.lo) * static_cast<double>(rng()) * inv;
                u[j] = t.to_u(x);
            }
            starts.push_back(u);
        }
    }

    std::vector<SimplexOutcome> outcomes(starts.size());
#pragma omp parallel for schedule(dynamic) if (options.parallel)
    for (int s = 0; s < static_cast<int>(starts.size()); ++s) {
        outcomes[static_cast<std::size_t>(s)] =
            nelder_mead(evaluate, starts[static_cast<std::size_t>(s)], options.max_iterations);
    }

    int best = 0;
    for (int s = 1; s < static_cast<int>(outcomes.size()); ++s) {
        if (outcomes[static_cast<std::size_t>(s)].value < outcomes[static_cast<std::size_t>(best)].value) {
            best = s;
        }
    }

    FitResult result;
    result.best_start = best;
    result.iterations = outcomes[static_cast<std::size_t>(best)].iterations;
    result.converged = outcomes[static_cast<std::size_t>(best)].converged &&
                       std::isfinite(outcomes[static_cast<std::size_t>(best)].value);
    result.residual_norm = outcomes[static_cast<std::size_t>(best)].value;
    result.start_residuals.reserve(outcomes.size());
    for (const SimplexOutcome& o : outcomes) {
        result.start_residuals.push_back(o.value);
    }

    if (!std::isfinite(result.residual_norm)) {
        // Every start failed to evaluate; report the initial point honestly.
        result.parameters = params_at(starts.front());
        result.converged = false;
        return result;
    }
    result.parameters = params_at(outcomes[static_cast<std::size_t>(best)].x);

    // Per-parameter sensitivity: diagonal curvature of the mean squared
    // residual, by central second differences in the original coordinates.
    const Eigen::VectorXd& u_best = outcomes[static_cast<std::size_t>(best)].x;
    auto squared_norm_at = [&](std::map<std::string, double> params) {
        const double r = residual_norm(params);
        return r * r;
    };
    for (int j = 0; j < dim; ++j) {
        const FitParameter& p = spec_.free[static_cast<std::size_t>(j)];
        const double h = 1e-4 * (p.upper - p.lower);
        // Shift the stencil inward when the optimum sits on a bound.
        const double x = std::clamp(transform[static_cast<std::size_t>(j)].to_x(u_best[j]),
                                    p.lower + h, p.upper - h);
        std::map<std::string, double> center = result.parameters;
        std::map<std::string, double> plus = result.parameters;
        std::map<std::string, double> minus = result.parameters;
        center[p.name] = x;
        plus[p.name] = x + h;
        minus[p.name] = x - h;
        double curvature = 0.0;
        try {
            curvature = (squared_norm_at(plus) - 2.0 * squared_norm_at(center) +
                         squared_norm_at(minus)) /
                        (h * h);
        } catch (const std::exception&) {
            curvature = std::numeric_limits<double>::quiet_NaN();
        }
        result.sensitivity[p.name] = curvature;
    }
    return result;
}

} // namespace ppc
