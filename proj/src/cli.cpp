#include "ppc/cli.hpp"

#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ppc/fit.hpp"
#include "ppc/io.hpp"

namespace ppc {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitCompute = 3;
constexpr int kExitNoConvergence = 4;

Interval parse_region(const std::string& text) {
    const std::size_t colon = text.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
        throw ConfigError("region must be LMIN:LMAX, got '" + text + "'");
    }
    Interval region;
    try {
        std::size_t used = 0;
        region.lo = std::stod(text.substr(0, colon), &used);
        if (used != colon) {
            throw std::invalid_argument(text);
        }
        region.hi = std::stod(text.substr(colon + 1), &used);
        if (used != text.size() - colon - 1) {
            throw std::invalid_argument(text);
        }
    } catch (const std::exception&) {
        throw ConfigError("region must be LMIN:LMAX with numeric bounds, got '" + text + "'");
    }
    if (!(region.lo < region.hi)) {
        throw ConfigError("region must have LMIN < LMAX, got '" + text + "'");
    }
    return region;
}

void print_peak_table(std::ostream& out, const std::vector<Peak>& peaks) {
    out << "peaks: " << peaks.size() << "\n";
    out << std::setw(12) << "freq_GHz" << std::setw(12) << "depth" << std::setw(12) << "width_GHz"
        << "\n";
    out << std::fixed << std::setprecision(6);
    for (const Peak& p : peaks) {
        out << std::setw(12) << p.frequency << std::setw(12) << p.depth << std::setw(12) << p.width
            << "\n";
    }
    out.unsetf(std::ios::fixed);
    out << std::setprecision(6);
}

void print_crossing_report(std::ostream& out, const CrossingReport& report) {
    out << "region_mm:              " << report.region.lo << " .. " << report.region.hi << "\n";
    out << "classification:         " << to_string(report.classification) << "\n";
    out << "gap_GHz:                " << report.gap << "\n";
    out << "coupling_estimate_GHz:  " << report.coupling_estimate << "\n";
    out << "gap_threshold_GHz:      " << report.gap_threshold << "\n";
    out << "merge_tolerance_GHz:    " << report.merge_tolerance << "\n";
    out << "points_in_region:       " << report.points_in_region << "\n";
    out << "branch_count:           " << report.branch_count << "\n";
}

SweepResult filter_region(const SweepResult& data, Interval region) {
    SweepResult filtered;
    for (std::size_t i = 0; i < data.l_values.size(); ++i) {
        if (region.contains(data.l_values[i])) {
            filtered.l_values.push_back(data.l_values[i]);
            filtered.traces.push_back(data.traces[i]);
        }
    }
    return filtered;
}

struct SimulateArgs {
    std::string config_path;
    std::string out_path;
    double l = 0.0;
    double min_depth = 0.02;
    bool db = false;
    bool force_domain = false;
    bool verbose = false;
};

int cmd_simulate(const SimulateArgs& args, std::ostream& out) {
    const ProjectConfig config = load_config(args.config_path);
    if (args.verbose) {
        out << config_to_json(config) << "\n";
    }
    const CoupledSystem sys = config.system_at(args.l, args.force_domain);
    SpectrumTrace trace = s21(sys, config.grid, config.drive);
    trace.sweep_value = args.l;

    SweepResult single;
    single.l_values = {args.l};
    single.traces = {trace};

    SweepCsvLayout layout;
    layout.scale = args.db ? MagnitudeScale::Decibel : MagnitudeScale::Linear;
    write_sweep_csv(single, args.out_path, layout);

    print_peak_table(out, find_peaks(trace, args.min_depth));
    return kExitOk;
}

struct SweepArgs {
    std::string config_path;
    std::string out_path;
    std::string tracks_path;
    double min_depth = 0.02;
    double noise = 0.0;
    std::uint64_t seed = 0;
    bool db = false;
    bool serial = false;
    bool verbose = false;
};

int cmd_sweep(const SweepArgs& args, std::ostream& out) {
    const ProjectConfig config = load_config(args.config_path);
    if (args.verbose) {
        out << config_to_json(config) << "\n";
    }
    if (config.l_values.empty()) {
        throw ConfigError("config has no sweep section");
    }
    const CoupledSystem sys_template = config.system_at(config.l_values.front());
    SweepOptions options;
    options.parallel = !args.serial;
    SweepResult result =
        sweep(sys_template, config.geometry(), config.l_values, config.grid, config.drive, options);
    if (args.noise > 0.0) {
        add_noise(result, args.noise, args.seed);
    }

    SweepCsvLayout layout;
    layout.scale = args.db ? MagnitudeScale::Decibel : MagnitudeScale::Linear;
    write_sweep_csv(result, args.out_path, layout);

    if (!args.tracks_path.empty()) {
        if (result.l_values.size() < 3) {
            throw ConfigError("--tracks needs a sweep with at least 3 L values");
        }
        write_branch_csv(track_branches(result, args.min_depth), args.tracks_path);
    }
    return kExitOk;
}

struct ClassifyArgs {
    std::string in_path;
    std::string region_text;
    std::string report_path;
    double min_depth = 0.02;
    double gap_threshold = 0.0;
    double merge_tolerance = 0.0;
    bool verbose = false;
};

int cmd_classify(const ClassifyArgs& args, std::ostream& out) {
    const Interval region = parse_region(args.region_text);
    const SweepResult data = read_sweep_csv(args.in_path, detect_sweep_csv_layout(args.in_path));
    if (args.verbose) {
        out << "input: " << args.in_path << " (" << data.l_values.size() << " sweep points)\n"
            << "min_depth: " << args.min_depth << "\n";
    }
    const BranchSet branches = track_branches(data, args.min_depth);
    ClassifyOptions options;
    options.gap_threshold = args.gap_threshold;
    options.merge_tolerance = args.merge_tolerance;
    const CrossingReport report = classify_crossing(branches, region, options);
    print_crossing_report(out, report);
    for (const std::string& warning : branches.warnings) {
        out << "warning: " << warning << "\n";
    }
    if (!args.report_path.empty()) {
        CrossingReportInputs inputs;
        inputs.data_path = args.in_path;
        inputs.region = region;
        inputs.min_depth = args.min_depth;
        save_report(report, inputs, args.report_path);
    }
    return kExitOk;
}

struct FitArgs {
    std::string config_path;
    std::string data_path;
    std::string region_text;
    std::string out_path;
    std::string overlay_path;
    double min_depth = 0.02;
    int starts = 8;
    std::uint64_t seed = 0;
    bool serial = false;
    bool verbose = false;
};

int cmd_fit(const FitArgs& args, std::ostream& out) {
    const ProjectConfig config = load_config(args.config_path);
    if (args.verbose) {
        out << config_to_json(config) << "\n";
    }
    if (!config.fit) {
        throw ConfigError("config has no fit section");
    }
    const Interval region = parse_region(args.region_text);
    const SweepResult data = read_sweep_csv(args.data_path, detect_sweep_csv_layout(args.data_path));
    const SweepResult region_data = filter_region(data, region);
    if (region_data.l_values.empty()) {
        throw ComputeError("no sweep points in region " + args.region_text);
    }
    if (region_data.l_values.size() >= 3) {
        const BranchSet branches = track_branches(region_data, args.min_depth);
        int in_region = 0;
        for (const Branch& branch : branches.branches) {
            if (!branch.points.empty()) {
                ++in_region;
            }
        }
        if (in_region < 2) {
            throw ComputeError("fit region contains fewer than 2 resonance branches");
        }
    }

    const FitProblem problem(config, *config.fit, region_data, args.min_depth);
    FitOptions options;
    options.starts = args.starts;
    options.seed = args.seed;
    options.parallel = !args.serial;
    const FitResult result = problem.fit(options);

    FitReportInputs inputs;
    inputs.config = config;
    inputs.spec = *config.fit;
    inputs.data_path = args.data_path;
    inputs.region = region;
    inputs.seed = args.seed;
    inputs.starts = args.starts;
    save_report(result, inputs, args.out_path);

    // Best-fit overlay: one model trace per data L, on the data grid.
    std::string overlay_path = args.overlay_path;
    if (overlay_path.empty()) {
        const std::size_t dot = args.out_path.find_last_of('.');
        overlay_path = args.out_path.substr(0, dot) + "_overlay.csv";
    }
    const ProjectConfig best = problem.configure(result.parameters);
    SweepResult overlay;
    overlay.l_values = region_data.l_values;
    for (const double l : region_data.l_values) {
        const CoupledSystem sys = best.system_at(l, /*override_domain=*/true);
        SpectrumTrace trace = s21(sys, region_data.traces.front().grid, best.drive);
        trace.sweep_value = l;
        overlay.traces.push_back(std::move(trace));
    }
    write_sweep_csv(overlay, overlay_path, SweepCsvLayout{});

    out << "converged:     " << (result.converged ? "yes" : "no") << "\n";
    out << "residual_rms:  " << result.residual_norm << "\n";
    out << "iterations:    " << result.iterations << "\n";
    for (const auto& [name, value] : result.parameters) {
        out << "  " << name << " = " << value << "\n";
    }
    return result.converged ? kExitOk : kExitNoConvergence;
}

struct PresetsArgs {
    std::string dump_name;
    std::string out_path;
};

int cmd_presets(const PresetsArgs& args, std::ostream& out) {
    if (!args.dump_name.empty()) {
        save_config(preset_config(args.dump_name), args.out_path);
        return kExitOk;
    }
    for (const std::string& name : preset_names()) {
        out << name << "\n";
    }
    return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Coupled-resonator transmission simulator and fitter"};
    app.require_subcommand(1);

    SimulateArgs simulate_args;
    CLI::App* simulate = app.add_subcommand("simulate", "Compute one trace and its peak table");
    simulate->add_option("--config", simulate_args.config_path, "Config JSON")->required();
    simulate->add_option("--l", simulate_args.l, "Sweep parameter L, mm")->required();
    simulate->add_option("--out", simulate_args.out_path, "Trace CSV output")->required();
    simulate->add_option("--min-depth", simulate_args.min_depth, "Peak depth threshold");
    simulate->add_flag("--db", simulate_args.db, "Write magnitudes in dB");
    simulate->add_flag("--force-domain", simulate_args.force_domain, "Allow L outside the declared domain");
    simulate->add_flag("--verbose", simulate_args.verbose, "Print the resolved parameter set");

    SweepArgs sweep_args;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "Run the configured L sweep");
    sweep_cmd->add_option("--config", sweep_args.config_path, "Config JSON")->required();
    sweep_cmd->add_option("--out", sweep_args.out_path, "Sweep CSV output")->required();
    sweep_cmd->add_option("--tracks", sweep_args.tracks_path, "Branch-track CSV output");
    sweep_cmd->add_option("--min-depth", sweep_args.min_depth, "Peak depth threshold");
    sweep_cmd->add_option("--noise", sweep_args.noise, "Gaussian noise sigma on linear |S21|");
    sweep_cmd->add_option("--seed", sweep_args.seed, "Seed for stochastic behavior");
    sweep_cmd->add_flag("--db", sweep_args.db, "Write magnitudes in dB");
    sweep_cmd->add_flag("--serial", sweep_args.serial, "Disable parallel sweep evaluation");
    sweep_cmd->add_flag("--verbose", sweep_args.verbose, "Print the resolved parameter set");

    ClassifyArgs classify_args;
    CLI::App* classify = app.add_subcommand("classify", "Classify a crossing region in a sweep CSV");
    classify->add_option("--in", classify_args.in_path, "Sweep CSV input")->required();
    classify->add_option("--region", classify_args.region_text, "L region as LMIN:LMAX")->required();
    classify->add_option("--min-depth", classify_args.min_depth, "Peak depth threshold");
    classify->add_option("--gap-threshold", classify_args.gap_threshold,
                         "Repulsion gap threshold, GHz (default: 3x mean width)");
    classify->add_option("--merge-tolerance", classify_args.merge_tolerance,
                         "Attraction merge tolerance, GHz (default: 0.5x mean width)");
    classify->add_option("--report", classify_args.report_path, "Write a JSON report");
    classify->add_flag("--verbose", classify_args.verbose, "Print resolved options");

    FitArgs fit_args;
    CLI::App* fit_cmd = app.add_subcommand("fit", "Fit model parameters to sweep data");
    fit_cmd->add_option("--config", fit_args.config_path, "Config JSON with a fit section")->required();
    fit_cmd->add_option("--data", fit_args.data_path, "Sweep CSV data")->required();
    fit_cmd->add_option("--region", fit_args.region_text, "L region as LMIN:LMAX")->required();
    fit_cmd->add_option("--out", fit_args.out_path, "Fit report JSON output")->required();
    fit_cmd->add_option("--overlay", fit_args.overlay_path,
                        "Best-fit overlay CSV (default: report stem + _overlay.csv)");
    fit_cmd->add_option("--min-depth", fit_args.min_depth, "Peak depth threshold");
    fit_cmd->add_option("--starts", fit_args.starts, "Multi-start count");
    fit_cmd->add_option("--seed", fit_args.seed, "Seed for multi-start draws");
    fit_cmd->add_flag("--serial", fit_args.serial, "Disable parallel multi-start");
    fit_cmd->add_flag("--verbose", fit_args.verbose, "Print the resolved parameter set");

    PresetsArgs presets_args;
    CLI::App* presets = app.add_subcommand("presets", "List built-in presets or dump one");
    CLI::Option* dump_opt = presets->add_option("--dump", presets_args.dump_name, "Preset name to dump");
    presets->add_option("--out", presets_args.out_path, "Config JSON output")->needs(dump_opt);

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("ppc");
    for (const std::string& a : args) {
        argv.push_back(a.c_str());
    }

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (simulate->parsed()) {
            return cmd_simulate(simulate_args, out);
        }
        if (sweep_cmd->parsed()) {
            return cmd_sweep(sweep_args, out);
        }
        if (classify->parsed()) {
            return cmd_classify(classify_args, out);
        }
        if (fit_cmd->parsed()) {
            return cmd_fit(fit_args, out);
        }
        if (presets->parsed()) {
            if (!presets_args.dump_name.empty() && presets_args.out_path.empty()) {
                throw ConfigError("presets --dump requires --out");
            }
            return cmd_presets(presets_args, out);
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ComputeError& e) {
        err << "error: " << e.what() << "\n";
        return kExitCompute;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitCompute;
    }
    return kExitUsage;
}

} // namespace ppc
