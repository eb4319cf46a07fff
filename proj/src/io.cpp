#include "ppc/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ppc/fit.hpp"

namespace ppc {

using nlohmann::ordered_json;

namespace {

std::string format_g9(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", value);
    return buf;
}

double parse_double(const std::string& token, const std::string& context) {
    const char* begin = token.c_str();
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || !std::isfinite(value)) {
        throw ConfigError(context + ": cannot parse number '" + token + "'");
    }
    return value;
}

std::vector<std::string> split(const std::string& line, char delimiter) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, delimiter)) {
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == delimiter) {
        fields.emplace_back();
    }
    return fields;
}

std::string strip(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
        --e;
    }
    return s.substr(b, e - b);
}

std::string header_for(const SweepCsvLayout& layout) {
    const std::string mag = layout.scale == MagnitudeScale::Linear ? "mag" : "mag_dB";
    std::string h = "L_mm";
    h += layout.delimiter;
    h += "freq_GHz";
    h += layout.delimiter;
    h += mag;
    return h;
}

double to_db(double mag) {
    // Floor at -300 dB so exact zeros stay representable.
    return mag <= 1e-15 ? -300.0 : 20.0 * std::log10(mag);
}

// Grid reconstruction: the frequency axis must be uniform (within 1e-6
// relative) because SpectrumTrace carries a uniform FrequencyGrid.
FrequencyGrid grid_from_frequencies(const std::vector<double>& freqs, const std::string& context) {
    if (freqs.size() < 2) {
        throw ConfigError(context + ": need at least 2 frequency points per trace");
    }
    const double step = (freqs.back() - freqs.front()) / static_cast<double>(freqs.size() - 1);
    if (!(step > 0.0)) {
        throw ConfigError(context + ": frequency axis must be strictly ascending");
    }
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        const double expected = freqs.front() + step * static_cast<double>(i);
        if (std::abs(freqs[i] - expected) > 1e-6 * std::max(1.0, std::abs(expected))) {
            throw ConfigError(context + ": frequency axis is not uniform near " +
                              format_g9(freqs[i]) + " GHz");
        }
    }
    return FrequencyGrid(freqs.front(), freqs.back(), static_cast<int>(freqs.size()));
}

} // namespace

void write_sweep_csv(const SweepResult& sweep, const std::string& path,
                     const SweepCsvLayout& layout) {
    if (sweep.traces.empty() || sweep.l_values.size() != sweep.traces.size()) {
        throw std::invalid_argument("write_sweep_csv: sweep must be non-empty and consistent");
    }
    for (const SpectrumTrace& trace : sweep.traces) {
        if (trace.s21.size() == 0) {
            throw std::invalid_argument("write_sweep_csv: empty trace");
        }
    }
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) {
        throw ConfigError("cannot open for writing: " + path);
    }
    if (layout.header) {
        out << header_for(layout) << "\n";
    }
    for (std::size_t li = 0; li < sweep.traces.size(); ++li) {
        const SpectrumTrace& trace = sweep.traces[li];
        for (Eigen::Index k = 0; k < trace.s21.size(); ++k) {
            double mag = std::abs(trace.s21[k]);
            if (layout.scale == MagnitudeScale::Decibel) {
                mag = to_db(mag);
            }
            out << format_g9(sweep.l_values[li]) << layout.delimiter
                << format_g9(trace.grid.frequency(static_cast<int>(k))) << layout.delimiter
                << format_g9(mag) << "\n";
        }
    }
}

SweepResult read_sweep_csv(const std::string& path, const SweepCsvLayout& layout) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open file: " + path);
    }

    std::map<double, std::vector<std::pair<double, double>>> rows_by_l;
    std::string line;
    int line_number = 0;
    bool header_pending = layout.header;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (strip(line).empty()) {
            continue;
        }
        const std::string context = path + ":" + std::to_string(line_number);
        if (header_pending) {
            header_pending = false;
            if (line != header_for(layout)) {
                throw ConfigError(context + ": header '" + line +
                                  "' does not match the declared layout '" + header_for(layout) +
                                  "'");
            }
            continue;
        }
        const std::vector<std::string> fields = split(line, layout.delimiter);
        if (fields.size() != 3) {
            throw ConfigError(context + ": expected 3 columns, got " +
                              std::to_string(fields.size()));
        }
        const double l = parse_double(strip(fields[0]), context);
        const double freq = parse_double(strip(fields[1]), context);
        double mag = parse_double(strip(fields[2]), context);
        if (layout.scale == MagnitudeScale::Decibel) {
            mag = std::pow(10.0, mag / 20.0);
        }
        rows_by_l[l].emplace_back(freq, mag);
    }
    if (rows_by_l.empty()) {
        throw ConfigError(path + ": no data rows");
    }

    SweepResult result;
    std::vector<double> reference_freqs;
    for (auto& [l, rows] : rows_by_l) {
        std::sort(rows.begin(), rows.end());
        std::vector<double> freqs;
        freqs.reserve(rows.size());
        for (const auto& [freq, mag] : rows) {
            (void)mag;
            freqs.push_back(freq);
        }
        if (reference_freqs.empty()) {
            reference_freqs = freqs;
        } else if (freqs != reference_freqs) {
            throw ConfigError(path + ": frequency grid at L = " + format_g9(l) +
                              " differs from the first trace");
        }
        SpectrumTrace trace;
        trace.grid = grid_from_frequencies(freqs, path);
        trace.s21.resize(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t k = 0; k < rows.size(); ++k) {
            trace.s21[static_cast<Eigen::Index>(k)] = Complex(rows[k].second, 0.0);
        }
        trace.sweep_value = l;
        result.l_values.push_back(l);
        result.traces.push_back(std::move(trace));
    }
    return result;
}

SweepCsvLayout detect_sweep_csv_layout(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open file: " + path);
    }
    std::string first;
    if (!std::getline(in, first)) {
        throw ConfigError(path + ": empty file");
    }
    if (!first.empty() && first.back() == '\r') {
        first.pop_back();
    }
    SweepCsvLayout layout;
    layout.scale = MagnitudeScale::Linear;
    if (first == header_for(layout)) {
        return layout;
    }
    layout.scale = MagnitudeScale::Decibel;
    if (first == header_for(layout)) {
        return layout;
    }
    throw ConfigError(path + ": cannot determine magnitude scale: first line is neither '" +
                      "L_mm,freq_GHz,mag' nor 'L_mm,freq_GHz,mag_dB'");
}

SpectrumTrace read_touchstone(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open file: " + path);
    }

    double freq_to_ghz = 1.0; // Touchstone default unit is GHz
    enum class Format { MA, DB, RI };
    Format format = Format::MA;
    bool option_seen = false;

    std::vector<double> freqs;
    std::vector<Complex> s21_values;

    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        const std::size_t bang = line.find('!');
        if (bang != std::string::npos) {
            line = line.substr(0, bang);
        }
        line = strip(line);
        if (line.empty()) {
            continue;
        }
        const std::string context = path + ":" + std::to_string(line_number);

        if (line[0] == '#') {
            if (option_seen) {
                throw ConfigError(context + ": duplicate option line");
            }
            option_seen = true;
            std::istringstream stream(line.substr(1));
            std::string token;
            while (stream >> token) {
                std::string upper = token;
                std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) {
                    return static_cast<char>(std::toupper(c));
                });
                if (upper == "HZ") {
                    freq_to_ghz = 1e-9;
                } else if (upper == "KHZ") {
                    freq_to_ghz = 1e-6;
                } else if (upper == "MHZ") {
                    freq_to_ghz = 1e-3;
                } else if (upper == "GHZ") {
                    freq_to_ghz = 1.0;
                } else if (upper == "MA") {
                    format = Format::MA;
                } else if (upper == "DB") {
                    format = Format::DB;
                } else if (upper == "RI") {
                    format = Format::RI;
                } else if (upper == "S") {
                    // parameter type: only S-parameters are supported
                } else if (upper == "R") {
                    stream >> token; // reference impedance, ignored
                } else {
                    throw ConfigError(context + ": unsupported option token '" + token + "'");
                }
            }
            continue;
        }

        std::istringstream stream(line);
        std::vector<double> values;
        std::string token;
        while (stream >> token) {
            values.push_back(parse_double(token, context));
        }
        if (values.size() != 9) {
            throw ConfigError(context + ": expected 9 columns for a 2-port record, got " +
                              std::to_string(values.size()));
        }
        // 2-port order: f, S11, S21, S12, S22 - S21 is the second pair.
        const double a = values[3];
        const double b = values[4];
        Complex s21_value;
        switch (format) {
        case Format::MA:
            s21_value = std::polar(a, b * M_PI / 180.0);
            break;
        case Format::DB:
            s21_value = std::polar(std::pow(10.0, a / 20.0), b * M_PI / 180.0);
            break;
        case Format::RI:
            s21_value = Complex(a, b);
            break;
        }
        freqs.push_back(values[0] * freq_to_ghz);
        s21_values.push_back(s21_value);
    }

    if (freqs.empty()) {
        throw ConfigError(path + ": no data rows");
    }
    SpectrumTrace trace;
    trace.grid = grid_from_frequencies(freqs, path);
    trace.s21.resize(static_cast<Eigen::Index>(s21_values.size()));
    for (std::size_t i = 0; i < s21_values.size(); ++i) {
        trace.s21[static_cast<Eigen::Index>(i)] = s21_values[i];
    }
    return trace;
}

void write_branch_csv(const BranchSet& branches, const std::string& path) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) {
        throw ConfigError("cannot open for writing: " + path);
    }
    out << "branch,L_mm,freq_GHz,depth,width_GHz\n";
    for (std::size_t bi = 0; bi < branches.branches.size(); ++bi) {
        for (const BranchPoint& p : branches.branches[bi].points) {
            out << bi << ',' << format_g9(p.l) << ',' << format_g9(p.frequency) << ','
                << format_g9(p.depth) << ',' << format_g9(p.width) << "\n";
        }
    }
}

namespace {

ordered_json region_to_json(const Interval& region) {
    return {{"lo", region.lo}, {"hi", region.hi}};
}

void write_json(const ordered_json& root, const std::string& path) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) {
        throw ConfigError("cannot open for writing: " + path);
    }
    out << root.dump(2) << "\n";
}

} // namespace

void save_report(const FitResult& result, const FitReportInputs& inputs, const std::string& path) {
    ordered_json root;
    root["type"] = "fit_report";

    ordered_json in;
    in["config"] = ordered_json::parse(config_to_json(inputs.config));
    ordered_json spec;
    spec["objective"] = inputs.spec.objective == FitObjective::TraceResidual ? "trace" : "branch";
    spec["free"] = ordered_json::array();
    for (const FitParameter& p : inputs.spec.free) {
        spec["free"].push_back(
            {{"name", p.name}, {"initial", p.initial}, {"lower", p.lower}, {"upper", p.upper}});
    }
    ordered_json fixed = ordered_json::object();
    for (const auto& [name, value] : inputs.spec.fixed) {
        fixed[name] = value;
    }
    spec["fixed"] = fixed;
    in["fit_spec"] = spec;
    in["data_path"] = inputs.data_path;
    in["region"] = region_to_json(inputs.region);
    in["seed"] = inputs.seed;
    in["starts"] = inputs.starts;
    root["inputs"] = in;

    ordered_json res;
    res["converged"] = result.converged;
    res["residual_rms"] = result.residual_norm;
    res["iterations"] = result.iterations;
    res["best_start"] = result.best_start;
    ordered_json params = ordered_json::object();
    for (const auto& [name, value] : result.parameters) {
        params[name] = value;
    }
    res["parameters"] = params;
    ordered_json sens = ordered_json::object();
    for (const auto& [name, value] : result.sensitivity) {
        sens[name] = value;
    }
    res["sensitivity"] = sens;
    res["start_residuals"] = result.start_residuals;
    root["result"] = res;

    write_json(root, path);
}

void save_report(const CrossingReport& report, const CrossingReportInputs& inputs,
                 const std::string& path) {
    ordered_json root;
    root["type"] = "crossing_report";

    ordered_json in;
    in["data_path"] = inputs.data_path;
    in["region"] = region_to_json(inputs.region);
    in["min_depth"] = inputs.min_depth;
    root["inputs"] = in;

    ordered_json res;
    res["classification"] = to_string(report.classification);
    res["gap_GHz"] = report.gap;
    res["coupling_estimate_GHz"] = report.coupling_estimate;
    res["gap_threshold_GHz"] = report.gap_threshold;
    res["merge_tolerance_GHz"] = report.merge_tolerance;
    res["points_in_region"] = report.points_in_region;
    res["branch_count"] = report.branch_count;
    root["result"] = res;

    write_json(root, path);
}

} // namespace ppc
