#pragma once

// =============================================================================
// File interchange: long-format sweep CSV, a Touchstone (.s2p) subset for
// single traces, and structured JSON reports. The CSV magnitude scale is
// always declared (in the layout and in the header), never inferred from the
// values.
// =============================================================================

#include <string>

#include "ppc/analysis.hpp"
#include "ppc/config.hpp"

namespace ppc {

enum class MagnitudeScale { Linear, Decibel };

/// Column layout of the long-format sweep CSV. Columns are always
/// (L, frequency, magnitude); the layout declares scale, header, delimiter.
struct SweepCsvLayout {
    MagnitudeScale scale = MagnitudeScale::Linear;
    bool header = true;
    char delimiter = ',';
};

/// Writes long-format rows (L_mm, freq_GHz, magnitude), L ascending then
/// frequency ascending, 9 significant digits. Deterministic byte-for-byte.
void write_sweep_csv(const SweepResult& sweep, const std::string& path,
                     const SweepCsvLayout& layout = {});

/// Reads a long-format sweep CSV into a data-only SweepResult (mode tracks
/// absent, |S21| stored in the real part). Rows may appear in any order;
/// every L must share one frequency grid. Row-level errors carry line numbers.
SweepResult read_sweep_csv(const std::string& path, const SweepCsvLayout& layout = {});

/// Layout implied by the canonical header line of `path` (`L_mm,freq_GHz,mag`
/// or `L_mm,freq_GHz,mag_dB`). Anything else is an error: the scale must be
/// declared, not guessed.
SweepCsvLayout detect_sweep_csv_layout(const std::string& path);

/// Touchstone .s2p subset: 2-port files with MA, DB, or RI encoding; only the
/// S21 column is consumed; the frequency-unit header is honored (result in
/// GHz). The frequency axis must be uniform.
SpectrumTrace read_touchstone(const std::string& path);

/// Branch tracks as `branch,L_mm,freq_GHz,depth,width_GHz` rows, branch index
/// then L ascending.
void write_branch_csv(const BranchSet& branches, const std::string& path);

struct FitResult; // defined in fit.hpp

struct FitReportInputs {
    ProjectConfig config;
    FitSpec spec;
    std::string data_path;
    Interval region;
    std::uint64_t seed = 0;
    int starts = 0;
};

struct CrossingReportInputs {
    std::string data_path;
    Interval region;
    double min_depth = 0.0;
};

/// Structured JSON reports embedding every input parameter alongside the
/// results, so a report alone reproduces the run.
void save_report(const FitResult& result, const FitReportInputs& inputs, const std::string& path);
void save_report(const CrossingReport& report, const CrossingReportInputs& inputs,
                 const std::string& path);

} // namespace ppc
