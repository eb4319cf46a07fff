#pragma once

// =============================================================================
// Resonance-dip extraction, branch tracking across a sweep, and classification
// of interaction regions as level repulsion, level attraction, or a plain
// crossing.
//
// Depths are measured from the |S21| = 1 background, which the adopted
// transmission formula guarantees off resonance.
// =============================================================================

#include <string>
#include <vector>

#include "ppc/spectrum.hpp"

namespace ppc {

/// One resonance dip.
struct Peak {
    double frequency = 0.0; ///< GHz, parabola-refined
    double depth = 0.0;     ///< 1 - |S21| at the minimum
    double width = 0.0;     ///< full width at half prominence, GHz
};

/// One sample of a tracked branch.
struct BranchPoint {
    double l = 0.0;
    double frequency = 0.0;
    double depth = 0.0;
    double width = 0.0;
};

struct Branch {
    std::vector<BranchPoint> points; ///< continuity-ordered, ascending L
};

struct BranchSet {
    std::vector<Branch> branches;
    std::vector<std::string> warnings; ///< ambiguous-link reports
};

enum class Crossing { Repulsion, Attraction, Plain };

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double x) const { return x >= lo && x <= hi; }
};

struct CrossingReport {
    Interval region;
    Crossing classification = Crossing::Plain;
    double gap = 0.0;               ///< minimum inter-branch distance, GHz
    double coupling_estimate = 0.0; ///< gap / 2, GHz
    double gap_threshold = 0.0;     ///< threshold used, GHz
    double merge_tolerance = 0.0;   ///< tolerance used, GHz
    int points_in_region = 0;
    int branch_count = 0;
};

struct TrackOptions {
    /// A branch may jump at most this many of its current linewidths between
    /// adjacent L values.
    double max_jump_widths = 5.0;
};

struct ClassifyOptions {
    double gap_threshold = 0.0;   ///< GHz; 0 selects 3x the mean peak width in the region
    double merge_tolerance = 0.0; ///< GHz; 0 selects 0.5x the mean peak width in the region
};

/// Local minima of |S21| with depth >= min_depth, refined by 3-point parabolic
/// interpolation and sorted by frequency. An empty result is valid.
std::vector<Peak> find_peaks(const SpectrumTrace& trace, double min_depth);

/// Link peaks across adjacent sweep points by nearest-frequency matching under
/// the max-jump constraint. Several branches may share one peak (that is the
/// level-attraction merge); unclaimed peaks start new branches. Deterministic:
/// ties resolve to the lower-frequency candidate.
BranchSet track_branches(const SweepResult& sweep, double min_depth,
                         const TrackOptions& options = {});

/// Classify the interaction inside an L region: attraction when two branches
/// coincide (within the merge tolerance) over at least two consecutive sweep
/// points, repulsion when the minimum gap stays above the gap threshold,
/// plain crossing otherwise.
CrossingReport classify_crossing(const BranchSet& branches, Interval region,
                                 const ClassifyOptions& options = {});

const char* to_string(Crossing c);

} // namespace ppc
