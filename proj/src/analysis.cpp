#include "ppc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace ppc {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw std::invalid_argument(what);
    }
}

// Interpolated frequency where the magnitude crosses `level` between sample j
// and sample j+1.
double crossing_frequency(const FrequencyGrid& grid, const std::vector<double>& mag,
                          int inside, int outside, double level) {
    const double m0 = mag[static_cast<std::size_t>(inside)];
    const double m1 = mag[static_cast<std::size_t>(outside)];
    const double t = (m1 == m0) ? 0.0 : (level - m0) / (m1 - m0);
    return grid.frequency(inside) + t * (grid.frequency(outside) - grid.frequency(inside));
}

} // namespace

const char* to_string(Crossing c) {
    switch (c) {
    case Crossing::Repulsion: return "repulsion";
    case Crossing::Attraction: return "attraction";
    case Crossing::Plain: return "crossing";
    }
    return "crossing";
}

std::vector<Peak> find_peaks(const SpectrumTrace& trace, double min_depth) {
    require(min_depth > 0.0 && min_depth < 1.0, "find_peaks: min_depth must be in (0, 1)");
    const int n = static_cast<int>(trace.s21.size());
    require(n >= 5, "find_peaks: trace needs at least 5 points");

    const std::vector<double> mag = trace.magnitudes();
    std::vector<Peak> peaks;

    for (int i = 1; i + 1 < n; ++i) {
        const double m0 = mag[static_cast<std::size_t>(i)];
        // Strict drop on the left, non-strict on the right: the leftmost point
        // of a flat valley wins, keeping the result deterministic.
        if (!(m0 < mag[static_cast<std::size_t>(i - 1)] && m0 <= mag[static_cast<std::size_t>(i + 1)])) {
            continue;
        }
        if (1.0 - m0 < min_depth) {
            continue;
        }

        // 3-point parabolic refinement around the sampled minimum.
        const double left = mag[static_cast<std::size_t>(i - 1)];
        const double right = mag[static_cast<std::size_t>(i + 1)];
        const double curvature = left - 2.0 * m0 + right;
        double freq = trace.grid.frequency(i);
        double value = m0;
        if (curvature > 0.0) {
            double offset = 0.5 * (left - right) / curvature;
            offset = std::clamp(offset, -0.5, 0.5);
            freq += offset * trace.grid.step();
            value = m0 - 0.25 * (left - right) * offset;
        }

        Peak peak;
        peak.frequency = freq;
        peak.depth = 1.0 - value;

        // Full width at half prominence, interpolated on the sampled trace.
        const double level = 1.0 - 0.5 * peak.depth;
        double f_left = trace.grid.start();
        for (int j = i - 1; j >= 0; --j) {
            if (mag[static_cast<std::size_t>(j)] >= level) {
                f_left = crossing_frequency(trace.grid, mag, j + 1, j, level);
                break;
            }
        }
        double f_right = trace.grid.stop();
        for (int j = i + 1; j < n; ++j) {
            if (mag[static_cast<std::size_t>(j)] >= level) {
                f_right = crossing_frequency(trace.grid, mag, j - 1, j, level);
                break;
            }
        }
        peak.width = std::max(f_right - f_left, 1e-12);
        peaks.push_back(peak);
    }
    return peaks;
}

BranchSet track_branches(const SweepResult& sweep, double min_depth, const TrackOptions& options) {
    require(sweep.l_values.size() >= 3, "track_branches: sweep needs at least 3 L values");
    require(sweep.traces.size() == sweep.l_values.size(),
            "track_branches: traces/l_values size mismatch");
    require(options.max_jump_widths > 0.0, "track_branches: max_jump_widths must be > 0");

    BranchSet set;
    std::vector<std::size_t> active; // indices into set.branches extended at the previous L

    for (std::size_t li = 0; li < sweep.l_values.size(); ++li) {
        const double l = sweep.l_values[li];
        const std::vector<Peak> peaks = find_peaks(sweep.traces[li], min_depth);
        std::vector<bool> claimed(peaks.size(), false);
        std::vector<std::size_t> next_active;

        for (const std::size_t bi : active) {
            const BranchPoint& last = set.branches[bi].points.back();
            const double max_jump = options.max_jump_widths * last.width;
            // Prefer peaks no other branch has claimed at this L; fall back to
            // a shared peak (that is the level-attraction merge).
            int best = -1;
            double best_dist = std::numeric_limits<double>::infinity();
            double second_dist = std::numeric_limits<double>::infinity();
            for (const bool allow_claimed : {false, true}) {
                for (std::size_t pi = 0; pi < peaks.size(); ++pi) {
                    if (claimed[pi] != allow_claimed) {
                        continue;
                    }
                    const double dist = std::abs(peaks[pi].frequency - last.frequency);
                    if (dist > max_jump) {
                        continue;
                    }
                    // Peaks are frequency-ascending, so on an exact tie the
                    // lower-frequency candidate (seen first) wins.
                    if (dist < best_dist) {
                        second_dist = best_dist;
                        best_dist = dist;
                        best = static_cast<int>(pi);
                    } else if (dist < second_dist) {
                        second_dist = dist;
                    }
                }
                if (best >= 0) {
                    break;
                }
            }
            if (best < 0) {
                continue; // branch ends here
            }
            if (std::isfinite(second_dist) && second_dist - best_dist < 0.5 * last.width) {
                std::ostringstream msg;
                msg << "ambiguous link at L = " << l << " mm near " << peaks[static_cast<std::size_t>(best)].frequency
                    << " GHz: two candidates within tolerance";
                set.warnings.push_back(msg.str());
            }
            const Peak& p = peaks[static_cast<std::size_t>(best)];
            set.branches[bi].points.push_back({l, p.frequency, p.depth, p.width});
            claimed[static_cast<std::size_t>(best)] = true;
            next_active.push_back(bi);
        }

        for (std::size_t pi = 0; pi < peaks.size(); ++pi) {
            if (claimed[pi]) {
                continue;
            }
            Branch branch;
            branch.points.push_back({l, peaks[pi].frequency, peaks[pi].depth, peaks[pi].width});
            set.branches.push_back(std::move(branch));
            next_active.push_back(set.branches.size() - 1);
        }
        active = std::move(next_active);
    }
    return set;
}

CrossingReport classify_crossing(const BranchSet& branches, Interval region,
                                 const ClassifyOptions& options) {
    require(region.lo < region.hi, "classify_crossing: empty region");

    // Branch samples inside the region, grouped by L.
    std::map<double, std::vector<const BranchPoint*>> by_l;
    double width_sum = 0.0;
    int width_count = 0;
    int branch_count = 0;
    for (const Branch& branch : branches.branches) {
        bool intersects = false;
        for (const BranchPoint& p : branch.points) {
            if (region.contains(p.l)) {
                by_l[p.l].push_back(&p);
                width_sum += p.width;
                ++width_count;
                intersects = true;
            }
        }
        if (intersects) {
            ++branch_count;
        }
    }

    if (branch_count < 2) {
        throw ComputeError("classify_crossing: fewer than 2 branches intersect the region");
    }
    require(static_cast<int>(by_l.size()) >= 5, "classify_crossing: region needs at least 5 sweep points");

    const double mean_width = width_sum / width_count;
    CrossingReport report;
    report.region = region;
    report.points_in_region = static_cast<int>(by_l.size());
    report.branch_count = branch_count;
    report.gap_threshold = options.gap_threshold > 0.0 ? options.gap_threshold : 3.0 * mean_width;
    report.merge_tolerance = options.merge_tolerance > 0.0 ? options.merge_tolerance : 0.5 * mean_width;

    double min_gap = std::numeric_limits<double>::infinity();
    int merge_run = 0;
    int longest_merge_run = 0;
    bool any_pair = false;
    for (const auto& [l, points] : by_l) {
        if (points.size() < 2) {
            merge_run = 0;
            continue;
        }
        any_pair = true;
        double gap = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < points.size(); ++i) {
            for (std::size_t j = i + 1; j < points.size(); ++j) {
                gap = std::min(gap, std::abs(points[i]->frequency - points[j]->frequency));
            }
        }
        min_gap = std::min(min_gap, gap);
        merge_run = (gap <= report.merge_tolerance) ? merge_run + 1 : 0;
        longest_merge_run = std::max(longest_merge_run, merge_run);
    }

    if (!any_pair) {
        throw ComputeError("classify_crossing: no sweep point in the region has 2 coexisting branches");
    }

    report.gap = min_gap;
    report.coupling_estimate = 0.5 * min_gap;
    if (longest_merge_run >= 2) {
        report.classification = Crossing::Attraction;
    } else if (min_gap > report.gap_threshold) {
        report.classification = Crossing::Repulsion;
    } else {
        report.classification = Crossing::Plain;
    }
    return report;
}

} // namespace ppc
