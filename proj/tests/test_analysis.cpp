#include <doctest.h>

#include "ppc/analysis.hpp"
#include "synthetic.hpp"

using ppc::Complex;

namespace {

ppc::SpectrumTrace lorentzian_dip(double center, double depth, double width,
                                  const ppc::FrequencyGrid& grid) {
    ppc::SpectrumTrace trace;
    trace.grid = grid;
    trace.s21.resize(grid.points());
    const double half = 0.5 * width;
    for (int i = 0; i < grid.points(); ++i) {
        const double d = grid.frequency(i) - center;
        trace.s21[i] = Complex(1.0 - depth * half * half / (d * d + half * half), 0.0);
    }
    return trace;
}

} // namespace

TEST_CASE("find_peaks: single dip, flat trace, and short-trace rejection") {
    const ppc::FrequencyGrid grid(4.0, 6.0, 401);
    const auto trace = lorentzian_dip(5.0, 0.4, 0.05, grid);
    const auto peaks = ppc::find_peaks(trace, 0.05);
    REQUIRE(peaks.size() == 1);
    CHECK(std::abs(peaks[0].frequency - 5.0) <= 0.1 * grid.step());
    CHECK(peaks[0].depth == doctest::Approx(0.4).epsilon(0.01));
    CHECK(peaks[0].width == doctest::Approx(0.05).epsilon(0.05));

    ppc::SpectrumTrace flat;
    flat.grid = grid;
    flat.s21 = Eigen::VectorXcd::Ones(grid.points());
    CHECK(ppc::find_peaks(flat, 0.05).empty());

    ppc::SpectrumTrace tiny;
    tiny.grid = ppc::FrequencyGrid(4.0, 6.0, 4);
    tiny.s21 = Eigen::VectorXcd::Ones(4);
    CHECK_THROWS_AS(ppc::find_peaks(tiny, 0.05), std::invalid_argument);
    CHECK_THROWS_AS(ppc::find_peaks(trace, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ppc::find_peaks(trace, 1.0), std::invalid_argument);
}

TEST_CASE("find_peaks: three far-detuned modes match the eigenvalue positions") {
    Eigen::MatrixXcd coupling = Eigen::MatrixXcd::Zero(3, 3);
    coupling(0, 1) = coupling(1, 0) = Complex(0.05, 0.0);
    coupling(1, 2) = coupling(2, 1) = Complex(0.04, 0.0);
    const ppc::CoupledSystem sys(
        {ppc::Mode("A", 5.0, 0.02387), ppc::Mode("B", 4.2, 0.03579), ppc::Mode("C", 6.1, 0.03290)},
        0.012, coupling);
    const ppc::FrequencyGrid grid(3.6, 6.8, 3201);
    Eigen::VectorXcd drive = Eigen::VectorXcd::Ones(3);
    const auto trace = ppc::s21(sys, grid, drive);
    const auto peaks = ppc::find_peaks(trace, 0.02);
    const auto modes = ppc::eigenmodes(ppc::effective_matrix(sys));
    REQUIRE(peaks.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::abs(peaks[i].frequency - modes[i].eigenvalue.real()) <= 0.5 * grid.step());
    }
}

TEST_CASE("track_branches: decoupled sweep reproduces the bare curves") {
    auto setup = testutil::crossing_setup();
    setup.drive << Complex(1.0, 0.0), Complex(0.7, 0.0);
    const auto result = setup.run();
    const auto set = ppc::track_branches(result, 0.02);

    // Away from the single unresolved point every sample must lie on a bare
    // curve; count how many L values each curve collects.
    std::size_t on_a = 0;
    std::size_t on_b = 0;
    for (const ppc::Branch& branch : set.branches) {
        for (const ppc::BranchPoint& p : branch.points) {
            const std::size_t li = static_cast<std::size_t>(
                std::lround((p.l - result.l_values.front()) / 0.1));
            const double bare_b = result.mode_tracks[1][li];
            const bool near_a = std::abs(p.frequency - 5.0) <= 0.5 * setup.grid.step();
            const bool near_b = std::abs(p.frequency - bare_b) <= 0.5 * setup.grid.step();
            CHECK((near_a || near_b));
            on_a += near_a;
            on_b += near_b;
        }
    }
    CHECK(on_a >= result.l_values.size() - 1);
    CHECK(on_b >= result.l_values.size() - 1);

    // Determinism: identical input, identical result.
    const auto again = ppc::track_branches(result, 0.02);
    REQUIRE(again.branches.size() == set.branches.size());
    for (std::size_t i = 0; i < set.branches.size(); ++i) {
        REQUIRE(again.branches[i].points.size() == set.branches[i].points.size());
        for (std::size_t j = 0; j < set.branches[i].points.size(); ++j) {
            CHECK(again.branches[i].points[j].frequency == set.branches[i].points[j].frequency);
        }
    }
}

TEST_CASE("track_branches: repulsion sweep separates by 2*Delta") {
    const double delta = 0.1;
    const auto setup = testutil::repulsion_setup(delta);
    const auto result = setup.run();
    const auto set = ppc::track_branches(result, 0.02);

    double min_gap = 1e9;
    for (std::size_t li = 0; li < result.l_values.size(); ++li) {
        const double l = result.l_values[li];
        std::vector<double> freqs;
        for (const ppc::Branch& branch : set.branches) {
            for (const ppc::BranchPoint& p : branch.points) {
                if (p.l == l) {
                    freqs.push_back(p.frequency);
                }
            }
        }
        for (std::size_t i = 0; i < freqs.size(); ++i) {
            for (std::size_t j = i + 1; j < freqs.size(); ++j) {
                min_gap = std::min(min_gap, std::abs(freqs[i] - freqs[j]));
            }
        }
    }
    CHECK(min_gap == doctest::Approx(2.0 * delta).epsilon(0.05));
}

TEST_CASE("track_branches: attraction sweep merges over a finite interval") {
    const auto setup = testutil::attraction_setup(0.05);
    const auto result = setup.run();
    const auto set = ppc::track_branches(result, 0.02);

    int merged = 0;
    int separated = 0;
    for (const double l : result.l_values) {
        std::vector<double> freqs;
        for (const ppc::Branch& branch : set.branches) {
            for (const ppc::BranchPoint& p : branch.points) {
                if (p.l == l) {
                    freqs.push_back(p.frequency);
                }
            }
        }
        if (freqs.size() < 2) {
            continue;
        }
        double gap = 1e9;
        for (std::size_t i = 0; i < freqs.size(); ++i) {
            for (std::size_t j = i + 1; j < freqs.size(); ++j) {
                gap = std::min(gap, std::abs(freqs[i] - freqs[j]));
            }
        }
        (gap <= 1e-9 ? merged : separated) += 1;
    }
    CHECK(merged >= 2);    // branches ride one shared dip inside the window
    CHECK(separated >= 2); // and split again outside it
}

TEST_CASE("track_branches preconditions") {
    auto setup = testutil::repulsion_setup(0.1);
    auto result = setup.run();
    ppc::SweepResult two;
    two.l_values = {result.l_values[0], result.l_values[1]};
    two.traces = {result.traces[0], result.traces[1]};
    CHECK_THROWS_AS(ppc::track_branches(two, 0.02), std::invalid_argument);
}

TEST_CASE("classify_crossing: repulsion, attraction, and plain crossing") {
    {
        const auto setup = testutil::repulsion_setup(0.1);
        const auto set = ppc::track_branches(setup.run(), 0.02);
        const auto report = ppc::classify_crossing(set, {9.2, 10.8});
        CHECK(report.classification == ppc::Crossing::Repulsion);
        CHECK(report.gap == doctest::Approx(0.2).epsilon(0.05));
        CHECK(report.coupling_estimate == doctest::Approx(0.1).epsilon(0.05));
    }
    {
        const auto setup = testutil::attraction_setup(0.05);
        const auto set = ppc::track_branches(setup.run(), 0.02);
        const auto report = ppc::classify_crossing(set, {7.6, 12.4});
        CHECK(report.classification == ppc::Crossing::Attraction);
        CHECK(report.gap <= report.merge_tolerance);
    }
    {
        auto setup = testutil::crossing_setup();
        setup.drive << Complex(1.0, 0.0), Complex(0.7, 0.0);
        const auto set = ppc::track_branches(setup.run(), 0.02);
        const auto report = ppc::classify_crossing(set, {9.2, 10.8});
        CHECK(report.classification == ppc::Crossing::Plain);
        CHECK(report.gap <= report.gap_threshold);
    }
}

TEST_CASE("classify_crossing: gap estimator accuracy across coupling strengths") {
    for (const double delta : {0.02, 0.1, 0.3, 0.5}) {
        const auto setup = testutil::repulsion_setup(delta);
        const auto set = ppc::track_branches(setup.run(), 0.02);
        const auto report = ppc::classify_crossing(set, {9.2, 10.8});
        CHECK(report.coupling_estimate >= 0.95 * delta);
        CHECK(report.coupling_estimate <= 1.05 * delta);
    }
}

TEST_CASE("classify_crossing: errors and stability") {
    const auto setup = testutil::repulsion_setup(0.1);
    const auto set = ppc::track_branches(setup.run(), 0.02);

    CHECK_THROWS_AS(ppc::classify_crossing(set, {10.0, 10.2}), std::invalid_argument); // < 5 points

    ppc::BranchSet lone;
    lone.branches.push_back(ppc::Branch{});
    for (int i = 0; i < 8; ++i) {
        lone.branches[0].points.push_back({9.0 + 0.1 * i, 5.0, 0.3, 0.02});
    }
    CHECK_THROWS_AS(ppc::classify_crossing(lone, {9.0, 9.8}), ppc::ComputeError);

    // Classification is invariant under a uniform frequency shift and under a
    // uniform scaling of all depths.
    ppc::BranchSet shifted = set;
    for (ppc::Branch& branch : shifted.branches) {
        for (ppc::BranchPoint& p : branch.points) {
            p.frequency += 2.0;
            p.depth *= 0.5;
        }
    }
    const auto base = ppc::classify_crossing(set, {9.2, 10.8});
    const auto moved = ppc::classify_crossing(shifted, {9.2, 10.8});
    CHECK(base.classification == moved.classification);
    CHECK(moved.gap == doctest::Approx(base.gap).epsilon(1e-12));
}
