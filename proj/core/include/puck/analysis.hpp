#pragma once

#include "puck/core.hpp"
#include "puck/estimation.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace puck {

/// Nonparametric potential: binned mean increments against displacement and
/// their negative cumulative integral.
struct EmpiricalPotential {
    std::vector<double> bin_centers;
    std::vector<double> mean_increment;  // estimate of -dU/dp
    std::vector<std::size_t> counts;
    std::vector<double> u_values;  // zero at the anchor bin
    std::size_t anchor{0};
};

[[nodiscard]] EmpiricalPotential empirical_potential(const TickSeries& series, int m, int n_bins,
                                                     std::size_t min_occupancy = 20);

/// Quadratic coefficients for which the noise-free map
///   P(t+1) - P(t) = -b (P(t) - P_M(t))
/// has every characteristic root other than the persistent unit root strictly
/// inside the unit circle.
struct StabilityInterval {
    double low;
    double high;
    [[nodiscard]] bool contains(double b) const noexcept { return b > low && b < high; }
};

/// Largest modulus among the roots of the characteristic polynomial after the
/// unit root is divided out.
[[nodiscard]] double max_nonunit_root_modulus(double b, int m);

[[nodiscard]] StabilityInterval stability_boundaries(int m);

enum class RegimeState {
    pure_random_walk,
    stable,
    unstable,
    oscillatory_divergent,
    monotonic_divergent,
};

[[nodiscard]] std::string_view to_string(RegimeState state) noexcept;

struct RegimeLabel {
    RegimeState state{RegimeState::pure_random_walk};
    bool precursor_cubic{false};
    double delta_criterion{0.0};  // runner-up family's criterion minus the winner's
};

struct RegimeThresholds {
    double epsilon{0.05};
    double delta_threshold{2.0};
};

/// State from the fitted quadratic coefficient alone; never flags a precursor.
[[nodiscard]] RegimeLabel classify_regime(const FitResult& fit, StabilityInterval boundaries,
                                          const RegimeThresholds& thresholds = {});

/// State of the selected model plus the cubic precursor flag: the winner is
/// gamma = 2 with b_nl != 0 and beats every b_nl == 0 family by more than
/// delta_threshold.
[[nodiscard]] RegimeLabel classify_regime(const ModelSelection& selection,
                                          StabilityInterval boundaries,
                                          const RegimeThresholds& thresholds = {});

struct BarrierReport {
    double well_position{0.0};
    double barrier_position{0.0};
    double barrier_height{0.0};
    double escape_fraction{0.0};
    std::size_t horizon{0};
    std::size_t n_trials{0};
};

/// Cubic barrier geometry plus the Monte Carlo share of walkers, started at
/// zero displacement, whose displacement passes beyond the barrier (plus an
/// optional buffer) within `horizon` steps.
[[nodiscard]] BarrierReport barrier_report(const PotentialModel& model, const NoiseModel& noise,
                                           std::size_t horizon, std::size_t n_trials,
                                           std::uint64_t rng_seed, double buffer = 0.0);

/// Mean squared one-tick increment.
[[nodiscard]] double volatility(const TickSeries& series);

struct ScanOptions {
    std::size_t window{2000};
    std::size_t step{500};
    GridSpec grid;
    Criterion criterion{Criterion::aic};
    FitOptions fit;
    RegimeThresholds thresholds;
};

struct ScanRecord {
    Window window;
    std::optional<ModelSelection> selection;  // empty for degenerate windows
    std::optional<RegimeLabel> regime;
    std::string degenerate_reason;

    [[nodiscard]] bool degenerate() const noexcept { return !selection.has_value(); }
    [[nodiscard]] bool alarm() const noexcept { return regime && regime->precursor_cubic; }
};

[[nodiscard]] std::vector<ScanRecord> scan_windows(const TickSeries& series,
                                                   const ScanOptions& options);

/// Index of the first record raising a precursor alarm.
[[nodiscard]] std::optional<std::size_t> first_alarm(const std::vector<ScanRecord>& records);

}  // namespace puck
