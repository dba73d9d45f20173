#pragma once

#include "puck/core.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace puck {

/// Inclusive arithmetic grid low, low + step, ..., high.
struct Range {
    double low{0.0};
    double high{0.0};
    double step{1.0};

    void validate(std::string_view name) const;
    /// Grid values; entries within 1e-9 step of zero are snapped to exactly 0.
    [[nodiscard]] std::vector<double> values() const;
    friend bool operator==(const Range&, const Range&) = default;
};

struct GridSpec {
    Range b_quad{-2.0, 2.0, 0.05};
    Range b_nl{-1.0, 1.0, 0.02};
    std::vector<int> gamma_set{2, 3};
    std::vector<int> m_set{2, 3, 4, 5, 6, 7, 8, 9, 10};
    bool refine{false};

    void validate() const;
    [[nodiscard]] int max_m() const;
    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Nested candidate families, in order of increasing parameter count.
enum class Family { null_potential = 0, quadratic = 1, nonlinear = 2 };

enum class Criterion { aic, bic };

[[nodiscard]] std::string_view to_string(Family family) noexcept;
[[nodiscard]] std::string_view to_string(Criterion criterion) noexcept;

struct Window {
    std::size_t start{0};
    std::size_t length{0};
    friend bool operator==(const Window&, const Window&) = default;
};

struct FitResult {
    PotentialModel model;
    NoiseModel noise;  // noise.sigma == model.sigma
    Family family{Family::null_potential};
    double log_likelihood{0.0};
    double aic{0.0};
    double bic{0.0};
    int k_params{1};
    std::size_t n_obs{0};
    Window window;
    bool selected{false};
    /// m == 1: the center coincides with the price and the force vanishes.
    bool center_degenerate{false};

    [[nodiscard]] double criterion(Criterion c) const noexcept { return c == Criterion::aic ? aic : bic; }
    friend bool operator==(const FitResult&, const FitResult&) = default;
};

struct InformationCriteria {
    double aic;
    double bic;
};

[[nodiscard]] InformationCriteria information_criteria(double log_likelihood, int k_params,
                                                       std::size_t n_obs);

/// Sum of log noise densities of the given residuals.
[[nodiscard]] double log_likelihood(std::span<const double> residuals, const NoiseModel& noise);

/// Log-likelihood of the series under `model`; the noise scale is noise.sigma.
[[nodiscard]] double log_likelihood(const TickSeries& series, const PotentialModel& model,
                                    const NoiseModel& noise);

/// Gaussian maximum-likelihood scale sqrt(mean r^2).
[[nodiscard]] double profile_sigma(std::span<const double> residuals);
[[nodiscard]] double profile_sigma(const TickSeries& series, const PotentialModel& model);

/// Student-t scale maximizing the likelihood, by golden-section search.
[[nodiscard]] double profile_student_scale(std::span<const double> residuals, double dof);

struct FitOptions {
    NoiseKind noise{NoiseKind::gaussian};
    double dof{4.0};
    /// Penalty counts for the null, quadratic and nonlinear families.
    std::array<int, 3> k_params{1, 3, 5};
};

/// Every grid point, profiled over the noise scale, sorted by ascending AIC
/// with ties broken toward smaller k, M, |b_nl|, |b_quad|. All candidates share a
/// warm-up of max(m_set) - 1 ticks, so n_obs is the same for the whole grid.
/// With grid.refine the best point is polished by coordinate descent and the
/// refined result is merged into the list.
[[nodiscard]] std::vector<FitResult> fit_grid(const TickSeries& series, const GridSpec& grid,
                                              const FitOptions& options = {});

struct ModelSelection {
    Criterion criterion{Criterion::aic};
    FitResult best;
    /// Best result of each family (indexed by Family); empty if the grid has no
    /// point of that family.
    std::array<std::optional<FitResult>, 3> family_best;

    /// Runner-up family's criterion minus the winner's (>= 0).
    [[nodiscard]] double runner_up_margin() const;
    /// Best criterion among b_nl == 0 families minus the nonlinear family's.
    /// Positive when the nonlinear term earns its extra parameters.
    [[nodiscard]] std::optional<double> nonlinear_advantage() const;
};

/// Picks the winner among the null, quadratic and quadratic-plus-nonlinear
/// families by the given criterion.
[[nodiscard]] ModelSelection select_model(const TickSeries& series, const GridSpec& grid,
                                          Criterion criterion, const FitOptions& options = {});

/// Strict weak ordering used for sorting fits: criterion value, then parsimony.
[[nodiscard]] bool fit_precedes(const FitResult& lhs, const FitResult& rhs, Criterion criterion);

}  // namespace puck
