#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace puck {

/// Ordered price observations (the walker trace), optionally time-stamped.
class TickSeries {
  public:
    explicit TickSeries(std::vector<double> prices,
                        std::optional<std::vector<double>> timestamps = std::nullopt,
                        std::string label = {});

    [[nodiscard]] std::size_t size() const noexcept { return prices_.size(); }
    [[nodiscard]] std::span<const double> prices() const noexcept { return prices_; }
    [[nodiscard]] double operator[](std::size_t i) const noexcept { return prices_[i]; }
    [[nodiscard]] const std::optional<std::vector<double>>& timestamps() const noexcept {
        return timestamps_;
    }
    [[nodiscard]] const std::string& label() const noexcept { return label_; }

    /// Copy of ticks [start, start + length).
    [[nodiscard]] TickSeries slice(std::size_t start, std::size_t length) const;

  private:
    std::vector<double> prices_;
    std::optional<std::vector<double>> timestamps_;
    std::string label_;
};

/// Quadratic plus one higher-order term:
///   U(p) = (b_quad / 2) p^2 + (b_nl / (gamma + 1)) p^(gamma + 1)
/// acting on the displacement p = P(t) - P_M(t) from an M-tick moving center.
/// The no-potential model is b_quad == 0 && b_nl == 0.
struct PotentialModel {
    double b_quad{0.0};
    int gamma{2};
    double b_nl{0.0};
    int m{1};
    double sigma{1.0};

    void validate() const;
    [[nodiscard]] bool is_null() const noexcept { return b_quad == 0.0 && b_nl == 0.0; }
    friend bool operator==(const PotentialModel&, const PotentialModel&) = default;
};

enum class NoiseKind { gaussian, student_t };

/// Density of the additive noise f(t). For student_t, sigma is the scale of a
/// standard t variate with `dof` degrees of freedom.
struct NoiseModel {
    NoiseKind kind{NoiseKind::gaussian};
    double sigma{1.0};
    double dof{4.0};

    void validate() const;
    friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

struct SimulationConfig {
    PotentialModel model;
    NoiseModel noise;
    std::size_t n_steps{1};
    std::vector<double> initial_prices;  // warm-up history, length >= model.m
    std::uint64_t rng_seed{0};
    /// Generation stops once |P(t) - P_M(t)| exceeds this value.
    double divergence_limit{1e6};

    void validate() const;
};

/// Simulator output together with the noise actually drawn.
struct SimulationTrace {
    TickSeries series;
    std::vector<double> noise;  // one draw per generated tick
    bool diverged{false};
};

/// Integer power by repeated multiplication; shared by simulation and fitting
/// so that both paths round identically.
[[nodiscard]] constexpr double ipow(double x, int n) noexcept {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
}

/// Mean of prices[t - m + 1 .. t], current tick included.
[[nodiscard]] double moving_center(std::span<const double> prices, std::size_t t, int m);
[[nodiscard]] double moving_center(const TickSeries& series, std::size_t t, int m);

/// P(t) - P_M(t) for t = m-1 .. size-1 (index 0 of the result is tick m-1).
[[nodiscard]] std::vector<double> displacements(std::span<const double> prices, int m);

[[nodiscard]] double potential_value(double p, const PotentialModel& model);

/// -dU/dp.
[[nodiscard]] double potential_force(double p, const PotentialModel& model);

[[nodiscard]] TickSeries simulate(const SimulationConfig& config);
[[nodiscard]] SimulationTrace simulate_traced(const SimulationConfig& config);

/// Noise implied by the dynamics: f(t) = dP(t) + b_quad p(t) + b_nl p(t)^gamma
/// for t = m-1 .. size-2. Output length is size - m.
[[nodiscard]] std::vector<double> residuals(const TickSeries& series, const PotentialModel& model);

/// Same as above with the first residual taken at tick `first_tick` (>= m-1).
[[nodiscard]] std::vector<double> residuals(std::span<const double> prices,
                                            const PotentialModel& model,
                                            std::size_t first_tick);

/// Trailing uniform-weight pre-smoother. Span 1 returns the input unchanged.
[[nodiscard]] TickSeries smooth(const TickSeries& series, int span);

}  // namespace puck
