#include "puck/core.hpp"

#include "puck/error.hpp"

#include <cmath>
#include <random>
#include <string>

#include <fmt/format.h>

namespace puck {

TickSeries::TickSeries(std::vector<double> prices,
                       std::optional<std::vector<double>> timestamps,
                       std::string label)
    : prices_(std::move(prices)), timestamps_(std::move(timestamps)), label_(std::move(label)) {
    if (prices_.empty()) {
        throw ArgumentError("tick series needs at least one price");
    }
    for (std::size_t i = 0; i < prices_.size(); ++i) {
        if (!std::isfinite(prices_[i])) {
            throw ArgumentError(fmt::format("price at tick {} is not finite", i));
        }
    }
    if (timestamps_) {
        if (timestamps_->size() != prices_.size()) {
            throw ArgumentError("timestamps and prices differ in length");
        }
        for (std::size_t i = 1; i < timestamps_->size(); ++i) {
            if ((*timestamps_)[i] < (*timestamps_)[i - 1]) {
                throw ArgumentError(fmt::format("timestamps decrease at tick {}", i));
            }
        }
    }
}

TickSeries TickSeries::slice(std::size_t start, std::size_t length) const {
    if (length == 0 || start + length > prices_.size()) {
        throw RangeError(fmt::format("slice [{}, {}) outside series of length {}", start,
                                     start + length, prices_.size()));
    }
    auto first = prices_.begin() + static_cast<std::ptrdiff_t>(start);
    std::vector<double> p(first, first + static_cast<std::ptrdiff_t>(length));
    std::optional<std::vector<double>> ts;
    if (timestamps_) {
        auto tf = timestamps_->begin() + static_cast<std::ptrdiff_t>(start);
        ts.emplace(tf, tf + static_cast<std::ptrdiff_t>(length));
    }
    return TickSeries(std::move(p), std::move(ts), label_);
}

void PotentialModel::validate() const {
    if (gamma < 2) throw ArgumentError("gamma must be >= 2");
    if (m < 1) throw ArgumentError("moving-average span m must be >= 1");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ArgumentError("sigma must be > 0");
    if (!std::isfinite(b_quad) || !std::isfinite(b_nl)) {
        throw ArgumentError("potential coefficients must be finite");
    }
}

void NoiseModel::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ArgumentError("noise sigma must be > 0");
    if (kind == NoiseKind::student_t && !(dof > 2.0)) {
        throw ArgumentError("student_t noise needs dof > 2");
    }
}

void SimulationConfig::validate() const {
    model.validate();
    noise.validate();
    if (n_steps < 1) throw ArgumentError("n_steps must be >= 1");
    if (initial_prices.size() < static_cast<std::size_t>(model.m)) {
        throw ArgumentError(fmt::format("warm-up history has {} prices, need at least m = {}",
                                        initial_prices.size(), model.m));
    }
    for (double p : initial_prices) {
        if (!std::isfinite(p)) throw ArgumentError("warm-up prices must be finite");
    }
    if (!(divergence_limit > 0.0)) throw ArgumentError("divergence_limit must be > 0");
}

double moving_center(std::span<const double> prices, std::size_t t, int m) {
    if (m < 1) throw ArgumentError("moving-average span m must be >= 1");
    if (t >= prices.size()) {
        throw RangeError(fmt::format("tick {} outside series of length {}", t, prices.size()));
    }
    const auto span = static_cast<std::size_t>(m);
    if (t + 1 < span) {
        throw RangeError(fmt::format("tick {} has fewer than m = {} prices of history", t, m));
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < span; ++k) sum += prices[t - k];
    return sum / static_cast<double>(m);
}

double moving_center(const TickSeries& series, std::size_t t, int m) {
    return moving_center(series.prices(), t, m);
}

std::vector<double> displacements(std::span<const double> prices, int m) {
    if (m < 1) throw ArgumentError("moving-average span m must be >= 1");
    const auto span = static_cast<std::size_t>(m);
    if (prices.size() < span) return {};
    std::vector<double> out;
    out.reserve(prices.size() - span + 1);
    for (std::size_t t = span - 1; t < prices.size(); ++t) {
        out.push_back(prices[t] - moving_center(prices, t, m));
    }
    return out;
}

double potential_value(double p, const PotentialModel& model) {
    if (!std::isfinite(p)) throw ArgumentError("displacement must be finite");
    return 0.5 * model.b_quad * p * p +
           model.b_nl / static_cast<double>(model.gamma + 1) * ipow(p, model.gamma + 1);
}

namespace {

// Drift term without the argument check, shared with the residual path.
inline double drift(double p, const PotentialModel& model) noexcept {
    return -(model.b_quad * p + model.b_nl * ipow(p, model.gamma));
}

}  // namespace

double potential_force(double p, const PotentialModel& model) {
    if (!std::isfinite(p)) throw ArgumentError("displacement must be finite");
    return drift(p, model);
}

SimulationTrace simulate_traced(const SimulationConfig& config) {
    config.validate();
    const auto& model = config.model;

    std::vector<double> prices = config.initial_prices;
    prices.reserve(prices.size() + config.n_steps);
    std::vector<double> noise;
    noise.reserve(config.n_steps);

    std::mt19937_64 rng(config.rng_seed);
    std::normal_distribution<double> gauss(0.0, config.noise.sigma);
    std::student_t_distribution<double> student(config.noise.dof);
    auto draw = [&]() {
        return config.noise.kind == NoiseKind::gaussian ? gauss(rng)
                                                        : config.noise.sigma * student(rng);
    };

    bool diverged = false;
    for (std::size_t step = 0; step < config.n_steps; ++step) {
        const std::size_t t = prices.size() - 1;
        const double p = prices[t] - moving_center(prices, t, model.m);
        if (std::abs(p) > config.divergence_limit) {
            diverged = true;
            break;
        }
        const double f = draw();
        const double next = prices[t] + drift(p, model) + f;
        if (!std::isfinite(next)) {
            diverged = true;
            break;
        }
        prices.push_back(next);
        noise.push_back(f);
    }
    return SimulationTrace{TickSeries(std::move(prices), std::nullopt, "simulated"),
                           std::move(noise), diverged};
}

TickSeries simulate(const SimulationConfig& config) { return simulate_traced(config).series; }

std::vector<double> residuals(std::span<const double> prices, const PotentialModel& model,
                              std::size_t first_tick) {
    model.validate();
    const auto span = static_cast<std::size_t>(model.m);
    if (first_tick + 1 < span) {
        throw ArgumentError("first residual tick must leave m - 1 ticks of warm-up");
    }
    if (prices.size() < first_tick + 2) {
        throw ArgumentError(fmt::format("series of length {} too short for residuals from tick {}",
                                        prices.size(), first_tick));
    }
    std::vector<double> out;
    out.reserve(prices.size() - first_tick - 1);
    for (std::size_t t = first_tick; t + 1 < prices.size(); ++t) {
        const double p = prices[t] - moving_center(prices, t, model.m);
        out.push_back((prices[t + 1] - prices[t]) - drift(p, model));
    }
    return out;
}

std::vector<double> residuals(const TickSeries& series, const PotentialModel& model) {
    model.validate();
    if (series.size() < static_cast<std::size_t>(model.m) + 1) {
        throw ArgumentError(fmt::format("series of length {} too short for m = {} (need m + 1)",
                                        series.size(), model.m));
    }
    return residuals(series.prices(), model, static_cast<std::size_t>(model.m) - 1);
}

TickSeries smooth(const TickSeries& series, int span) {
    if (span < 1) throw ArgumentError("smoothing span must be >= 1");
    if (span == 1) return series;
    const auto s = static_cast<std::size_t>(span);
    if (series.size() < s) throw ArgumentError("series shorter than smoothing span");
    std::vector<double> out;
    out.reserve(series.size() - s + 1);
    for (std::size_t t = s - 1; t < series.size(); ++t) {
        out.push_back(moving_center(series.prices(), t, span));
    }
    std::optional<std::vector<double>> ts;
    if (series.timestamps()) {
        const auto& src = *series.timestamps();
        ts.emplace(src.begin() + static_cast<std::ptrdiff_t>(s - 1), src.end());
    }
    return TickSeries(std::move(out), std::move(ts), series.label());
}

}  // namespace puck
