#include "puck/scenario.hpp"

#include "puck/error.hpp"

#include <cmath>
#include <random>

namespace puck {

DemoScenario make_demo(const DemoSpec& spec, std::uint64_t seed) {
    if (spec.quadratic_length < 1 || spec.cubic_length < 1 || spec.crash_length < 1) {
        throw ArgumentError("every demo segment needs at least one tick");
    }
    if (!(spec.b_quad > 0.0) || spec.b_nl == 0.0) {
        throw ArgumentError("demo needs a well (b_quad > 0) and a cubic term (b_nl != 0)");
    }
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    std::mt19937_64 seeds(seq);

    SimulationConfig quad;
    quad.model = PotentialModel{spec.b_quad, 2, 0.0, spec.m, spec.sigma};
    quad.noise = NoiseModel{NoiseKind::gaussian, spec.sigma, 0.0};
    quad.n_steps = spec.quadratic_length;
    quad.initial_prices.assign(static_cast<std::size_t>(spec.m), spec.start_price);
    quad.rng_seed = seeds();
    const TickSeries first = simulate(quad);
    std::vector<double> prices(first.prices().begin(), first.prices().end());

    DemoScenario out{TickSeries({spec.start_price}), prices.size(), 0, false};

    SimulationConfig cubic = quad;
    cubic.model.b_nl = spec.b_nl;
    cubic.n_steps = spec.cubic_length;
    cubic.initial_prices.assign(prices.end() - spec.m, prices.end());
    cubic.rng_seed = seeds();
    // Stop once the walker is well past the barrier.
    cubic.divergence_limit = 2.0 * std::abs(spec.b_quad / spec.b_nl);
    const auto trace = simulate_traced(cubic);
    const auto cp = trace.series.prices();
    prices.insert(prices.end(), cp.begin() + spec.m, cp.end());
    out.escaped_early = trace.diverged;
    out.crash_start = prices.size();

    std::mt19937_64 rng(seeds());
    std::normal_distribution<double> noise(0.0, spec.sigma);
    for (std::size_t i = 0; i < spec.crash_length; ++i) {
        prices.push_back(prices.back() - spec.crash_drift + noise(rng));
    }
    out.series = TickSeries(std::move(prices), std::nullopt, "demo");
    return out;
}

}  // namespace puck
