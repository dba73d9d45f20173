#pragma once

#include "puck/core.hpp"

#include <cstdint>

namespace puck::testing {

/// Gaussian simulation from a flat warm-up at `start`.
inline SimulationTrace simulate_model(PotentialModel model, double sigma, std::size_t n,
                                      std::uint64_t seed, double divergence_limit = 1e6,
                                      double start = 100.0) {
    SimulationConfig cfg;
    model.sigma = sigma;
    cfg.model = model;
    cfg.noise = NoiseModel{NoiseKind::gaussian, sigma, 0.0};
    cfg.n_steps = n;
    cfg.initial_prices.assign(static_cast<std::size_t>(model.m), start);
    cfg.rng_seed = seed;
    cfg.divergence_limit = divergence_limit;
    return simulate_traced(cfg);
}

inline PotentialModel quadratic(double b_quad, int m) { return PotentialModel{b_quad, 2, 0.0, m, 1.0}; }

inline PotentialModel cubic(double b_quad, double b_nl, int m) {
    return PotentialModel{b_quad, 2, b_nl, m, 1.0};
}

}  // namespace puck::testing
